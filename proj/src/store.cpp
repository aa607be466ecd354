#include "ofc/store.hpp"

#include <cctype>

#include <fcntl.h>
#include <unistd.h>

#include "ofc/error.hpp"
#include "ofc/util.hpp"

namespace ofc {

using nlohmann::json;

namespace {

constexpr std::size_t kCompactEvery = 64;

bool valid_name(std::string_view name) {
  if (name.empty() || name == "." || name == "..") return false;
  for (char c : name) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
  }
  return true;
}

}  // namespace

Store::Store(std::filesystem::path root) : root_(std::move(root)) { std::filesystem::create_directories(root_); }

Store::Collection& Store::open(const std::string& collection) const {
  if (!valid_name(collection)) throw Error(ErrorCode::kInvalidArgument, "bad collection name '" + collection + "'");
  std::lock_guard lock(collections_mutex_);
  auto& slot = collections_[collection];
  if (slot) return *slot;

  auto c = std::make_unique<Collection>();
  c->dir = root_ / collection;
  std::filesystem::create_directories(c->dir);
  const auto snapshot = c->dir / "snapshot.json";
  if (std::filesystem::exists(snapshot)) {
    json parsed = json::parse(read_file(snapshot), nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object()) {
      throw Error(ErrorCode::kIo, "unreadable snapshot " + snapshot.string());
    }
    c->seq = parsed.value("seq", std::uint64_t{0});
    for (auto& [id, record] : parsed["records"].items()) c->records[id] = record;
  }
  const auto log = c->dir / "log.jsonl";
  if (std::filesystem::exists(log)) {
    for (const auto& line : split_lines(read_file(log))) {
      json event = json::parse(line, nullptr, false);
      // A torn last line from an interrupted append.
      if (event.is_discarded() || !event.is_object() || !event.contains("seq")) continue;
      const auto seq = event["seq"].get<std::uint64_t>();
      if (seq <= c->seq) continue;
      c->records[event["id"].get<std::string>()] = event["record"];
      c->seq = seq;
    }
  }
  auto& ref = *c;
  slot = std::move(c);
  const_cast<Store*>(this)->compact(ref);
  return ref;
}

void Store::compact(Collection& c) {
  json records = json::object();
  for (const auto& [id, record] : c.records) records[id] = record;
  write_file_atomic(c.dir / "snapshot.json", json{{"seq", c.seq}, {"records", records}}.dump() + "\n");
  write_file_atomic(c.dir / "log.jsonl", "");
  c.log_entries = 0;
}

void Store::append(Collection& c, const std::string& id, const json& record) {
  c.records[id] = record;
  ++c.seq;
  const std::string line = json{{"seq", c.seq}, {"id", id}, {"record", record}}.dump() + "\n";
  const auto path = c.dir / "log.jsonl";
  const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  const char* data = line.data();
  std::size_t left = line.size();
  while (left > 0) {
    const ssize_t n = ::write(fd, data, left);
    if (n < 0) {
      ::close(fd);
      throw Error(ErrorCode::kIo, "cannot append to " + path.string());
    }
    data += n;
    left -= static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
  if (++c.log_entries >= kCompactEvery) compact(c);
}

bool Store::insert(const std::string& collection, const std::string& id, const json& record) {
  auto& c = open(collection);
  std::lock_guard lock(c.mutex);
  if (c.records.contains(id)) return false;
  append(c, id, record);
  return true;
}

void Store::put(const std::string& collection, const std::string& id, const json& record) {
  auto& c = open(collection);
  std::lock_guard lock(c.mutex);
  append(c, id, record);
}

bool Store::update(const std::string& collection, const std::string& id,
                   const std::function<json(const json&)>& fn) {
  auto& c = open(collection);
  std::lock_guard lock(c.mutex);
  auto it = c.records.find(id);
  if (it == c.records.end()) return false;
  json next = fn(it->second);
  if (next.is_null()) return false;
  append(c, id, next);
  return true;
}

std::optional<json> Store::get(const std::string& collection, const std::string& id) const {
  auto& c = open(collection);
  std::lock_guard lock(c.mutex);
  auto it = c.records.find(id);
  if (it == c.records.end()) return std::nullopt;
  return it->second;
}

std::vector<json> Store::list(const std::string& collection) const {
  auto& c = open(collection);
  std::lock_guard lock(c.mutex);
  std::vector<json> out;
  out.reserve(c.records.size());
  for (const auto& [id, record] : c.records) out.push_back(record);
  return out;
}

std::filesystem::path Store::artifact_path(const std::filesystem::path& relative) const {
  return root_ / "artifacts" / relative;
}

void Store::write_artifact(const std::filesystem::path& relative, std::string_view content) {
  const auto path = artifact_path(relative);
  std::filesystem::create_directories(path.parent_path());
  write_file_atomic(path, content);
}

}  // namespace ofc
