#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace ofc {

// File-backed record store. Each collection lives in its own directory as
// an append-only event log (log.jsonl) plus a snapshot (snapshot.json)
// written by temp-file-and-rename. Opening a collection replays the log
// over the snapshot and then compacts, so a torn final log line from a
// crash is dropped rather than corrupting later appends.
//
// Writers of one collection are serialized; different collections do not
// contend.
class Store {
 public:
  explicit Store(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  // Inserts only if `id` is absent. Returns false (store unchanged) otherwise.
  bool insert(const std::string& collection, const std::string& id, const nlohmann::json& record);
  void put(const std::string& collection, const std::string& id, const nlohmann::json& record);

  // Applies `fn` to the current record under the collection lock and stores
  // the result. Returns false when `id` does not exist or `fn` returns null.
  bool update(const std::string& collection, const std::string& id,
              const std::function<nlohmann::json(const nlohmann::json&)>& fn);

  std::optional<nlohmann::json> get(const std::string& collection, const std::string& id) const;
  // Records ordered by id.
  std::vector<nlohmann::json> list(const std::string& collection) const;

  // Files belonging to records (job outputs), written atomically.
  std::filesystem::path artifact_path(const std::filesystem::path& relative) const;
  void write_artifact(const std::filesystem::path& relative, std::string_view content);

 private:
  struct Collection {
    mutable std::mutex mutex;
    std::filesystem::path dir;
    std::map<std::string, nlohmann::json> records;
    std::uint64_t seq = 0;
    std::size_t log_entries = 0;
  };

  Collection& open(const std::string& collection) const;
  void append(Collection& c, const std::string& id, const nlohmann::json& record);
  void compact(Collection& c);

  std::filesystem::path root_;
  mutable std::mutex collections_mutex_;
  mutable std::map<std::string, std::unique_ptr<Collection>> collections_;
};

}  // namespace ofc
