#include "ofc/jobs.hpp"

#include <algorithm>
#include <cstdio>
#include <random>

#include "ofc/error.hpp"
#include "ofc/util.hpp"

namespace ofc {

using nlohmann::json;

namespace {

constexpr const char* kJobs = "jobs";

}  // namespace

std::string_view to_string(JobStatus status) {
  switch (status) {
    case JobStatus::kQueued: return "queued";
    case JobStatus::kRunning: return "running";
    case JobStatus::kDone: return "done";
    case JobStatus::kFailed: return "failed";
  }
  return "failed";
}

std::optional<JobStatus> parse_job_status(std::string_view text) {
  if (text == "queued") return JobStatus::kQueued;
  if (text == "running") return JobStatus::kRunning;
  if (text == "done") return JobStatus::kDone;
  if (text == "failed") return JobStatus::kFailed;
  return std::nullopt;
}

std::string new_id(std::string_view prefix) {
  static std::mutex mutex;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(mutex);
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(rng()));
  return std::string(prefix) + hex;
}

JobManager::JobManager(Store& store, std::map<std::string, JobHandler> handlers, std::size_t workers)
    : store_(store), handlers_(std::move(handlers)), worker_count_(std::max<std::size_t>(1, workers)) {}

JobManager::~JobManager() { stop(); }

std::size_t JobManager::recover() {
  std::size_t failed = 0;
  std::vector<std::pair<std::string, std::string>> queued;  // (created_at, id)
  for (const auto& job : store_.list(kJobs)) {
    const std::string id = job.at("job_id").get<std::string>();
    const auto status = parse_job_status(job.value("status", ""));
    if (status == JobStatus::kRunning) {
      transition(id, JobStatus::kRunning, JobStatus::kFailed,
                 {{"error", "interrupted: the server stopped while the job was running"},
                  {"finished_at", utc_timestamp()}});
      ++failed;
    } else if (status == JobStatus::kQueued) {
      queued.emplace_back(job.value("created_at", ""), id);
    }
  }
  std::sort(queued.begin(), queued.end());
  {
    std::lock_guard lock(mutex_);
    for (auto& [created, id] : queued) queue_.push_back(id);
  }
  wake_.notify_all();
  return failed;
}

void JobManager::start() {
  std::lock_guard lock(mutex_);
  stopping_ = false;
  while (workers_.size() < worker_count_) workers_.emplace_back([this] { worker_loop(); });
}

void JobManager::stop() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  wake_.notify_all();
  for (auto& w : workers_) {
    if (w.joinable()) w.join();
  }
  workers_.clear();
}

std::string JobManager::submit(const std::string& kind, json input, json attributes) {
  if (!handlers_.contains(kind)) throw Error(ErrorCode::kInvalidArgument, "unknown job kind '" + kind + "'");
  const std::string id = new_id("job_");
  json record = attributes.is_object() ? std::move(attributes) : json::object();
  record["job_id"] = id;
  record["kind"] = kind;
  record["status"] = "queued";
  record["created_at"] = utc_timestamp();
  record["input"] = std::move(input);
  store_.put(kJobs, id, record);
  {
    std::lock_guard lock(mutex_);
    queue_.push_back(id);
  }
  wake_.notify_one();
  return id;
}

std::optional<json> JobManager::get(const std::string& job_id) const {
  auto record = store_.get(kJobs, job_id);
  if (record) record->erase("input");
  return record;
}

void JobManager::wait_idle() {
  std::unique_lock lock(mutex_);
  idle_.wait(lock, [&] { return queue_.empty() && active_ == 0; });
}

bool JobManager::transition(const std::string& job_id, JobStatus from, JobStatus to, const json& fields) {
  return store_.update(kJobs, job_id, [&](const json& current) -> json {
    if (current.value("status", "") != to_string(from)) return nullptr;
    json next = current;
    next["status"] = std::string(to_string(to));
    for (const auto& [key, value] : fields.items()) next[key] = value;
    return next;
  });
}

void JobManager::worker_loop() {
  for (;;) {
    std::string job_id;
    {
      std::unique_lock lock(mutex_);
      wake_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      job_id = std::move(queue_.front());
      queue_.pop_front();
      ++active_;
    }
    run_job(job_id);
    {
      std::lock_guard lock(mutex_);
      --active_;
    }
    idle_.notify_all();
  }
}

void JobManager::run_job(const std::string& job_id) {
  if (!transition(job_id, JobStatus::kQueued, JobStatus::kRunning, {{"started_at", utc_timestamp()}})) return;
  const auto record = store_.get(kJobs, job_id);
  const std::string kind = record->value("kind", "");
  try {
    json result = handlers_.at(kind)(job_id, record->value("input", json::object()));
    const std::string ref = job_id + "/result.json";
    store_.write_artifact(ref, result.dump(2) + "\n");
    transition(job_id, JobStatus::kRunning, JobStatus::kDone,
               {{"result", std::move(result)}, {"result_ref", ref}, {"finished_at", utc_timestamp()}});
  } catch (const std::exception& e) {
    std::string message = e.what();
    if (const auto* error = dynamic_cast<const Error*>(&e)) {
      message = std::string(to_string(error->code())) + ": " + message;
    }
    transition(job_id, JobStatus::kRunning, JobStatus::kFailed,
               {{"error", message}, {"finished_at", utc_timestamp()}});
  }
}

}  // namespace ofc
