#pragma once

#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "ofc/store.hpp"

namespace ofc {

enum class JobStatus { kQueued, kRunning, kDone, kFailed };

std::string_view to_string(JobStatus status);
std::optional<JobStatus> parse_job_status(std::string_view text);

// Computes a job's result from its input; throwing fails the job.
using JobHandler = std::function<nlohmann::json(const std::string& job_id, const nlohmann::json& input)>;

// Background jobs on a bounded worker pool. Job records live in the store's
// "jobs" collection; status moves only queued -> running -> done | failed.
// The result is written as an artifact before the record flips to done.
class JobManager {
 public:
  JobManager(Store& store, std::map<std::string, JobHandler> handlers, std::size_t workers = 4);
  ~JobManager();

  JobManager(const JobManager&) = delete;
  JobManager& operator=(const JobManager&) = delete;

  // Boot-time pass: jobs left running by a dead process become failed;
  // queued jobs are queued again. Returns the number failed.
  std::size_t recover();

  void start();
  // Lets running jobs finish, leaves queued ones queued.
  void stop();

  // Throws InvalidArgument for an unknown kind.
  std::string submit(const std::string& kind, nlohmann::json input, nlohmann::json attributes = nlohmann::json::object());

  // The public view of a job (input omitted).
  std::optional<nlohmann::json> get(const std::string& job_id) const;

  // Blocks until the queue is empty and no job is running.
  void wait_idle();

 private:
  void worker_loop();
  void run_job(const std::string& job_id);
  bool transition(const std::string& job_id, JobStatus from, JobStatus to, const nlohmann::json& fields);

  Store& store_;
  std::map<std::string, JobHandler> handlers_;
  std::size_t worker_count_;
  std::vector<std::thread> workers_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable idle_;
  std::deque<std::string> queue_;
  std::size_t active_ = 0;
  bool stopping_ = false;
};

std::string new_id(std::string_view prefix);

}  // namespace ofc
