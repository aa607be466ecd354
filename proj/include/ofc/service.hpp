#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "ofc/checker_eval.hpp"
#include "ofc/datasets.hpp"
#include "ofc/jobs.hpp"
#include "ofc/registry.hpp"
#include "ofc/store.hpp"

namespace httplib {
class Server;
}

namespace ofc {

struct ServiceOptions {
  std::filesystem::path data_dir;  // store root
  std::shared_ptr<const SolverRegistry> registry;
  Services services;
  // FactQA question set for LLM evaluation submissions.
  std::optional<std::filesystem::path> questions_path;
  // FactBench gold files by dataset id for checker submissions.
  std::map<std::string, std::filesystem::path> gold_paths;
  // Named pipeline configs: <config_dir>/<config_id>.yaml
  std::optional<std::filesystem::path> config_dir;
  std::string cors_origin = "*";
  std::size_t workers = 4;
};

// The HTTP API:
//
//   POST /v1/check                      run a pipeline (sync) or enqueue it
//   GET  /v1/solvers                    registry listing
//   POST /v1/llm-eval/submissions       enqueue a response-set evaluation
//   POST /v1/checker-eval/submissions   enqueue a checker prediction evaluation
//   GET  /v1/llm-eval/leaderboard       published LLM evaluations, ranked
//   GET  /v1/checker-eval/leaderboard   published checker evaluations, ranked
//   GET  /v1/jobs/{id}                  job status and inline result
//
// Every body carries schema_version. Errors: 400 malformed request or
// chain error, 404 unknown job, 409 duplicate submission_id, 422
// validation failures (with an issue list).
class Service {
 public:
  static constexpr int kSchemaVersion = 1;

  // Opens the store, loads the datasets, runs job recovery and starts the
  // worker pool.
  explicit Service(ServiceOptions options);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Port 0 binds any free port. Returns the bound port; throws IoError.
  int bind(const std::string& host, int port);
  // Serves until stop(). Requires bind().
  void listen();
  void stop();

  JobManager& jobs() { return *jobs_; }
  Store& store() { return *store_; }
  std::size_t recovered_failed() const { return recovered_failed_; }

  // Job handlers, also usable without HTTP.
  nlohmann::json run_check_job(const nlohmann::json& input);
  nlohmann::json run_llm_eval_job(const std::string& job_id, const nlohmann::json& input);
  nlohmann::json run_checker_eval_job(const std::string& job_id, const nlohmann::json& input);

  nlohmann::json llm_leaderboard() const;
  nlohmann::json checker_leaderboard(const std::optional<std::string>& dataset_id) const;

 private:
  void install_routes();

  ServiceOptions options_;
  std::unique_ptr<Store> store_;
  std::vector<FactQAItem> questions_;
  std::map<std::string, GoldSet> gold_;
  std::unique_ptr<JobManager> jobs_;
  std::unique_ptr<httplib::Server> server_;
  std::size_t recovered_failed_ = 0;
};

// OFC_BIND_ADDR style "host:port" (default 127.0.0.1:8080).
std::pair<std::string, int> parse_bind_addr(std::string_view addr);

}  // namespace ofc
