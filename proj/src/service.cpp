#include "ofc/service.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>
#include <sstream>

#include <httplib.h>

#include "ofc/engine.hpp"
#include "ofc/error.hpp"
#include "ofc/llm_eval.hpp"
#include "ofc/util.hpp"

namespace ofc {

using nlohmann::json;

namespace {

constexpr const char* kLlmSubmissions = "llm_submissions";
constexpr const char* kCheckerSubmissions = "checker_submissions";
constexpr const char* kLlmLeaderboard = "llm_leaderboard";
constexpr const char* kCheckerLeaderboard = "checker_leaderboard";

// Raised inside request handlers and mapped to an HTTP error body.
struct HttpError {
  int status;
  json body;
};

json error_body(std::string_view code, const std::string& message, const std::string& reason = {}) {
  json body = {{"error", code}, {"message", message}};
  if (!reason.empty()) body["reason"] = reason;
  return body;
}

HttpError unprocessable(std::string_view code, const std::string& message, const std::string& field = {}) {
  json issue = {{"line", 0}, {"code", code}, {"field", field}, {"message", message}};
  json body = error_body(code, message);
  body["issues"] = json::array({issue});
  return {422, std::move(body)};
}

HttpError from_validation(const ValidationError& e) {
  json body = error_body(to_string(e.code()), e.what());
  body["issues"] = json::array();
  for (const auto& issue : e.issues()) body["issues"].push_back(issue.to_json());
  return {422, std::move(body)};
}

void send(httplib::Response& res, int status, json body) {
  body["schema_version"] = Service::kSchemaVersion;
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) {
    throw HttpError{400, error_body("SyntaxError", "request body must be a JSON object")};
  }
  return body;
}

bool valid_name(std::string_view name) {
  if (name.empty() || name.size() > 128) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  }) && name.front() != '.';
}

std::optional<std::string> string_field(const json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw unprocessable("SchemaError", std::string(key) + " must be a string", key);
  return it->get<std::string>();
}

bool bool_field(const json& body, const char* key, bool fallback) {
  auto it = body.find(key);
  if (it == body.end() || it->is_null()) return fallback;
  if (!it->is_boolean()) throw unprocessable("SchemaError", std::string(key) + " must be a boolean", key);
  return it->get<bool>();
}

// Runs `fn`, mapping library errors raised while reading a request to 422.
template <typename Fn>
auto validating(Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    throw from_validation(e);
  } catch (const ChainValidationError& e) {
    json body = error_body(to_string(e.code()), e.what());
    body["chain_error"] = e.detail().to_json();
    throw HttpError{400, std::move(body)};
  } catch (const Error& e) {
    throw unprocessable(to_string(e.code()), e.what(), e.reason());
  }
}

}  // namespace

std::pair<std::string, int> parse_bind_addr(std::string_view addr) {
  std::string_view text = trim(addr);
  if (text.empty()) return {"127.0.0.1", 8080};
  auto colon = text.rfind(':');
  if (colon == std::string_view::npos) {
    throw Error(ErrorCode::kInvalidArgument, "bind address must be host:port, got '" + std::string(text) + "'");
  }
  std::string host(text.substr(0, colon));
  std::string_view port_text = text.substr(colon + 1);
  int port = -1;
  auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc() || ptr != port_text.data() + port_text.size() || port < 0 || port > 65535) {
    throw Error(ErrorCode::kInvalidArgument, "bad port in bind address '" + std::string(text) + "'");
  }
  if (host.empty()) host = "127.0.0.1";
  return {host, port};
}

Service::Service(ServiceOptions options) : options_(std::move(options)) {
  if (!options_.registry) throw Error(ErrorCode::kInvalidArgument, "service needs a solver registry");
  store_ = std::make_unique<Store>(options_.data_dir);
  if (options_.questions_path) questions_ = load_factqa(*options_.questions_path);
  for (const auto& [dataset_id, path] : options_.gold_paths) {
    gold_.emplace(dataset_id, build_gold_set(load_factbench(path), dataset_id));
  }

  std::map<std::string, JobHandler> handlers;
  handlers["check"] = [this](const std::string&, const json& input) { return run_check_job(input); };
  handlers["llm_eval"] = [this](const std::string& id, const json& input) { return run_llm_eval_job(id, input); };
  handlers["checker_eval"] = [this](const std::string& id, const json& input) {
    return run_checker_eval_job(id, input);
  };
  jobs_ = std::make_unique<JobManager>(*store_, std::move(handlers), options_.workers);
  recovered_failed_ = jobs_->recover();
  jobs_->start();

  server_ = std::make_unique<httplib::Server>();
  install_routes();
}

Service::~Service() {
  stop();
  jobs_->stop();
}

int Service::bind(const std::string& host, int port) {
  int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound <= 0) {
    throw Error(ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(port));
  }
  return bound;
}

void Service::listen() { server_->listen_after_bind(); }

void Service::stop() {
  if (server_ && server_->is_running()) server_->stop();
}

namespace {

struct CheckRequest {
  PipelineConfig config;
  std::string text;
  std::optional<std::string> question;
  std::optional<std::vector<std::string>> claims;
  std::size_t start_at = 0;
};

CheckRequest check_request_from_json(const json& input) {
  CheckRequest request;
  request.config = config_from_json(input.at("config"));
  request.text = input.value("text", "");
  if (input.contains("question") && input["question"].is_string()) request.question = input["question"];
  if (input.contains("claims") && input["claims"].is_array()) {
    request.claims = input["claims"].get<std::vector<std::string>>();
  }
  request.start_at = input.value("start_at", std::size_t{0});
  return request;
}

json check_request_to_json(const CheckRequest& request) {
  json out = {{"config", to_json(request.config)}, {"text", request.text}, {"start_at", request.start_at}};
  if (request.question) out["question"] = *request.question;
  if (request.claims) out["claims"] = *request.claims;
  return out;
}

}  // namespace

json Service::run_check_job(const json& input) {
  CheckRequest request = check_request_from_json(input);
  FactCheckState state = FactCheckState::for_document(request.text);
  state.question = request.question;
  if (request.claims) {
    const auto& binding = request.config.solvers.at(std::min(request.start_at, request.config.solvers.size() - 1));
    seed_claims(state, binding.input_name, *request.claims);
  }
  CostMeter meter(options_.services.pricing());
  FactCheckState result =
      run_pipeline(std::move(state), request.config, *options_.registry, options_.services, meter, request.start_at);
  return {{"state", to_json(result, true)}};
}

json Service::run_llm_eval_job(const std::string& job_id, const json& input) {
  const std::string submission_id = input.at("submission_id");
  auto record = store_->get(kLlmSubmissions, submission_id);
  if (!record) throw Error(ErrorCode::kNotFound, "submission " + submission_id + " is gone");

  ResponseSubmission submission;
  submission.model_name = record->at("model_name");
  for (const auto& item : record->at("responses")) {
    submission.items.push_back({item.at("question_id"), item.at("response")});
  }

  LlmEvalOptions options;
  options.families.clear();
  for (const auto& name : record->at("families")) options.families.insert(*parse_family(name.get<std::string>()));
  options.judge = options_.services.gateway.get();
  if (record->contains("config")) options.pipeline = config_from_json(record->at("config"));
  options.registry = options_.registry.get();
  options.services = &options_.services;

  LlmEvalOutcome outcome = run_llm_eval(questions_, submission, options);
  write_report_files(store_->artifact_path(job_id), outcome);

  json report = to_json(outcome.report);
  const Tally& overall = outcome.report.overall;
  json summary = {{"submission_id", submission_id},
                  {"model_name", submission.model_name},
                  {"accuracy", overall.accuracy()},
                  {"correct", overall.correct},
                  {"valid", overall.total},
                  {"total_questions", outcome.report.total_questions},
                  {"families", record->at("families")},
                  {"submitted_at", record->at("submitted_at")},
                  {"job_id", job_id}};
  store_->update(kLlmSubmissions, submission_id, [&](const json& current) {
    json next = current;
    next["evaluated"] = true;
    next["summary"] = summary;
    return next;
  });
  if (record->value("publish", false)) store_->put(kLlmLeaderboard, submission_id, summary);

  return {{"submission_id", submission_id},
          {"report", report},
          {"judge_cost_usd", outcome.judge_cost.to_string()},
          {"skipped", outcome.skipped},
          {"notes", outcome.notes},
          {"artifacts", {job_id + "/report.json", job_id + "/report.md", job_id + "/results.jsonl"}}};
}

json Service::run_checker_eval_job(const std::string& job_id, const json& input) {
  const std::string submission_id = input.at("submission_id");
  auto record = store_->get(kCheckerSubmissions, submission_id);
  if (!record) throw Error(ErrorCode::kNotFound, "submission " + submission_id + " is gone");

  CheckerSubmission submission = parse_checker_submission(record->at("file").get<std::string>());
  submission.submission_id = submission_id;
  auto gold = gold_.find(submission.dataset_id);
  if (gold == gold_.end()) throw Error(ErrorCode::kUnresolvedId, "unknown dataset " + submission.dataset_id);

  MetricsReport metrics = evaluate_submission(submission, gold->second);
  json metrics_json = to_json(metrics);
  write_checker_files(store_->artifact_path(job_id), metrics, submission);

  LeaderboardEntry entry{submission_id,
                         submission.system_name,
                         submission.dataset_id,
                         metrics,
                         submission.total_cost,
                         submission.total_latency_s,
                         record->at("submitted_at"),
                         true};
  store_->update(kCheckerSubmissions, submission_id, [&](const json& current) {
    json next = current;
    next["evaluated"] = true;
    next["metrics"] = metrics_json;
    return next;
  });
  if (record->value("publish", false)) store_->put(kCheckerLeaderboard, submission_id, to_json(entry));

  return {{"submission_id", submission_id},
          {"dataset_id", submission.dataset_id},
          {"metrics", metrics_json},
          {"artifacts", {job_id + "/metrics.json", job_id + "/report.md"}}};
}

json Service::llm_leaderboard() const {
  std::vector<json> entries = store_->list(kLlmLeaderboard);
  std::stable_sort(entries.begin(), entries.end(), [](const json& a, const json& b) {
    double fa = a.at("accuracy"), fb = b.at("accuracy");
    if (fa != fb) return fa > fb;
    if (a.at("submitted_at") != b.at("submitted_at")) return a.at("submitted_at") < b.at("submitted_at");
    return a.at("submission_id") < b.at("submission_id");
  });
  json out = json::array();
  std::size_t rank = 0;
  for (auto& entry : entries) {
    entry["rank"] = ++rank;
    out.push_back(std::move(entry));
  }
  return out;
}

json Service::checker_leaderboard(const std::optional<std::string>& dataset_id) const {
  std::vector<LeaderboardEntry> all;
  std::set<std::string> datasets;
  for (const auto& record : store_->list(kCheckerLeaderboard)) {
    all.push_back(leaderboard_entry_from_json(record));
    datasets.insert(all.back().dataset_id);
  }
  if (dataset_id) datasets = {*dataset_id};
  json out = json::array();
  for (const auto& id : datasets) {
    std::size_t rank = 0;
    for (const auto& entry : rank_leaderboard(all, id)) {
      json row = to_json(entry);
      row["rank"] = ++rank;
      out.push_back(std::move(row));
    }
  }
  return out;
}

void Service::install_routes() {
  httplib::Server& server = *server_;
  server.set_payload_max_length(64u << 20);
  server.set_default_headers({{"Access-Control-Allow-Origin", options_.cors_origin},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});

  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const HttpError& e) {
      send(res, e.status, e.body);
    } catch (const Error& e) {
      send(res, 500, error_body(to_string(e.code()), e.what(), e.reason()));
    } catch (const std::exception& e) {
      send(res, 500, error_body("InternalError", e.what()));
    } catch (...) {
      send(res, 500, error_body("InternalError", "unknown failure"));
    }
  });

  // Handlers throw HttpError; wrapping routes keeps httplib from seeing
  // anything but a finished response.
  auto route = [](auto fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const HttpError& e) {
        send(res, e.status, e.body);
      }
    };
  };

  server.Get("/v1/solvers", route([this](const httplib::Request&, httplib::Response& res) {
    send(res, 200, {{"solvers", to_json(*options_.registry)}});
  }));

  server.Post("/v1/check", route([this](const httplib::Request& req, httplib::Response& res) {
    json body = parse_body(req);
    CheckRequest request = validating([&] {
      CheckRequest r;
      auto text = string_field(body, "text");
      if (!text) throw Error(ErrorCode::kSchema, "MissingField", "text is required");
      r.text = *text;
      r.question = string_field(body, "question");
      if (body.contains("inline_config")) {
        const json& inline_config = body["inline_config"];
        r.config = inline_config.is_string() ? parse_config(inline_config.get<std::string>())
                                             : config_from_json(inline_config);
      } else if (auto config_id = string_field(body, "config_id")) {
        if (!options_.config_dir || !valid_name(*config_id)) {
          throw Error(ErrorCode::kNotFound, "unknown config_id '" + *config_id + "'");
        }
        auto path = *options_.config_dir / (*config_id + ".yaml");
        std::error_code ec;
        if (!std::filesystem::is_regular_file(path, ec)) {
          throw Error(ErrorCode::kNotFound, "unknown config_id '" + *config_id + "'");
        }
        r.config = parse_config(read_file(path));
      } else {
        throw Error(ErrorCode::kSchema, "MissingField", "config_id or inline_config is required");
      }
      if (body.contains("claims") && !body["claims"].is_null()) {
        if (!body["claims"].is_array()) throw Error(ErrorCode::kSchema, "InvalidParam", "claims must be an array");
        std::vector<std::string> claims;
        for (const auto& c : body["claims"]) {
          if (!c.is_string()) throw Error(ErrorCode::kSchema, "InvalidParam", "claims must be strings");
          claims.push_back(c);
        }
        r.claims = std::move(claims);
      }
      if (body.contains("start_at") && !body["start_at"].is_null()) {
        if (!body["start_at"].is_number_unsigned() || body["start_at"].get<std::size_t>() >= r.config.solvers.size()) {
          throw Error(ErrorCode::kSchema, "InvalidParam", "start_at must index a solver of the pipeline");
        }
        r.start_at = body["start_at"];
      }
      if (auto problem = validate_chain(r.config, *options_.registry)) throw ChainValidationError(*problem);
      if (r.start_at > 0 && !r.claims) {
        const auto& binding = r.config.solvers[r.start_at];
        throw Error(ErrorCode::kMissingInputSlot,
                    "starting at solver " + std::to_string(r.start_at) + " needs slot '" + binding.input_name +
                        "'; pass claims");
      }
      return r;
    });

    if (bool_field(body, "sync", false)) {
      json result = validating([&] { return run_check_job(check_request_to_json(request)); });
      send(res, 200, std::move(result));
      return;
    }
    std::string job_id = jobs_->submit("check", check_request_to_json(request));
    send(res, 202, {{"job_id", job_id}, {"status", "queued"}});
  }));

  server.Post("/v1/llm-eval/submissions", route([this](const httplib::Request& req, httplib::Response& res) {
    json body = parse_body(req);
    json record = validating([&] {
      std::string model_name = string_field(body, "model_name").value_or("");
      std::vector<SubmittedResponse> items;
      if (auto jsonl = string_field(body, "responses_jsonl")) {
        std::string header_model;
        items = read_responses(*jsonl, &header_model, &questions_).value();
        if (model_name.empty()) model_name = header_model;
      } else if (body.contains("responses") && body["responses"].is_array()) {
        std::ostringstream lines;
        for (const auto& item : body["responses"]) lines << item.dump() << "\n";
        items = read_responses(lines.str(), nullptr, &questions_).value();
      } else {
        throw Error(ErrorCode::kSchema, "MissingField", "responses or responses_jsonl is required");
      }
      if (model_name.empty()) throw Error(ErrorCode::kSchema, "MissingField", "model_name is required");
      if (items.empty()) throw Error(ErrorCode::kNoResults, "the submission holds no responses");

      json families = json::array();
      if (body.contains("families") && !body["families"].is_null()) {
        if (!body["families"].is_array()) throw Error(ErrorCode::kSchema, "InvalidParam", "families must be an array");
        for (const auto& f : body["families"]) {
          if (!f.is_string() || !parse_family(f.get<std::string>())) {
            throw Error(ErrorCode::kSchema, "InvalidParam", "unknown family " + f.dump());
          }
          families.push_back(f);
        }
      } else {
        for (auto f : {Family::kSnowball, Family::kSelfAware, Family::kFreshQa, Family::kFreeform}) {
          families.push_back(to_string(f));
        }
      }

      json out = {{"model_name", model_name}, {"families", families}, {"publish", bool_field(body, "publish", false)}};
      if (body.contains("inline_config")) {
        const json& inline_config = body["inline_config"];
        PipelineConfig config = inline_config.is_string() ? parse_config(inline_config.get<std::string>())
                                                          : config_from_json(inline_config);
        if (auto problem = validate_chain(config, *options_.registry)) throw ChainValidationError(*problem);
        out["config"] = to_json(config);
      }
      out["responses"] = json::array();
      for (const auto& item : items) {
        out["responses"].push_back({{"question_id", item.question_id}, {"response", item.response_text}});
      }
      return out;
    });

    std::string submission_id = string_field(body, "submission_id").value_or(new_id("llm"));
    if (!valid_name(submission_id)) throw unprocessable("SchemaError", "submission_id is not a valid name");
    record["submission_id"] = submission_id;
    record["submitted_at"] = utc_timestamp();
    if (!store_->insert(kLlmSubmissions, submission_id, record)) {
      throw HttpError{409, error_body("Conflict", "submission_id '" + submission_id + "' already exists")};
    }
    std::string job_id = jobs_->submit("llm_eval", {{"submission_id", submission_id}},
                                       {{"submission_id", submission_id}});
    store_->update(kLlmSubmissions, submission_id, [&](const json& current) {
      json next = current;
      next["job_id"] = job_id;
      return next;
    });
    send(res, 202, {{"job_id", job_id}, {"submission_id", submission_id}, {"status", "queued"}});
  }));

  server.Post("/v1/checker-eval/submissions", route([this](const httplib::Request& req, httplib::Response& res) {
    json body = parse_body(req);
    auto [submission, file] = validating([&] {
      std::string file;
      if (auto text = string_field(body, "submission")) {
        file = *text;
      } else {
        json header = json::object();
        for (const char* key : {"system_name", "dataset_id", "total_latency_s", "total_cost_usd", "meta"}) {
          if (body.contains(key)) header[key] = body[key];
        }
        std::ostringstream lines;
        lines << header.dump() << "\n";
        if (!body.contains("predictions") || !body["predictions"].is_array()) {
          throw Error(ErrorCode::kSchema, "MissingField", "submission or predictions is required");
        }
        for (const auto& p : body["predictions"]) lines << p.dump() << "\n";
        file = lines.str();
      }
      CheckerSubmission parsed = parse_checker_submission(file);
      auto gold = gold_.find(parsed.dataset_id);
      if (gold == gold_.end()) {
        throw ValidationError({RecordIssue{1, ErrorCode::kUnresolvedId, "dataset_id",
                                           "unknown dataset '" + parsed.dataset_id + "'"}});
      }
      align(parsed, gold->second);
      return std::pair{std::move(parsed), std::move(file)};
    });

    std::string submission_id = string_field(body, "submission_id")
                                    .value_or(submission.submission_id.empty() ? new_id("chk")
                                                                               : submission.submission_id);
    if (!valid_name(submission_id)) throw unprocessable("SchemaError", "submission_id is not a valid name");
    json record = {{"submission_id", submission_id},
                   {"system_name", submission.system_name},
                   {"dataset_id", submission.dataset_id},
                   {"publish", bool_field(body, "publish", false)},
                   {"submitted_at", utc_timestamp()},
                   {"file", file}};
    if (!store_->insert(kCheckerSubmissions, submission_id, record)) {
      throw HttpError{409, error_body("Conflict", "submission_id '" + submission_id + "' already exists")};
    }
    std::string job_id = jobs_->submit("checker_eval", {{"submission_id", submission_id}},
                                       {{"submission_id", submission_id}});
    store_->update(kCheckerSubmissions, submission_id, [&](const json& current) {
      json next = current;
      next["job_id"] = job_id;
      return next;
    });
    send(res, 202, {{"job_id", job_id}, {"submission_id", submission_id}, {"status", "queued"}});
  }));

  server.Get("/v1/llm-eval/leaderboard", route([this](const httplib::Request&, httplib::Response& res) {
    send(res, 200, {{"entries", llm_leaderboard()}});
  }));

  server.Get("/v1/checker-eval/leaderboard", route([this](const httplib::Request& req, httplib::Response& res) {
    std::optional<std::string> dataset_id;
    if (req.has_param("dataset_id")) dataset_id = req.get_param_value("dataset_id");
    json body = {{"entries", checker_leaderboard(dataset_id)}};
    if (dataset_id) body["dataset_id"] = *dataset_id;
    send(res, 200, std::move(body));
  }));

  server.Get(R"(/v1/jobs/([A-Za-z0-9_\-]+))", route([this](const httplib::Request& req, httplib::Response& res) {
    auto job = jobs_->get(req.matches[1]);
    if (!job) throw HttpError{404, error_body("NotFound", "no job '" + std::string(req.matches[1]) + "'")};
    send(res, 200, {{"job", *job}});
  }));

}

}  // namespace ofc
