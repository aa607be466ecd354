// ofc: command-line front end for pipeline runs, evaluations, baselines,
// index building and the HTTP service.
//
// Exit codes: 0 success, 1 usage or validation error, 2 pipeline ran but
// reported success=false.

#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ofc/builtin_solvers.hpp"
#include "ofc/checker_eval.hpp"
#include "ofc/config.hpp"
#include "ofc/datasets.hpp"
#include "ofc/engine.hpp"
#include "ofc/error.hpp"
#include "ofc/gateway.hpp"
#include "ofc/llm_eval.hpp"
#include "ofc/retrieval.hpp"
#include "ofc/service.hpp"
#include "ofc/util.hpp"
#include "ofc/verifiers.hpp"
#include "ofc/web_search.hpp"

#ifndef OFC_VERSION
#define OFC_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRunFailed = 2;

struct BackendOptions {
  std::string mock_dir;
  std::string record_dir;
};

// Gateway: an HTTP chat backend when OFC_LLM_BASE_URL is set and --mock is
// not given, otherwise the scripted mock (transcripts from --mock or
// OFC_MOCK_DIR, latency from OFC_MOCK_LATENCY_MS). Search: Serper when
// OFC_SERPER_API_KEY is set. NLI: OFC_NLI_URL, else the lexical stand-in.
ofc::Services make_services(const BackendOptions& backend) {
  ofc::Services services;
  ofc::GatewayConfig config = ofc::GatewayConfig::from_env();
  std::string mock_dir = backend.mock_dir.empty() ? ofc::getenv_or("OFC_MOCK_DIR", "") : backend.mock_dir;
  if (!mock_dir.empty()) config.backend = ofc::GatewayBackend::kScriptedMock;
  if (config.backend == ofc::GatewayBackend::kScriptedMock) {
    auto mock = std::make_shared<ofc::ScriptedMockGateway>(config);
    if (!mock_dir.empty()) mock->load_dir(mock_dir);
    if (!backend.record_dir.empty()) {
      fs::create_directories(backend.record_dir);
      mock->set_record_dir(backend.record_dir);
    }
    std::string latency = ofc::getenv_or("OFC_MOCK_LATENCY_MS", "");
    if (!latency.empty()) mock->set_latency(std::chrono::milliseconds(std::stoll(latency)));
    services.gateway = mock;
  } else {
    services.gateway = ofc::make_gateway(config, std::nullopt);
  }

  ofc::SerperConfig serper = ofc::SerperConfig::from_env();
  if (!serper.api_key.empty()) services.search = std::make_shared<ofc::SerperClient>(serper);

  std::string nli_url = ofc::getenv_or("OFC_NLI_URL", "");
  if (!nli_url.empty()) {
    services.nli = std::make_shared<ofc::HttpNliClient>(nli_url);
  } else {
    services.nli = std::make_shared<ofc::LexicalOverlapNli>();
  }
  return services;
}

void print_error(const ofc::Error& e) {
  std::cerr << "error: " << ofc::to_string(e.code());
  if (!e.reason().empty()) std::cerr << " (" << e.reason() << ")";
  std::cerr << ": " << e.what() << "\n";
  if (const auto* validation = dynamic_cast<const ofc::ValidationError*>(&e)) {
    for (const auto& issue : validation->issues()) std::cerr << "  " << issue.describe() << "\n";
  }
}

std::vector<std::string> read_claim_lines(const fs::path& path) {
  std::vector<std::string> claims;
  for (const auto& line : ofc::split_lines(ofc::read_file(path))) {
    if (!ofc::trim(line).empty()) claims.emplace_back(ofc::trim(line));
  }
  return claims;
}

struct CheckArgs {
  std::string config;
  std::string input;
  std::string text;
  std::string question;
  std::string claims;
  std::size_t start_at = 0;
  std::string out;
  bool timing = false;
};

int cmd_check(const CheckArgs& args, const BackendOptions& backend) {
  ofc::PipelineConfig config = ofc::parse_config(ofc::read_file(args.config));
  ofc::SolverRegistry registry = ofc::builtin_registry();
  if (auto problem = ofc::validate_chain(config, registry)) {
    std::cerr << "error: " << ofc::to_string(problem->code()) << ": " << problem->message() << "\n";
    return kExitUsage;
  }
  if (args.start_at >= config.solvers.size()) {
    std::cerr << "error: --start-at " << args.start_at << " is past the last solver\n";
    return kExitUsage;
  }

  std::string document = args.input.empty() ? args.text : ofc::read_file(args.input);
  ofc::FactCheckState state = ofc::FactCheckState::for_document(document);
  if (!args.question.empty()) state.question = args.question;
  if (!args.claims.empty()) {
    ofc::seed_claims(state, config.solvers[args.start_at].input_name, read_claim_lines(args.claims));
  }

  ofc::Services services = make_services(backend);
  ofc::CostMeter meter(services.pricing());
  ofc::FactCheckState result = ofc::run_pipeline(std::move(state), config, registry, services, meter, args.start_at);

  if (args.out.empty()) {
    std::cout << ofc::to_json(result, false).dump(2) << "\n";
    std::cerr << ofc::to_markdown(result);
  } else {
    ofc::write_run_files(args.out, result, args.timing);
    std::cout << ofc::to_markdown(result);
  }
  return result.success ? kExitOk : kExitRunFailed;
}

struct EvalLlmArgs {
  std::string questions;
  std::string responses;
  std::string out;
  std::string families;
  std::string pipeline;
  std::size_t threads = 4;
};

int cmd_eval_llm(const EvalLlmArgs& args, const BackendOptions& backend) {
  std::vector<ofc::FactQAItem> questions = ofc::load_factqa(args.questions);
  ofc::ResponseSubmission submission = ofc::load_responses(args.responses, &questions);
  if (submission.model_name.empty()) submission.model_name = fs::path(args.responses).stem().string();

  ofc::LlmEvalOptions options;
  if (!args.families.empty()) {
    options.families.clear();
    for (const auto& name : ofc::split(args.families, ',')) {
      auto family = ofc::parse_family(ofc::trim(name));
      if (!family) {
        std::cerr << "error: unknown family '" << name << "'\n";
        return kExitUsage;
      }
      options.families.insert(*family);
    }
  }

  ofc::SolverRegistry registry = ofc::builtin_registry();
  ofc::Services services = make_services(backend);
  options.judge = services.gateway.get();
  options.registry = &registry;
  options.services = &services;
  options.threads = args.threads;
  if (!args.pipeline.empty()) {
    options.pipeline = ofc::parse_config(ofc::read_file(args.pipeline));
    if (auto problem = ofc::validate_chain(*options.pipeline, registry)) {
      std::cerr << "error: " << ofc::to_string(problem->code()) << ": " << problem->message() << "\n";
      return kExitUsage;
    }
  }

  ofc::LlmEvalOutcome outcome = ofc::run_llm_eval(questions, submission, options);
  ofc::write_report_files(args.out, outcome);
  std::cout << ofc::to_markdown(outcome.report);
  for (const auto& note : outcome.notes) std::cerr << "note: " << note << "\n";
  return kExitOk;
}

int cmd_eval_checker(const std::string& gold_path, const std::string& preds_path, const std::string& out) {
  ofc::CheckerSubmission submission = ofc::parse_checker_submission(ofc::read_file(preds_path));
  std::string dataset_id = fs::path(gold_path).stem().string();
  if (submission.dataset_id != dataset_id) {
    std::cerr << "error: predictions are for dataset '" << submission.dataset_id << "' but the gold file is '"
              << dataset_id << "'\n";
    return kExitUsage;
  }
  ofc::GoldSet gold = ofc::build_gold_set(ofc::load_factbench(gold_path), dataset_id);
  ofc::MetricsReport report = ofc::evaluate_submission(submission, gold);
  ofc::write_checker_files(out, report, submission);
  std::cout << ofc::to_markdown(report, submission);
  return kExitOk;
}

int cmd_baseline(const std::string& gold_path, const std::string& kind_text, std::uint64_t seed,
                 const std::string& out) {
  auto kind = ofc::parse_baseline_kind(kind_text);
  if (!kind) {
    std::cerr << "error: unknown baseline kind '" << kind_text << "' (random, always_true, always_false)\n";
    return kExitUsage;
  }
  std::string dataset_id = fs::path(gold_path).stem().string();
  ofc::GoldSet gold = ofc::build_gold_set(ofc::load_factbench(gold_path), dataset_id);
  std::string file = ofc::to_submission_file(ofc::run_baseline(gold, *kind, seed));
  if (out.empty()) {
    std::cout << file;
  } else {
    fs::create_directories(out);
    ofc::write_file_atomic(fs::path(out) / "predictions.jsonl", file);
  }
  return kExitOk;
}

int cmd_index_build(const std::string& corpus, const std::string& out, std::size_t window, std::size_t stride) {
  ofc::CorpusIndex index = ofc::CorpusIndex::build(ofc::load_corpus(corpus), window, stride);
  index.save(out);
  std::cout << "indexed " << index.passage_count() << " passages, " << index.term_count() << " terms -> " << out
            << "\n";
  return kExitOk;
}

struct ServeArgs {
  std::string addr;
  std::string data_dir;
  std::string questions;
  std::vector<std::string> gold;
  std::string configs;
  std::size_t workers = 4;
  std::string cors_origin = "*";
};

ofc::Service* g_service = nullptr;

extern "C" void handle_stop_signal(int) {
  if (g_service) g_service->stop();
}

int cmd_serve(const ServeArgs& args, const BackendOptions& backend) {
  fs::path data_dir = args.data_dir.empty() ? fs::path(ofc::getenv_or("OFC_DATA_DIR", "ofc-data")) : fs::path(args.data_dir);
  auto [host, port] =
      ofc::parse_bind_addr(args.addr.empty() ? ofc::getenv_or("OFC_BIND_ADDR", "127.0.0.1:8080") : args.addr);

  ofc::ServiceOptions options;
  options.data_dir = data_dir;
  options.registry = std::make_shared<const ofc::SolverRegistry>(ofc::builtin_registry());
  options.services = make_services(backend);
  options.workers = args.workers;
  options.cors_origin = args.cors_origin;

  fs::path datasets = data_dir / "datasets";
  std::error_code ec;
  if (!args.questions.empty()) {
    options.questions_path = args.questions;
  } else if (fs::is_regular_file(datasets / "factqa.jsonl", ec)) {
    options.questions_path = datasets / "factqa.jsonl";
  }
  if (!args.gold.empty()) {
    for (const auto& path : args.gold) options.gold_paths[fs::path(path).stem().string()] = path;
  } else if (fs::is_directory(datasets / "factbench", ec)) {
    for (const auto& entry : fs::directory_iterator(datasets / "factbench")) {
      if (entry.path().extension() == ".jsonl") options.gold_paths[entry.path().stem().string()] = entry.path();
    }
  }
  if (!args.configs.empty()) {
    options.config_dir = args.configs;
  } else if (fs::is_directory(data_dir / "configs", ec)) {
    options.config_dir = data_dir / "configs";
  }

  ofc::Service service(std::move(options));
  int bound = service.bind(host, port);
  g_service = &service;
  std::signal(SIGINT, handle_stop_signal);
  std::signal(SIGTERM, handle_stop_signal);
  if (service.recovered_failed() > 0) {
    std::cerr << "recovered " << service.recovered_failed() << " interrupted job(s) as failed\n";
  }
  std::cout << "listening on http://" << host << ":" << bound << std::endl;
  service.listen();
  g_service = nullptr;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ofc: configurable fact-checking pipelines and factuality evaluation"};
  app.set_version_flag("--version", std::string("ofc ") + OFC_VERSION);
  app.require_subcommand(1);

  BackendOptions backend;
  app.add_option("--mock", backend.mock_dir, "Scripted mock gateway transcripts (<key>.txt); overrides OFC_MOCK_DIR");
  app.add_option("--record-prompts", backend.record_dir,
                 "Write prompts without a mock transcript to <dir>/<key>.prompt");

  CheckArgs check;
  auto* check_cmd = app.add_subcommand("check", "Run a pipeline over a document");
  check_cmd->add_option("--config", check.config, "Pipeline YAML")->required()->check(CLI::ExistingFile);
  auto* input_opt = check_cmd->add_option("--input", check.input, "Document file")->check(CLI::ExistingFile);
  auto* text_opt = check_cmd->add_option("--text", check.text, "Document text");
  input_opt->excludes(text_opt);
  check_cmd->add_option("--question", check.question, "Question the document answers");
  check_cmd->add_option("--claims", check.claims, "Preannotated claims, one per line, seeded into the start slot")
      ->check(CLI::ExistingFile);
  check_cmd->add_option("--start-at", check.start_at, "Index of the first solver to run");
  check_cmd->add_option("--out", check.out, "Output directory (state.json, summary.md)");
  check_cmd->add_flag("--timing", check.timing, "Also write timing.json with wall-clock durations");

  EvalLlmArgs eval_llm;
  auto* eval_llm_cmd = app.add_subcommand("eval-llm", "Evaluate an LLM's responses to the FactQA questions");
  eval_llm_cmd->add_option("--questions", eval_llm.questions, "FactQA JSONL")->required()->check(CLI::ExistingFile);
  eval_llm_cmd->add_option("--responses", eval_llm.responses, "Responses JSONL")->required()->check(CLI::ExistingFile);
  eval_llm_cmd->add_option("--out", eval_llm.out, "Output directory")->required();
  eval_llm_cmd->add_option("--families", eval_llm.families, "Comma list: snowball,selfaware,freshqa,freeform");
  eval_llm_cmd->add_option("--pipeline", eval_llm.pipeline, "Pipeline YAML for free-form questions")
      ->check(CLI::ExistingFile);
  eval_llm_cmd->add_option("--threads", eval_llm.threads, "Free-form pipeline workers")->check(CLI::PositiveNumber);

  std::string gold_path, preds_path, checker_out;
  auto* eval_checker_cmd = app.add_subcommand("eval-checker", "Score checker predictions against FactBench labels");
  eval_checker_cmd->add_option("--gold", gold_path, "FactBench JSONL")->required()->check(CLI::ExistingFile);
  eval_checker_cmd->add_option("--preds", preds_path, "Submission JSONL")->required()->check(CLI::ExistingFile);
  eval_checker_cmd->add_option("--out", checker_out, "Output directory")->required();

  std::string baseline_gold, baseline_kind, baseline_out;
  std::uint64_t baseline_seed = 0;
  auto* baseline_cmd = app.add_subcommand("baseline", "Emit baseline predictions for a FactBench file");
  baseline_cmd->add_option("--gold", baseline_gold, "FactBench JSONL")->required()->check(CLI::ExistingFile);
  baseline_cmd->add_option("--kind", baseline_kind, "random, always_true or always_false")->required();
  baseline_cmd->add_option("--seed", baseline_seed, "Seed for the random baseline");
  baseline_cmd->add_option("--out", baseline_out, "Output directory (predictions.jsonl); stdout when absent");

  std::string corpus_path, index_out;
  std::size_t window = 256, stride = 128;
  auto* index_cmd = app.add_subcommand("index", "Corpus index tools");
  index_cmd->require_subcommand(1);
  auto* index_build_cmd = index_cmd->add_subcommand("build", "Build a BM25 passage index");
  index_build_cmd->add_option("--corpus", corpus_path, "Corpus JSONL {doc_id, title, text}")
      ->required()
      ->check(CLI::ExistingFile);
  index_build_cmd->add_option("--out", index_out, "Index file")->required();
  index_build_cmd->add_option("--window", window, "Passage window in tokens")->check(CLI::PositiveNumber);
  index_build_cmd->add_option("--stride", stride, "Passage stride in tokens")->check(CLI::PositiveNumber);

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_cmd->add_option("--addr", serve.addr, "host:port (default OFC_BIND_ADDR or 127.0.0.1:8080; port 0 = any)");
  serve_cmd->add_option("--data-dir", serve.data_dir, "Store root (default OFC_DATA_DIR or ./ofc-data)");
  serve_cmd->add_option("--questions", serve.questions, "FactQA JSONL (default <data>/datasets/factqa.jsonl)")
      ->check(CLI::ExistingFile);
  serve_cmd->add_option("--gold", serve.gold, "FactBench JSONL, repeatable; dataset id = file stem")
      ->check(CLI::ExistingFile);
  serve_cmd->add_option("--configs", serve.configs, "Directory of named pipeline configs (<id>.yaml)")
      ->check(CLI::ExistingDirectory);
  serve_cmd->add_option("--workers", serve.workers, "Background job workers")->check(CLI::PositiveNumber);
  serve_cmd->add_option("--cors-origin", serve.cors_origin, "Access-Control-Allow-Origin value");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*check_cmd) {
      if (check.input.empty() && !check_cmd->count("--text")) {
        std::cerr << "error: one of --input or --text is required\n";
        return kExitUsage;
      }
      return cmd_check(check, backend);
    }
    if (*eval_llm_cmd) return cmd_eval_llm(eval_llm, backend);
    if (*eval_checker_cmd) return cmd_eval_checker(gold_path, preds_path, checker_out);
    if (*baseline_cmd) return cmd_baseline(baseline_gold, baseline_kind, baseline_seed, baseline_out);
    if (*index_build_cmd) return cmd_index_build(corpus_path, index_out, window, stride);
    if (*serve_cmd) return cmd_serve(serve, backend);
  } catch (const ofc::Error& e) {
    print_error(e);
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
