#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ofc/config.hpp"
#include "ofc/datasets.hpp"
#include "ofc/gateway.hpp"
#include "ofc/money.hpp"
#include "ofc/registry.hpp"

namespace ofc {

// Evaluator families. FacTool-QA, FELM-WK, Factcheck-Bench and
// FactScore-Bio questions have no gold answers and share the free-form
// (pipeline-checked) evaluator.
enum class Family { kSnowball, kSelfAware, kFreshQa, kFreeform };

std::string_view to_string(Family family);
std::optional<Family> parse_family(std::string_view text);
Family family_of(QaSource source);

enum class EvalVerdict { kCorrect, kIncorrect, kInvalid };

std::string_view to_string(EvalVerdict verdict);

struct EvalResult {
  std::string question_id;
  Family family = Family::kFreeform;
  EvalVerdict verdict = EvalVerdict::kIncorrect;
  nlohmann::json detail = nlohmann::json::object();
};

nlohmann::json to_json(const EvalResult& result);

// Leading yes/no of the response for yes/no golds (case-insensitive,
// surrounding punctuation ignored); otherwise the normalized gold must
// occur in the normalized response on word boundaries. Unextractable
// answers are incorrect.
bool exact_match_eval(std::string_view response, std::string_view gold);

// "yes", "no" or empty.
std::string leading_yes_no(std::string_view response);

struct Tally {
  std::size_t correct = 0;
  std::size_t total = 0;

  double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }
  Tally& operator+=(const Tally& other);
  bool operator==(const Tally&) const = default;
};

struct SnowballMetrics {
  std::map<std::string, Tally> subsets;  // keyed by task: primality, senator, graph_connection
  Tally full_set;
};

// Groups by each item's task field. `items` must hold every result's question.
SnowballMetrics snowball_eval(const std::vector<EvalResult>& results, const std::map<std::string, const FactQAItem*>& items);

std::vector<std::string> default_abstention_phrases();

// Case-insensitive phrase match; apostrophe variants are folded.
bool detect_abstention(std::string_view response, const std::vector<std::string>& phrases);

struct SelfAwareMetrics {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
};

// Positive class = unanswerable. Each result's detail carries "abstained"
// and "answerable".
SelfAwareMetrics selfaware_eval(const std::vector<EvalResult>& results);
SelfAwareMetrics selfaware_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);

// First line of the judge reply: CORRECT, INCORRECT or INVALID. Anything
// else is INVALID.
EvalVerdict parse_judge_reply(std::string_view reply);

// Strict judge. Throws GatewayError (and the other backend errors).
EvalVerdict freshqa_strict_eval(const FactQAItem& item, std::string_view response, ModelGateway& judge,
                                CostMeter& meter);

struct FreshQaMetrics {
  std::size_t correct = 0;
  std::size_t incorrect = 0;
  std::size_t invalid = 0;
  double accuracy = 0.0;    // correct / valid
  double perc_valid = 0.0;  // valid / all
};

FreshQaMetrics freshqa_metrics(const std::vector<EvalResult>& results);

// A ratio kept as integers so the percentages sum exactly.
struct Ratio {
  std::uint64_t numerator = 0;
  std::uint64_t denominator = 0;

  double value() const { return denominator == 0 ? 0.0 : static_cast<double>(numerator) / static_cast<double>(denominator); }
  double percent() const { return 100.0 * value(); }
};

struct FreeformResponse {
  std::string question_id;
  bool success = false;
  std::optional<Label> document_verdict;
  std::size_t true_claims = 0;
  std::size_t false_claims = 0;
  std::size_t unknown_claims = 0;  // NOT_ENOUGH_EVIDENCE and OPINION
  Usd cost;
  std::string note;
  nlohmann::json state;  // full run view
};

struct FreeformStats {
  std::vector<FreeformResponse> responses;  // in input order
  std::size_t verified_claims = 0;
  Ratio percent_true;
  Ratio percent_false;
  Ratio percent_unknown;
  std::size_t num_false_claims = 0;
  Usd est_cost;
};

struct FreeformTask {
  std::string question_id;
  std::string question;
  std::string response;
};

// Runs the pipeline on every response with up to `threads` workers. A
// failing run marks that response invalid; the batch always completes.
FreeformStats freeform_eval(const std::vector<FreeformTask>& tasks, const PipelineConfig& config,
                            const SolverRegistry& registry, const Services& services, std::size_t threads = 4);

// correct: document verdict TRUE; incorrect: FALSE or NOT_ENOUGH_EVIDENCE;
// invalid: failed run or no claims.
EvalResult to_eval_result(const FreeformResponse& response);

struct Advice {
  ErrorType error_type;
  double accuracy;
  std::string text;
};

// Error types whose accuracy falls below this get advice.
inline constexpr double kAdviceThreshold = 0.9;

std::string_view advice_template(ErrorType type);

struct FactualityReport {
  std::string model_name;
  std::set<Family> families;
  std::optional<SnowballMetrics> snowball;
  std::optional<SelfAwareMetrics> selfaware;
  std::optional<FreshQaMetrics> freshqa;
  std::optional<FreeformStats> freeform;
  struct DomainRow {
    std::string domain;
    std::size_t total = 0;
    std::size_t correct = 0;
    std::size_t incorrect = 0;
    std::size_t invalid = 0;
  };
  std::vector<DomainRow> per_domain;  // sorted by domain
  std::map<ErrorType, Tally> per_error_type;  // valid results only
  std::vector<Advice> advice;  // lowest accuracy first
  std::size_t total_questions = 0;
  Tally overall;  // valid results only
};

// A pure fold over `results` (order does not matter). Throws NoResults.
FactualityReport build_report(std::string model_name, const std::vector<FactQAItem>& items,
                              const std::vector<EvalResult>& results,
                              const std::optional<FreeformStats>& freeform = std::nullopt);

nlohmann::json to_json(const FactualityReport& report);
std::string to_markdown(const FactualityReport& report);

struct LlmEvalOptions {
  std::set<Family> families{Family::kSnowball, Family::kSelfAware, Family::kFreshQa, Family::kFreeform};
  std::vector<std::string> abstention_phrases = default_abstention_phrases();
  // Needed for the FreshQA family.
  ModelGateway* judge = nullptr;
  // Needed for the free-form family; without it those questions are skipped.
  std::optional<PipelineConfig> pipeline;
  const SolverRegistry* registry = nullptr;
  const Services* services = nullptr;
  std::size_t threads = 4;
};

struct LlmEvalOutcome {
  std::vector<EvalResult> results;  // sorted by question_id
  FactualityReport report;
  Usd judge_cost;
  std::vector<std::string> skipped;  // question ids not evaluated, with reasons in notes
  std::vector<std::string> notes;
};

// Evaluates every answered question of the selected families.
LlmEvalOutcome run_llm_eval(const std::vector<FactQAItem>& questions, const ResponseSubmission& submission,
                            const LlmEvalOptions& options);

// Writes report.json, report.md and results.jsonl under `dir`.
void write_report_files(const std::filesystem::path& dir, const LlmEvalOutcome& outcome);

}  // namespace ofc
