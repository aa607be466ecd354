#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ofc/error.hpp"
#include "ofc/gateway.hpp"

namespace ofc {

// One problem found while reading a record file. Line 0 means the file as
// a whole.
struct RecordIssue {
  std::size_t line = 0;
  ErrorCode code = ErrorCode::kMalformedRecord;
  std::string field;
  std::string message;

  std::string describe() const;
  nlohmann::json to_json() const;
};

// Raised by the strict loaders. code() is the first issue's code.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<RecordIssue> issues);
  const std::vector<RecordIssue>& issues() const { return issues_; }

 private:
  std::vector<RecordIssue> issues_;
};

template <typename T>
struct LoadResult {
  std::vector<T> items;
  std::vector<RecordIssue> issues;

  bool ok() const { return issues.empty(); }
  // Returns the items or throws ValidationError listing every issue.
  std::vector<T> value() &&;
};

enum class QaSource { kSnowball, kSelfAware, kFreshQa, kFacToolQa, kFelmWk, kFactcheckBench, kFactScoreBio };
enum class ErrorType { kType1, kType2, kType3 };
enum class Volatility { kNever, kSlow, kFast, kFalsePremise };

std::string_view to_string(QaSource source);
std::optional<QaSource> parse_qa_source(std::string_view text);
std::string_view to_string(ErrorType type);
std::optional<ErrorType> parse_error_type(std::string_view text);
std::string_view to_string(Volatility volatility);
std::optional<Volatility> parse_volatility(std::string_view text);

struct FactQAItem {
  std::string id;
  std::string question;
  std::string domain;
  std::string topic;
  std::string ability;
  std::string task;
  QaSource source = QaSource::kFacToolQa;
  std::set<ErrorType> error_type;
  std::optional<std::string> gold_answer;
  std::optional<bool> answerable;
  std::optional<Volatility> answer_volatility;

  bool operator==(const FactQAItem&) const = default;
};

enum class GoldLabel { kTrue, kFalse, kUnknown };

std::string_view to_string(GoldLabel label);
std::optional<GoldLabel> parse_gold_label(std::string_view text);

enum class BenchSource { kFacToolQa, kFelmWk, kFactcheckBench, kHaluEval };

std::string_view to_string(BenchSource source);
std::optional<BenchSource> parse_bench_source(std::string_view text);

struct AnnotatedClaim {
  std::string text;
  GoldLabel gold_label = GoldLabel::kUnknown;

  bool operator==(const AnnotatedClaim&) const = default;
};

// Byte range [start, end) of the response marked as false.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const Span&) const = default;
};

struct FactBenchItem {
  std::string id;
  std::string question;
  std::string response;
  std::vector<AnnotatedClaim> claims;
  std::optional<std::vector<Span>> false_segments;
  GoldLabel response_gold_label = GoldLabel::kTrue;  // TRUE or FALSE
  BenchSource source = BenchSource::kFacToolQa;

  bool operator==(const FactBenchItem&) const = default;
};

struct SubmittedResponse {
  std::string question_id;
  std::string response_text;

  bool operator==(const SubmittedResponse&) const = default;
};

struct ResponseSubmission {
  std::string model_name;
  std::vector<SubmittedResponse> items;
};

// Record parsers. Every per-line problem is collected with its line number.
LoadResult<FactQAItem> read_factqa(std::string_view text);
LoadResult<FactBenchItem> read_factbench(std::string_view text);

// Strict loaders: throw ValidationError (MalformedRecord / InvariantViolation
// per line) or IoError.
std::vector<FactQAItem> load_factqa(const std::filesystem::path& path);
std::vector<FactBenchItem> load_factbench(const std::filesystem::path& path);

// Lines {question_id, response}; an optional first line {model_name} names
// the model. Unknown or repeated question ids are reported as issues when
// `questions` is given.
LoadResult<SubmittedResponse> read_responses(std::string_view text, std::string* model_name,
                                             const std::vector<FactQAItem>* questions = nullptr);
ResponseSubmission load_responses(const std::filesystem::path& path,
                                  const std::vector<FactQAItem>* questions = nullptr);

nlohmann::json to_json(const FactQAItem& item);
nlohmann::json to_json(const FactBenchItem& item);
std::string to_jsonl(const std::vector<FactQAItem>& items);
std::string to_jsonl(const std::vector<FactBenchItem>& items);

struct LabelCounts {
  std::size_t items = 0;
  std::size_t claims = 0;
  std::size_t true_claims = 0;
  std::size_t false_claims = 0;
  std::size_t unknown_claims = 0;
  std::size_t true_responses = 0;
  std::size_t false_responses = 0;

  bool operator==(const LabelCounts&) const = default;
  LabelCounts& operator+=(const LabelCounts& other);
};

struct DatasetSummary {
  std::map<std::string, LabelCounts> per_source;
  LabelCounts total;
};

DatasetSummary dataset_summary(const std::vector<FactBenchItem>& items);
// Item counts only; FactQA items carry no labels.
DatasetSummary dataset_summary(const std::vector<FactQAItem>& items);
nlohmann::json to_json(const DatasetSummary& summary);

struct DomainTopic {
  std::string domain;
  std::string topic;
};

// Parses "Domain: ..." and "Topic: ..." lines. Throws ParseError.
DomainTopic parse_domain_topic(std::string_view reply);

DomainTopic tag_domain_topic(std::string_view question, std::string_view reference_response,
                             ModelGateway& gateway, CostMeter& meter);

// Fills domain and topic unless the item already has both. Returns true
// when the gateway was called.
bool tag_item(FactQAItem& item, std::string_view reference_response, ModelGateway& gateway, CostMeter& meter);

}  // namespace ofc
