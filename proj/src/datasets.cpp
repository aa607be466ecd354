#include "ofc/datasets.hpp"

#include <algorithm>
#include <array>

#include "ofc/prompts.hpp"
#include "ofc/util.hpp"

namespace ofc {

using nlohmann::json;

std::string RecordIssue::describe() const {
  std::string out = line > 0 ? "line " + std::to_string(line) + ": " : std::string();
  out += std::string(to_string(code));
  if (!field.empty()) out += " (" + field + ")";
  return out + ": " + message;
}

json RecordIssue::to_json() const {
  json out = {{"line", line}, {"error", std::string(to_string(code))}, {"message", message}};
  if (!field.empty()) out["field"] = field;
  return out;
}

namespace {

std::string summarize(const std::vector<RecordIssue>& issues) {
  if (issues.empty()) return "validation failed";
  std::string out = issues.front().describe();
  if (issues.size() > 1) out += " (and " + std::to_string(issues.size() - 1) + " more)";
  return out;
}

}  // namespace

ValidationError::ValidationError(std::vector<RecordIssue> issues)
    : Error(issues.empty() ? ErrorCode::kMalformedRecord : issues.front().code, summarize(issues)),
      issues_(std::move(issues)) {}

template <typename T>
std::vector<T> LoadResult<T>::value() && {
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return std::move(items);
}

template struct LoadResult<FactQAItem>;
template struct LoadResult<FactBenchItem>;
template struct LoadResult<SubmittedResponse>;

namespace {

template <typename E, std::size_t N>
std::optional<E> lookup(const std::array<std::pair<std::string_view, E>, N>& table, std::string_view text) {
  for (const auto& [name, value] : table) {
    if (name == text) return value;
  }
  return std::nullopt;
}

template <typename E, std::size_t N>
std::string_view name_of(const std::array<std::pair<std::string_view, E>, N>& table, E value) {
  for (const auto& [name, v] : table) {
    if (v == value) return name;
  }
  return "?";
}

constexpr std::array<std::pair<std::string_view, QaSource>, 7> kQaSources = {{
    {"Snowball", QaSource::kSnowball},
    {"SelfAware", QaSource::kSelfAware},
    {"FreshQA", QaSource::kFreshQa},
    {"FacToolQA", QaSource::kFacToolQa},
    {"FELMWK", QaSource::kFelmWk},
    {"FactcheckBench", QaSource::kFactcheckBench},
    {"FactScoreBio", QaSource::kFactScoreBio},
}};

constexpr std::array<std::pair<std::string_view, ErrorType>, 3> kErrorTypes = {{
    {"Type1", ErrorType::kType1},
    {"Type2", ErrorType::kType2},
    {"Type3", ErrorType::kType3},
}};

constexpr std::array<std::pair<std::string_view, Volatility>, 4> kVolatilities = {{
    {"never", Volatility::kNever},
    {"slow", Volatility::kSlow},
    {"fast", Volatility::kFast},
    {"false_premise", Volatility::kFalsePremise},
}};

constexpr std::array<std::pair<std::string_view, GoldLabel>, 3> kGoldLabels = {{
    {"TRUE", GoldLabel::kTrue},
    {"FALSE", GoldLabel::kFalse},
    {"UNKNOWN", GoldLabel::kUnknown},
}};

constexpr std::array<std::pair<std::string_view, BenchSource>, 4> kBenchSources = {{
    {"FacToolQA", BenchSource::kFacToolQa},
    {"FELMWK", BenchSource::kFelmWk},
    {"FactcheckBench", BenchSource::kFactcheckBench},
    {"HaluEval", BenchSource::kHaluEval},
}};

}  // namespace

std::string_view to_string(QaSource source) { return name_of(kQaSources, source); }
std::optional<QaSource> parse_qa_source(std::string_view text) { return lookup(kQaSources, text); }
std::string_view to_string(ErrorType type) { return name_of(kErrorTypes, type); }
std::optional<ErrorType> parse_error_type(std::string_view text) { return lookup(kErrorTypes, text); }
std::string_view to_string(Volatility volatility) { return name_of(kVolatilities, volatility); }
std::optional<Volatility> parse_volatility(std::string_view text) { return lookup(kVolatilities, text); }
std::string_view to_string(GoldLabel label) { return name_of(kGoldLabels, label); }
std::optional<GoldLabel> parse_gold_label(std::string_view text) { return lookup(kGoldLabels, to_upper(text)); }
std::string_view to_string(BenchSource source) { return name_of(kBenchSources, source); }
std::optional<BenchSource> parse_bench_source(std::string_view text) { return lookup(kBenchSources, text); }

namespace {

// Field access for one record; problems are appended to `issues`.
class RecordReader {
 public:
  RecordReader(const json& record, std::size_t line, std::vector<RecordIssue>& issues)
      : record_(record), line_(line), issues_(issues) {}

  void problem(ErrorCode code, std::string field, std::string message) {
    issues_.push_back({line_, code, std::move(field), std::move(message)});
    failed_ = true;
  }

  std::string required_string(const char* field, bool allow_empty = false) {
    auto it = record_.find(field);
    if (it == record_.end() || it->is_null()) {
      problem(ErrorCode::kMalformedRecord, field, "missing required field");
      return {};
    }
    if (!it->is_string()) {
      problem(ErrorCode::kMalformedRecord, field, "expected a string");
      return {};
    }
    auto value = it->get<std::string>();
    if (!allow_empty && trim(value).empty()) problem(ErrorCode::kMalformedRecord, field, "must not be empty");
    return value;
  }

  std::string optional_string(const char* field) {
    auto it = record_.find(field);
    if (it == record_.end() || it->is_null()) return {};
    if (!it->is_string()) {
      problem(ErrorCode::kMalformedRecord, field, "expected a string");
      return {};
    }
    return it->get<std::string>();
  }

  std::optional<std::string> maybe_string(const char* field) {
    auto it = record_.find(field);
    if (it == record_.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) {
      problem(ErrorCode::kMalformedRecord, field, "expected a string");
      return std::nullopt;
    }
    return it->get<std::string>();
  }

  std::optional<bool> maybe_bool(const char* field) {
    auto it = record_.find(field);
    if (it == record_.end() || it->is_null()) return std::nullopt;
    if (!it->is_boolean()) {
      problem(ErrorCode::kMalformedRecord, field, "expected true or false");
      return std::nullopt;
    }
    return it->get<bool>();
  }

  template <typename E>
  std::optional<E> enum_value(const char* field, const std::optional<E>& parsed, const std::string& text) {
    if (!parsed) problem(ErrorCode::kMalformedRecord, field, "unknown value '" + text + "'");
    return parsed;
  }

  const json* array(const char* field, bool required) {
    auto it = record_.find(field);
    if (it == record_.end() || it->is_null()) {
      if (required) problem(ErrorCode::kMalformedRecord, field, "missing required field");
      return nullptr;
    }
    if (!it->is_array()) {
      problem(ErrorCode::kMalformedRecord, field, "expected a list");
      return nullptr;
    }
    return &*it;
  }

  bool failed() const { return failed_; }

 private:
  const json& record_;
  std::size_t line_;
  std::vector<RecordIssue>& issues_;
  bool failed_ = false;
};

// Calls `fn(line_no, object)` for every non-blank line that parses as a
// JSON object; other lines become MalformedRecord issues.
template <typename Fn>
void for_each_record(std::string_view text, std::vector<RecordIssue>& issues, Fn fn) {
  const auto lines = split_lines(text);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    if (trim(lines[n]).empty()) continue;
    json record = json::parse(lines[n], nullptr, false);
    if (record.is_discarded()) {
      issues.push_back({n + 1, ErrorCode::kMalformedRecord, "", "line is not valid JSON"});
      continue;
    }
    if (!record.is_object()) {
      issues.push_back({n + 1, ErrorCode::kMalformedRecord, "", "record is not an object"});
      continue;
    }
    fn(n + 1, record);
  }
}

std::string read_or_throw(const std::filesystem::path& path) {
  try {
    return read_file(path);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kIo, "cannot read " + path.string() + ": " + e.what());
  }
}

template <typename T>
std::vector<T> strict(LoadResult<T> result, const std::filesystem::path& path) {
  if (!result.ok()) {
    for (auto& issue : result.issues) issue.message = path.filename().string() + ": " + issue.message;
  }
  return std::move(result).value();
}

}  // namespace

LoadResult<FactQAItem> read_factqa(std::string_view text) {
  LoadResult<FactQAItem> out;
  std::set<std::string> ids;
  for_each_record(text, out.issues, [&](std::size_t line, const json& record) {
    RecordReader r(record, line, out.issues);
    FactQAItem item;
    item.id = r.required_string("id");
    item.question = r.required_string("question");
    item.domain = r.optional_string("domain");
    item.topic = r.optional_string("topic");
    item.ability = r.optional_string("ability");
    item.task = r.optional_string("task");
    const auto source_text = r.required_string("source");
    std::optional<QaSource> source;
    if (!source_text.empty()) source = r.enum_value("source", parse_qa_source(source_text), source_text);
    if (const json* types = r.array("error_type", true)) {
      for (const auto& t : *types) {
        const std::string name = t.is_string() ? t.get<std::string>() : t.dump();
        if (auto parsed = r.enum_value("error_type", parse_error_type(name), name)) item.error_type.insert(*parsed);
      }
    }
    item.gold_answer = r.maybe_string("gold_answer");
    item.answerable = r.maybe_bool("answerable");
    if (auto v = r.maybe_string("answer_volatility")) {
      item.answer_volatility = r.enum_value("answer_volatility", parse_volatility(*v), *v);
    }
    if (r.failed() || !source) return;
    item.source = *source;

    // Source-conditional fields.
    if (item.source == QaSource::kSnowball) {
      const std::string gold = item.gold_answer ? to_lower(trim(*item.gold_answer)) : "";
      if (gold != "yes" && gold != "no") {
        r.problem(ErrorCode::kInvariantViolation, "gold_answer", "Snowball items need gold_answer yes or no");
      }
    }
    if (item.source == QaSource::kSelfAware && !item.answerable) {
      r.problem(ErrorCode::kInvariantViolation, "answerable", "SelfAware items need answerable");
    }
    if (item.source == QaSource::kFreshQa && !item.answer_volatility) {
      r.problem(ErrorCode::kInvariantViolation, "answer_volatility", "FreshQA items need answer_volatility");
    }
    if (!ids.insert(item.id).second) r.problem(ErrorCode::kDuplicateId, "id", "duplicate id '" + item.id + "'");
    if (!r.failed()) out.items.push_back(std::move(item));
  });
  return out;
}

LoadResult<FactBenchItem> read_factbench(std::string_view text) {
  LoadResult<FactBenchItem> out;
  std::set<std::string> ids;
  for_each_record(text, out.issues, [&](std::size_t line, const json& record) {
    RecordReader r(record, line, out.issues);
    FactBenchItem item;
    item.id = r.required_string("id");
    item.question = r.required_string("question", true);
    item.response = r.required_string("response");
    const auto source_text = r.required_string("source");
    std::optional<BenchSource> source;
    if (!source_text.empty()) source = r.enum_value("source", parse_bench_source(source_text), source_text);
    const auto label_text = r.required_string("response_gold_label");
    std::optional<GoldLabel> response_label;
    if (!label_text.empty()) {
      response_label = r.enum_value("response_gold_label", parse_gold_label(label_text), label_text);
      if (response_label == GoldLabel::kUnknown) {
        r.problem(ErrorCode::kMalformedRecord, "response_gold_label", "must be TRUE or FALSE");
      }
    }
    if (const json* claims = r.array("claims", true)) {
      for (const auto& c : *claims) {
        if (!c.is_object() || !c.contains("text") || !c["text"].is_string() || !c.contains("gold_label") ||
            !c["gold_label"].is_string()) {
          r.problem(ErrorCode::kMalformedRecord, "claims", "each claim needs string text and gold_label");
          continue;
        }
        AnnotatedClaim claim{c["text"].get<std::string>(), GoldLabel::kUnknown};
        const auto label = c["gold_label"].get<std::string>();
        if (auto parsed = r.enum_value("claims.gold_label", parse_gold_label(label), label)) claim.gold_label = *parsed;
        if (trim(claim.text).empty()) r.problem(ErrorCode::kMalformedRecord, "claims.text", "must not be empty");
        item.claims.push_back(std::move(claim));
      }
    }
    if (const json* spans = r.array("false_segments", false)) {
      std::vector<Span> segments;
      for (const auto& s : *spans) {
        if (!s.is_object() || !s.contains("start") || !s.contains("end") || !s["start"].is_number_unsigned() ||
            !s["end"].is_number_unsigned()) {
          r.problem(ErrorCode::kMalformedRecord, "false_segments", "each span needs unsigned start and end");
          continue;
        }
        Span span{s["start"].get<std::size_t>(), s["end"].get<std::size_t>()};
        if (span.start >= span.end || span.end > item.response.size()) {
          r.problem(ErrorCode::kInvariantViolation, "false_segments", "span outside the response");
        }
        segments.push_back(span);
      }
      item.false_segments = std::move(segments);
    }
    if (r.failed() || !source || !response_label) return;
    item.source = *source;
    item.response_gold_label = *response_label;
    if (item.source == BenchSource::kHaluEval && !item.claims.empty()) {
      r.problem(ErrorCode::kInvariantViolation, "claims", "HaluEval items carry no claim-level labels");
    }
    if (item.source != BenchSource::kHaluEval && item.claims.empty()) {
      r.problem(ErrorCode::kInvariantViolation, "claims", "at least one annotated claim is required");
    }
    if (!ids.insert(item.id).second) r.problem(ErrorCode::kDuplicateId, "id", "duplicate id '" + item.id + "'");
    if (!r.failed()) out.items.push_back(std::move(item));
  });
  return out;
}

std::vector<FactQAItem> load_factqa(const std::filesystem::path& path) {
  return strict(read_factqa(read_or_throw(path)), path);
}

std::vector<FactBenchItem> load_factbench(const std::filesystem::path& path) {
  return strict(read_factbench(read_or_throw(path)), path);
}

LoadResult<SubmittedResponse> read_responses(std::string_view text, std::string* model_name,
                                             const std::vector<FactQAItem>* questions) {
  LoadResult<SubmittedResponse> out;
  std::set<std::string> known;
  if (questions) {
    for (const auto& q : *questions) known.insert(q.id);
  }
  std::set<std::string> seen;
  bool first = true;
  for_each_record(text, out.issues, [&](std::size_t line, const json& record) {
    const bool header = first && record.contains("model_name") && !record.contains("question_id");
    first = false;
    RecordReader r(record, line, out.issues);
    if (header) {
      auto name = r.required_string("model_name");
      if (model_name) *model_name = std::move(name);
      return;
    }
    SubmittedResponse item;
    item.question_id = r.required_string("question_id");
    item.response_text = r.required_string("response", true);
    if (r.failed()) return;
    if (questions && !known.contains(item.question_id)) {
      r.problem(ErrorCode::kUnresolvedId, "question_id", "unknown question id '" + item.question_id + "'");
    }
    if (!seen.insert(item.question_id).second) {
      r.problem(ErrorCode::kDuplicateId, "question_id", "question id '" + item.question_id + "' answered twice");
    }
    if (!r.failed()) out.items.push_back(std::move(item));
  });
  return out;
}

ResponseSubmission load_responses(const std::filesystem::path& path, const std::vector<FactQAItem>* questions) {
  ResponseSubmission submission;
  submission.items = strict(read_responses(read_or_throw(path), &submission.model_name, questions), path);
  return submission;
}

json to_json(const FactQAItem& item) {
  json out = {{"id", item.id},     {"question", item.question}, {"domain", item.domain},
              {"topic", item.topic}, {"ability", item.ability},   {"task", item.task},
              {"source", std::string(to_string(item.source))}};
  auto types = json::array();
  for (ErrorType t : item.error_type) types.push_back(std::string(to_string(t)));
  out["error_type"] = std::move(types);
  if (item.gold_answer) out["gold_answer"] = *item.gold_answer;
  if (item.answerable) out["answerable"] = *item.answerable;
  if (item.answer_volatility) out["answer_volatility"] = std::string(to_string(*item.answer_volatility));
  return out;
}

json to_json(const FactBenchItem& item) {
  json out = {{"id", item.id},
              {"question", item.question},
              {"response", item.response},
              {"response_gold_label", std::string(to_string(item.response_gold_label))},
              {"source", std::string(to_string(item.source))}};
  auto claims = json::array();
  for (const auto& c : item.claims) claims.push_back({{"text", c.text}, {"gold_label", std::string(to_string(c.gold_label))}});
  out["claims"] = std::move(claims);
  if (item.false_segments) {
    auto spans = json::array();
    for (const auto& s : *item.false_segments) spans.push_back({{"start", s.start}, {"end", s.end}});
    out["false_segments"] = std::move(spans);
  }
  return out;
}

namespace {

template <typename T>
std::string jsonl(const std::vector<T>& items) {
  std::string out;
  for (const auto& item : items) out += to_json(item).dump() + "\n";
  return out;
}

}  // namespace

std::string to_jsonl(const std::vector<FactQAItem>& items) { return jsonl(items); }
std::string to_jsonl(const std::vector<FactBenchItem>& items) { return jsonl(items); }

LabelCounts& LabelCounts::operator+=(const LabelCounts& other) {
  items += other.items;
  claims += other.claims;
  true_claims += other.true_claims;
  false_claims += other.false_claims;
  unknown_claims += other.unknown_claims;
  true_responses += other.true_responses;
  false_responses += other.false_responses;
  return *this;
}

DatasetSummary dataset_summary(const std::vector<FactBenchItem>& items) {
  DatasetSummary summary;
  for (const auto& item : items) {
    LabelCounts counts;
    counts.items = 1;
    counts.claims = item.claims.size();
    for (const auto& c : item.claims) {
      switch (c.gold_label) {
        case GoldLabel::kTrue: ++counts.true_claims; break;
        case GoldLabel::kFalse: ++counts.false_claims; break;
        case GoldLabel::kUnknown: ++counts.unknown_claims; break;
      }
    }
    (item.response_gold_label == GoldLabel::kTrue ? counts.true_responses : counts.false_responses) = 1;
    summary.per_source[std::string(to_string(item.source))] += counts;
    summary.total += counts;
  }
  return summary;
}

DatasetSummary dataset_summary(const std::vector<FactQAItem>& items) {
  DatasetSummary summary;
  for (const auto& item : items) {
    LabelCounts counts;
    counts.items = 1;
    summary.per_source[std::string(to_string(item.source))] += counts;
    summary.total += counts;
  }
  return summary;
}

namespace {

json counts_json(const LabelCounts& c) {
  return {{"items", c.items},
          {"claims", c.claims},
          {"TRUE", c.true_claims},
          {"FALSE", c.false_claims},
          {"UNKNOWN", c.unknown_claims},
          {"responses_TRUE", c.true_responses},
          {"responses_FALSE", c.false_responses}};
}

}  // namespace

json to_json(const DatasetSummary& summary) {
  json per_source = json::object();
  for (const auto& [source, counts] : summary.per_source) per_source[source] = counts_json(counts);
  return {{"per_source", per_source}, {"total", counts_json(summary.total)}};
}

DomainTopic parse_domain_topic(std::string_view reply) {
  DomainTopic out;
  for (const auto& raw : split_lines(reply)) {
    std::string_view line = trim(raw);
    while (!line.empty() && (line.front() == '*' || line.front() == '-')) line.remove_prefix(1);
    line = trim(line);
    auto take = [&](std::string_view key, std::string& into) {
      if (!starts_with_icase(line, key)) return;
      std::string_view rest = trim(line.substr(key.size()));
      if (!rest.starts_with(':')) return;
      rest = trim(rest.substr(1));
      while (!rest.empty() && (rest.back() == '*' || rest.back() == '.')) rest.remove_suffix(1);
      if (into.empty()) into = std::string(trim(rest));
    };
    take("domain", out.domain);
    take("topic", out.topic);
  }
  if (out.domain.empty() || out.topic.empty()) {
    throw Error(ErrorCode::kParse, "reply lacks 'Domain:' and 'Topic:' lines: " + std::string(reply));
  }
  return out;
}

DomainTopic tag_domain_topic(std::string_view question, std::string_view reference_response,
                             ModelGateway& gateway, CostMeter& meter) {
  const std::string prompt =
      prompts::render(prompts::get(prompts::kTagDomainTopic),
                      {{"question", std::string(question)}, {"reference_response", std::string(reference_response)}});
  return parse_domain_topic(gateway.chat(prompt, {}, meter).text);
}

bool tag_item(FactQAItem& item, std::string_view reference_response, ModelGateway& gateway, CostMeter& meter) {
  if (!trim(item.domain).empty() && !trim(item.topic).empty()) return false;
  auto tags = tag_domain_topic(item.question, reference_response, gateway, meter);
  item.domain = std::move(tags.domain);
  item.topic = std::move(tags.topic);
  return true;
}

}  // namespace ofc
