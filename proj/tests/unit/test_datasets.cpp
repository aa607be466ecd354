#include "doctest.h"

#include <regex>

#include "ofc/datasets.hpp"
#include "ofc/util.hpp"
#include "support/support.hpp"

using namespace ofc;
using namespace ofc::testing;

namespace {

bool is_prime(unsigned n) {
  if (n < 2) return false;
  for (unsigned d = 2; d * d <= n; ++d) {
    if (n % d == 0) return false;
  }
  return true;
}

bool has_issue(const std::vector<RecordIssue>& issues, std::size_t line, ErrorCode code, const std::string& field) {
  for (const auto& i : issues) {
    if (i.line == line && i.code == code && i.field == field) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("FactQA fixture loads every source") {
  const auto items = load_factqa(fixture("factqa_sample.jsonl"));
  REQUIRE(items.size() == 19);
  const DatasetSummary summary = dataset_summary(items);
  CHECK(summary.per_source.size() == 7);
  CHECK(summary.total.items == 19);
  CHECK(items[0].source == QaSource::kSnowball);
  CHECK(items[0].task == "primality");
  CHECK(items[0].error_type == std::set<ErrorType>{ErrorType::kType2});
  CHECK(items[6].answerable == false);
  CHECK(items[11].answer_volatility == Volatility::kNever);
}

TEST_CASE("Snowball primality golds agree with trial division") {
  std::size_t checked = 0;
  const std::regex number(R"(Is (\d+) a prime number\?)");
  for (const auto& item : load_factqa(fixture("factqa_sample.jsonl"))) {
    std::smatch m;
    if (item.task != "primality" || !std::regex_search(item.question, m, number)) continue;
    const unsigned n = static_cast<unsigned>(std::stoul(m[1]));
    CHECK_MESSAGE(*item.gold_answer == (is_prime(n) ? "yes" : "no"), n);
    ++checked;
  }
  CHECK(checked == 4);
  CHECK(is_prime(7411));
  CHECK(is_prime(7417));
  CHECK_FALSE(is_prime(7413));
  CHECK_FALSE(is_prime(7419));
}

TEST_CASE("FactQA issues carry line numbers and codes") {
  const std::string text =
      "{\"id\":\"a\",\"question\":\"Q?\",\"source\":\"Snowball\",\"error_type\":[\"Type2\"],\"task\":\"primality\"}\n"
      "not json\n"
      "{\"id\":\"b\",\"question\":\"Q?\",\"source\":\"SelfAware\",\"error_type\":[\"Type3\"]}\n"
      "{\"id\":\"c\",\"question\":\"Q?\",\"source\":\"Nowhere\",\"error_type\":[\"Type1\"]}\n"
      "{\"id\":\"d\",\"question\":\"\",\"source\":\"FreshQA\",\"error_type\":[\"Type1\"],\"answer_volatility\":\"fast\"}\n"
      "{\"id\":\"e\",\"question\":\"Q?\",\"source\":\"FacToolQA\",\"error_type\":[\"Type1\"]}\n"
      "{\"id\":\"e\",\"question\":\"Q?\",\"source\":\"FacToolQA\",\"error_type\":[\"Type1\"]}\n";
  const auto result = read_factqa(text);
  CHECK_FALSE(result.ok());
  CHECK(has_issue(result.issues, 1, ErrorCode::kInvariantViolation, "gold_answer"));
  CHECK(has_issue(result.issues, 2, ErrorCode::kMalformedRecord, ""));
  CHECK(has_issue(result.issues, 3, ErrorCode::kInvariantViolation, "answerable"));
  CHECK(has_issue(result.issues, 4, ErrorCode::kMalformedRecord, "source"));
  CHECK(has_issue(result.issues, 5, ErrorCode::kMalformedRecord, "question"));
  CHECK(has_issue(result.issues, 7, ErrorCode::kDuplicateId, "id"));
  try {
    read_factqa(text).value();
    FAIL("strict read accepted bad records");
  } catch (const ValidationError& e) {
    CHECK(e.issues().size() == result.issues.size());
    CHECK(e.issues()[0].to_json()["line"] == 1);
    CHECK(e.issues()[0].describe().find("line 1") != std::string::npos);
  }
}

TEST_CASE("FactBench fixture loads and summarizes") {
  const auto items = load_factbench(fixture("factbench_sample.jsonl"));
  REQUIRE(items.size() == 20);
  const DatasetSummary summary = dataset_summary(items);
  CHECK(summary.total.items == 20);
  CHECK(summary.total.claims == 52);
  CHECK(summary.total.true_claims + summary.total.false_claims + summary.total.unknown_claims == 52);
  CHECK(summary.per_source.at("HaluEval").items == 4);
  CHECK(summary.per_source.at("HaluEval").claims == 0);
  bool spans = false;
  for (const auto& item : items) {
    if (!item.false_segments) continue;
    spans = true;
    for (const auto& span : *item.false_segments) CHECK(span.end <= item.response.size());
  }
  CHECK(spans);

  const auto counts = load_factbench(fixture("factool_qa_counts.jsonl"));
  const DatasetSummary c = dataset_summary(counts);
  CHECK(c.total.true_claims == 177);
  CHECK(c.total.false_claims == 56);
  CHECK(dataset_summary(load_factbench(fixture("felm_wk_counts.jsonl"))).total.false_claims == 147);
}

TEST_CASE("FactBench invariants") {
  const std::string text =
      "{\"id\":\"h\",\"question\":\"Q\",\"response\":\"R\",\"claims\":[{\"text\":\"R\",\"gold_label\":\"TRUE\"}],"
      "\"response_gold_label\":\"TRUE\",\"source\":\"HaluEval\"}\n"
      "{\"id\":\"f\",\"question\":\"Q\",\"response\":\"R\",\"claims\":[],\"response_gold_label\":\"TRUE\","
      "\"source\":\"FELMWK\"}\n"
      "{\"id\":\"s\",\"question\":\"Q\",\"response\":\"Short\",\"claims\":[{\"text\":\"x\",\"gold_label\":\"FALSE\"}],"
      "\"false_segments\":[{\"start\":2,\"end\":99}],\"response_gold_label\":\"FALSE\",\"source\":\"FacToolQA\"}\n"
      "{\"id\":\"u\",\"question\":\"Q\",\"response\":\"R\",\"claims\":[{\"text\":\"x\",\"gold_label\":\"TRUE\"}],"
      "\"response_gold_label\":\"UNKNOWN\",\"source\":\"FacToolQA\"}\n";
  const auto result = read_factbench(text);
  CHECK(has_issue(result.issues, 1, ErrorCode::kInvariantViolation, "claims"));
  CHECK(has_issue(result.issues, 2, ErrorCode::kInvariantViolation, "claims"));
  CHECK(has_issue(result.issues, 3, ErrorCode::kInvariantViolation, "false_segments"));
  CHECK(has_issue(result.issues, 4, ErrorCode::kMalformedRecord, "response_gold_label"));
}

TEST_CASE("records round-trip through JSONL") {
  const auto qa = load_factqa(fixture("factqa_sample.jsonl"));
  CHECK(read_factqa(to_jsonl(qa)).value() == qa);
  const auto bench = load_factbench(fixture("factbench_sample.jsonl"));
  CHECK(read_factbench(to_jsonl(bench)).value() == bench);
}

TEST_CASE("responses resolve against the question set") {
  const auto questions = load_factqa(fixture("factqa_sample.jsonl"));
  const ResponseSubmission sample = load_responses(fixture("responses_sample.jsonl"), &questions);
  CHECK(sample.model_name == "sample-model");
  CHECK(sample.items.size() == 15);

  std::string model;
  const auto result = read_responses(
      "{\"model_name\":\"m\"}\n{\"question_id\":\"snow-1\",\"response\":\"Yes\"}\n"
      "{\"question_id\":\"snow-1\",\"response\":\"No\"}\n{\"question_id\":\"ghost\",\"response\":\"?\"}\n",
      &model, &questions);
  CHECK(model == "m");
  CHECK(has_issue(result.issues, 3, ErrorCode::kDuplicateId, "question_id"));
  CHECK(has_issue(result.issues, 4, ErrorCode::kUnresolvedId, "question_id"));
}

TEST_CASE("domain and topic tagging") {
  const DomainTopic parsed = parse_domain_topic("Domain: Science\nTopic: Physics\n");
  CHECK(parsed.domain == "Science");
  CHECK(parsed.topic == "Physics");
  CHECK_THROWS_AS(parse_domain_topic("no labels here"), Error);

  ScriptedMockGateway gateway;
  gateway.set_fallback([](std::string_view) { return std::string("Domain: History\nTopic: Rome"); });
  CostMeter meter;
  FactQAItem untagged;
  untagged.question = "Who founded Rome?";
  CHECK(tag_item(untagged, "Romulus.", gateway, meter));
  CHECK(untagged.domain == "History");
  CHECK(untagged.topic == "Rome");
  CHECK_FALSE(tag_item(untagged, "Romulus.", gateway, meter));
  CHECK(gateway.calls() == 1);
}
