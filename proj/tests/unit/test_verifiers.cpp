#include "doctest.h"

#include <httplib.h>

#include <thread>

#include "ofc/error.hpp"
#include "ofc/gateway.hpp"
#include "ofc/verifiers.hpp"
#include "support/properties.hpp"

using namespace ofc;

namespace {

Verdict v(Label label) { return Verdict{ClaimId::from_text(std::string(to_string(label))), label, {}, {}, ""}; }

std::vector<Evidence> evidence_for(const Claim& claim, std::vector<std::string> texts) {
  std::vector<Evidence> out;
  int rank = 0;
  for (auto& t : texts) out.push_back({claim.id, std::move(t), "doc", ++rank, 1.0});
  return out;
}

}  // namespace

TEST_CASE("verifier replies start with a label token") {
  auto r = parse_verifier_reply("TRUE: the passage says so.");
  CHECK(r.label == Label::kTrue);
  CHECK(r.rationale == "the passage says so.");
  r = parse_verifier_reply("\n  FALSE - wrong year\nThe tower opened in 1889.");
  CHECK(r.label == Label::kFalse);
  CHECK(r.rationale.find("wrong year") != std::string::npos);
  CHECK(r.rationale.find("1889") != std::string::npos);
  CHECK(parse_verifier_reply("NOT_ENOUGH_EVIDENCE").label == Label::kNotEnoughEvidence);
  CHECK(parse_verifier_reply("OPINION. Taste is subjective.").label == Label::kOpinion);
  CHECK_THROWS_AS(parse_verifier_reply("I think it is true."), Error);
  CHECK_THROWS_AS(parse_verifier_reply(""), Error);
}

TEST_CASE("majority vote tie rule") {
  using S = Stance;
  CHECK(majority_vote(std::vector<S>{S::kEntailment}).label == Label::kTrue);
  CHECK(majority_vote(std::vector<S>{S::kContradiction, S::kContradiction, S::kEntailment}).label == Label::kFalse);
  CHECK(majority_vote(std::vector<S>{S::kEntailment, S::kContradiction}).label == Label::kNotEnoughEvidence);
  CHECK(majority_vote(std::vector<S>{S::kNeutral, S::kNeutral, S::kEntailment}).label == Label::kNotEnoughEvidence);
  const auto r = majority_vote(std::vector<S>{S::kEntailment, S::kEntailment, S::kNeutral, S::kContradiction});
  CHECK(r.label == Label::kTrue);
  CHECK(r.confidence == 0.5);
}

TEST_CASE("majority vote matches the oracle exhaustively") {
  const auto r = ofc::testing::check_majority_exhaustive(6);
  INFO(r.detail);
  CHECK(r.pass);
}

TEST_CASE("lexical NLI") {
  LexicalOverlapNli nli;
  CHECK(nli.classify("Paris is the capital of France.", "Paris is the capital of France.").stance == Stance::kEntailment);
  CHECK(nli.classify("Paris is not the capital of France.", "Paris is the capital of France.").stance ==
        Stance::kContradiction);
  CHECK(nli.classify("Bananas are yellow.", "Paris is the capital of France.").stance == Stance::kNeutral);

  const Claim claim = Claim::make("Paris is the capital of France.", ClaimOrigin::kPreannotated);
  const Verdict verdict = verify_nli(claim, evidence_for(claim, {"Paris is the capital of France.", "Bananas."}), nli);
  CHECK(verdict.label == Label::kNotEnoughEvidence);
  CHECK(verdict.evidence_ids.size() == 2);
  CHECK_THROWS_AS(verify_nli(claim, {}, nli), Error);
}

TEST_CASE("LLM verifier over the mock gateway") {
  ScriptedMockGateway gateway;
  gateway.set_fallback([](std::string_view prompt) -> std::optional<std::string> {
    if (prompt.find("1903") != std::string_view::npos) return "TRUE: stated in passage 1.";
    return "garbled";
  });
  CostMeter meter;
  const Claim ok = Claim::make("Curie won in 1903.", ClaimOrigin::kPreannotated);
  const auto evidence = evidence_for(ok, {"Curie won the prize in 1903."});
  const Verdict verdict = verify_llm(ok, evidence, gateway, meter);
  CHECK(verdict.label == Label::kTrue);
  CHECK(verdict.evidence_ids == std::vector<std::string>{ok.id.str() + "/1"});
  const Claim bad = Claim::make("Something else.", ClaimOrigin::kPreannotated);
  CHECK_THROWS_AS(verify_llm(bad, evidence_for(bad, {"x"}), gateway, meter), Error);
  CHECK(format_evidence(evidence).find("[1]") != std::string::npos);
}

TEST_CASE("document aggregation by severity") {
  CHECK(aggregate_document(std::vector<Verdict>{v(Label::kTrue), v(Label::kFalse)}).label == Label::kFalse);
  CHECK(aggregate_document(std::vector<Verdict>{v(Label::kTrue), v(Label::kNotEnoughEvidence)}).label ==
        Label::kNotEnoughEvidence);
  CHECK(aggregate_document(std::vector<Verdict>{v(Label::kTrue), v(Label::kOpinion)}).label == Label::kTrue);
  CHECK(aggregate_document(std::vector<Verdict>{v(Label::kOpinion)}).label == Label::kNotEnoughEvidence);
  const Verdict doc = aggregate_document(std::vector<Verdict>{v(Label::kTrue), v(Label::kFalse), v(Label::kOpinion)});
  CHECK(doc.claim_id == ClaimId::document());
  CHECK(doc.rationale == "1 of 2 checkable claims are FALSE");
  CHECK_THROWS_AS(aggregate_document(std::vector<Verdict>{}), Error);

  AggregationPolicy lenient;
  lenient.severity = {Label::kTrue, Label::kFalse, Label::kNotEnoughEvidence};
  CHECK(aggregate_document(std::vector<Verdict>{v(Label::kTrue), v(Label::kFalse)}, lenient).label == Label::kTrue);
}

TEST_CASE("HTTP NLI client") {
  httplib::Server server;
  server.Post("/nli", [](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    const bool same = body["premise"] == body["hypothesis"];
    res.set_content(nlohmann::json{{"label", same ? "entailment" : "contradiction"}, {"score", 0.8}}.dump(),
                    "application/json");
  });
  server.Post("/broken", [](const httplib::Request&, httplib::Response& res) { res.set_content("{}", "application/json"); });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpNliClient client("http://127.0.0.1:" + std::to_string(port) + "/nli");
  CHECK(client.classify("a", "a").stance == Stance::kEntailment);
  CHECK(client.classify("a", "b").stance == Stance::kContradiction);
  HttpNliClient broken("http://127.0.0.1:" + std::to_string(port) + "/broken");
  try {
    broken.classify("a", "b");
    FAIL("malformed reply accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNli);
  }
  server.stop();
  thread.join();
}
