#pragma once

#include <chrono>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ofc/gateway.hpp"
#include "ofc/state.hpp"

namespace ofc {

enum class Stance { kEntailment, kContradiction, kNeutral };

std::string_view to_string(Stance stance);
std::optional<Stance> parse_stance(std::string_view text);

// entailment -> TRUE, contradiction -> FALSE, neutral -> NOT_ENOUGH_EVIDENCE
Label stance_to_label(Stance stance);

struct MajorityResult {
  Label label;
  double confidence;  // count of the most frequent stance / number of stances
};

// Plurality vote over stances; a tie for the top count abstains with
// NOT_ENOUGH_EVIDENCE. Throws EmptyEvidence on an empty input.
MajorityResult majority_vote(std::span<const Stance> stances);

struct ParsedVerdict {
  Label label;
  std::string rationale;
};

// First non-empty line must start with one of the four label tokens; the
// rest of that line (after separators) and any later lines form the
// rationale. Throws ParseError otherwise.
ParsedVerdict parse_verifier_reply(std::string_view reply);

// Renders evidence as numbered lines for the verifier prompt.
std::string format_evidence(std::span<const Evidence> evidence);

Verdict verify_llm(const Claim& claim, std::span<const Evidence> evidence, ModelGateway& gateway,
                   CostMeter& meter);

struct NliResult {
  Stance stance;
  double score = 0.0;
};

class NliClient {
 public:
  virtual ~NliClient() = default;
  // premise = evidence passage, hypothesis = claim. Throws NLIError.
  virtual NliResult classify(std::string_view premise, std::string_view hypothesis) = 0;
};

// POST {premise, hypothesis} -> {label, score} to any stance endpoint.
class HttpNliClient : public NliClient {
 public:
  explicit HttpNliClient(std::string url, std::chrono::milliseconds timeout = std::chrono::seconds(30))
      : url_(std::move(url)), timeout_(timeout) {}
  NliResult classify(std::string_view premise, std::string_view hypothesis) override;

 private:
  std::string url_;
  std::chrono::milliseconds timeout_;
};

// Deterministic lexical stand-in for a real NLI model: coverage of the
// hypothesis terms by the premise decides entailment vs. neutral, and a
// negation-cue mismatch at high coverage flips entailment to contradiction.
class LexicalOverlapNli : public NliClient {
 public:
  explicit LexicalOverlapNli(double entail_threshold = 0.6) : threshold_(entail_threshold) {}
  NliResult classify(std::string_view premise, std::string_view hypothesis) override;

 private:
  double threshold_;
};

// One stance per passage, majority through stance_to_label. Never emits
// OPINION. Throws EmptyEvidence.
Verdict verify_nli(const Claim& claim, std::span<const Evidence> evidence, NliClient& nli);

// Severity order for folding claim verdicts into a document verdict.
struct AggregationPolicy {
  // Labels excluded from the fold.
  std::vector<Label> excluded{Label::kOpinion};
  // Most severe first; the first label present wins.
  std::vector<Label> severity{Label::kFalse, Label::kNotEnoughEvidence, Label::kTrue};
  // Result when every verdict is excluded.
  Label when_nothing_checkable = Label::kNotEnoughEvidence;
};

// Throws EmptyVerdicts.
Verdict aggregate_document(std::span<const Verdict> verdicts, const AggregationPolicy& policy = {});

}  // namespace ofc
