#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ofc/money.hpp"

namespace ofc {

// Stable join key for claims: first 16 hex digits of SHA-256 over the
// whitespace-normalized claim text.
class ClaimId {
 public:
  ClaimId() = default;
  explicit ClaimId(std::string value) : value_(std::move(value)) {}

  static ClaimId from_text(std::string_view claim_text);
  // Sentinel used by document-level verdicts.
  static ClaimId document();

  const std::string& str() const { return value_; }
  bool empty() const { return value_.empty(); }

  bool operator==(const ClaimId&) const = default;
  auto operator<=>(const ClaimId&) const = default;

 private:
  std::string value_;
};

enum class ClaimOrigin { kSentenceSplit, kLlmDecomposed, kDecontextualized, kPreannotated };

struct Claim {
  ClaimId id;
  std::string text;
  std::optional<std::size_t> source_sentence_index;
  ClaimOrigin origin = ClaimOrigin::kPreannotated;

  static Claim make(std::string text, ClaimOrigin origin,
                    std::optional<std::size_t> sentence_index = std::nullopt);

  bool operator==(const Claim&) const = default;
};

struct Evidence {
  ClaimId claim_id;
  std::string text;
  std::string source;
  int rank = 0;  // 1-based
  double score = 0.0;

  // "<claim_id>/<rank>", referenced from Verdict::evidence_ids.
  std::string id() const;

  bool operator==(const Evidence&) const = default;
};

enum class Label { kTrue, kFalse, kNotEnoughEvidence, kOpinion };

std::string_view to_string(Label label);
std::optional<Label> parse_label(std::string_view token);

struct Verdict {
  ClaimId claim_id;
  Label label = Label::kNotEnoughEvidence;
  std::optional<double> confidence;
  std::vector<std::string> evidence_ids;
  std::string rationale;

  bool operator==(const Verdict&) const = default;
};

using EvidenceMap = std::map<ClaimId, std::vector<Evidence>>;
using VerdictMap = std::map<ClaimId, Verdict>;

struct SolverTrace {
  std::string solver_name;
  bool succeeded = false;
  double duration_ms = 0.0;
  std::uint64_t tokens_in = 0;
  std::uint64_t tokens_out = 0;
  std::uint64_t searches = 0;
  Usd cost;
  std::optional<std::string> note;
};

enum class SemanticType { kDocument, kClaims, kEvidence, kVerdicts, kOpaque };

std::string_view to_string(SemanticType type);
std::optional<SemanticType> parse_semantic_type(std::string_view text);

// A named-slot value. The type tag always agrees with the payload
// alternative; construct through the factories.
class Slot {
 public:
  using Payload =
      std::variant<std::string, std::vector<Claim>, EvidenceMap, VerdictMap, nlohmann::json>;

  static Slot document(std::string text) { return Slot(SemanticType::kDocument, std::move(text)); }
  static Slot claims(std::vector<Claim> claims) {
    return Slot(SemanticType::kClaims, std::move(claims));
  }
  static Slot evidence(EvidenceMap evidence) {
    return Slot(SemanticType::kEvidence, std::move(evidence));
  }
  static Slot verdicts(VerdictMap verdicts) {
    return Slot(SemanticType::kVerdicts, std::move(verdicts));
  }
  static Slot opaque(nlohmann::json value) { return Slot(SemanticType::kOpaque, std::move(value)); }

  SemanticType type() const { return type_; }
  const Payload& payload() const { return payload_; }

  const std::string& as_document() const;
  const std::vector<Claim>& as_claims() const;
  const EvidenceMap& as_evidence() const;
  const VerdictMap& as_verdicts() const;
  const nlohmann::json& as_opaque() const;

 private:
  Slot(SemanticType type, Payload payload) : type_(type), payload_(std::move(payload)) {}

  SemanticType type_;
  Payload payload_;
};

// The record threaded through one pipeline run.
struct FactCheckState {
  std::string document;
  std::optional<std::string> question;
  std::vector<std::string> sentences;
  std::vector<Claim> claims;
  EvidenceMap evidence;
  VerdictMap verdicts;
  std::optional<Verdict> document_verdict;
  std::vector<SolverTrace> trace;
  bool success = false;
  std::map<std::string, Slot> named_slots;

  static FactCheckState for_document(std::string document);

  const Claim* find_claim(const ClaimId& id) const;
  Usd total_cost() const;

  // Empty when the claim/evidence/verdict joins hold; otherwise a message.
  std::optional<std::string> check_invariants() const;
};

// Seeds `slot_name` with preannotated claims, for runs that skip the
// claim-processing stage.
void seed_claims(FactCheckState& state, const std::string& slot_name,
                 const std::vector<std::string>& claim_texts);

std::string_view to_string(ClaimOrigin origin);

nlohmann::json to_json(const Claim& claim);
nlohmann::json to_json(const Evidence& evidence);
nlohmann::json to_json(const Verdict& verdict);
nlohmann::json to_json(const SolverTrace& trace, bool include_timing);

// Structured view of a finished run. Wall-clock durations are left out
// unless `include_timing` is set so that the view is reproducible.
nlohmann::json to_json(const FactCheckState& state, bool include_timing = false);

// Human-readable run summary: document verdict, one row per claim, and the
// stage trace without durations.
std::string to_markdown(const FactCheckState& state);

}  // namespace ofc
