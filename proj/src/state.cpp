#include "ofc/state.hpp"

#include <set>
#include <sstream>

#include "ofc/error.hpp"
#include "ofc/util.hpp"

namespace ofc {

using nlohmann::json;

ClaimId ClaimId::from_text(std::string_view claim_text) {
  return ClaimId(sha256_hex(normalize_whitespace(claim_text)).substr(0, 16));
}

ClaimId ClaimId::document() { return ClaimId("DOCUMENT"); }

Claim Claim::make(std::string text, ClaimOrigin origin, std::optional<std::size_t> sentence_index) {
  Claim claim;
  claim.text = normalize_whitespace(text);
  claim.id = ClaimId::from_text(claim.text);
  claim.origin = origin;
  claim.source_sentence_index = sentence_index;
  return claim;
}

std::string Evidence::id() const { return claim_id.str() + "/" + std::to_string(rank); }

std::string_view to_string(Label label) {
  switch (label) {
    case Label::kTrue: return "TRUE";
    case Label::kFalse: return "FALSE";
    case Label::kNotEnoughEvidence: return "NOT_ENOUGH_EVIDENCE";
    case Label::kOpinion: return "OPINION";
  }
  return "NOT_ENOUGH_EVIDENCE";
}

std::optional<Label> parse_label(std::string_view token) {
  std::string upper = to_upper(trim(token));
  if (upper == "TRUE") return Label::kTrue;
  if (upper == "FALSE") return Label::kFalse;
  if (upper == "NOT_ENOUGH_EVIDENCE") return Label::kNotEnoughEvidence;
  if (upper == "OPINION") return Label::kOpinion;
  return std::nullopt;
}

std::string_view to_string(SemanticType type) {
  switch (type) {
    case SemanticType::kDocument: return "document";
    case SemanticType::kClaims: return "claims";
    case SemanticType::kEvidence: return "evidence";
    case SemanticType::kVerdicts: return "verdicts";
    case SemanticType::kOpaque: return "opaque";
  }
  return "opaque";
}

std::optional<SemanticType> parse_semantic_type(std::string_view text) {
  for (auto type : {SemanticType::kDocument, SemanticType::kClaims, SemanticType::kEvidence,
                    SemanticType::kVerdicts, SemanticType::kOpaque}) {
    if (to_string(type) == text) return type;
  }
  return std::nullopt;
}

std::string_view to_string(ClaimOrigin origin) {
  switch (origin) {
    case ClaimOrigin::kSentenceSplit: return "sentence_split";
    case ClaimOrigin::kLlmDecomposed: return "llm_decomposed";
    case ClaimOrigin::kDecontextualized: return "decontextualized";
    case ClaimOrigin::kPreannotated: return "preannotated";
  }
  return "preannotated";
}

namespace {

template <typename T>
const T& slot_get(const Slot::Payload& payload, SemanticType type) {
  if (const T* value = std::get_if<T>(&payload)) return *value;
  throw Error(ErrorCode::kInvalidArgument,
              "slot does not hold a " + std::string(to_string(type)) + " value");
}

}  // namespace

const std::string& Slot::as_document() const {
  return slot_get<std::string>(payload_, SemanticType::kDocument);
}
const std::vector<Claim>& Slot::as_claims() const {
  return slot_get<std::vector<Claim>>(payload_, SemanticType::kClaims);
}
const EvidenceMap& Slot::as_evidence() const {
  return slot_get<EvidenceMap>(payload_, SemanticType::kEvidence);
}
const VerdictMap& Slot::as_verdicts() const {
  return slot_get<VerdictMap>(payload_, SemanticType::kVerdicts);
}
const json& Slot::as_opaque() const { return slot_get<json>(payload_, SemanticType::kOpaque); }

FactCheckState FactCheckState::for_document(std::string document) {
  FactCheckState state;
  state.document = std::move(document);
  return state;
}

const Claim* FactCheckState::find_claim(const ClaimId& id) const {
  for (const auto& claim : claims) {
    if (claim.id == id) return &claim;
  }
  return nullptr;
}

Usd FactCheckState::total_cost() const {
  Usd total;
  for (const auto& entry : trace) total += entry.cost;
  return total;
}

std::optional<std::string> FactCheckState::check_invariants() const {
  std::set<ClaimId> ids;
  for (const auto& claim : claims) {
    if (!ids.insert(claim.id).second) return "duplicate claim id " + claim.id.str();
  }
  for (const auto& [id, list] : evidence) {
    if (!ids.contains(id)) return "evidence references unknown claim " + id.str();
  }
  for (const auto& [id, verdict] : verdicts) {
    if (!ids.contains(id)) return "verdict references unknown claim " + id.str();
  }
  return std::nullopt;
}

void seed_claims(FactCheckState& state, const std::string& slot_name,
                 const std::vector<std::string>& claim_texts) {
  std::vector<Claim> claims;
  std::set<ClaimId> seen;
  for (const auto& text : claim_texts) {
    if (trim(text).empty()) continue;
    Claim claim = Claim::make(text, ClaimOrigin::kPreannotated);
    if (seen.insert(claim.id).second) claims.push_back(std::move(claim));
  }
  state.claims = claims;
  state.named_slots.insert_or_assign(slot_name, Slot::claims(std::move(claims)));
}

json to_json(const Claim& claim) {
  json out = {{"id", claim.id.str()},
              {"text", claim.text},
              {"origin", to_string(claim.origin)}};
  out["source_sentence_index"] =
      claim.source_sentence_index ? json(*claim.source_sentence_index) : json(nullptr);
  return out;
}

json to_json(const Evidence& evidence) {
  return {{"id", evidence.id()},
          {"claim_id", evidence.claim_id.str()},
          {"rank", evidence.rank},
          {"score", evidence.score},
          {"source", evidence.source},
          {"text", evidence.text}};
}

json to_json(const Verdict& verdict) {
  json out = {{"claim_id", verdict.claim_id.str()},
              {"label", to_string(verdict.label)},
              {"evidence_ids", verdict.evidence_ids},
              {"rationale", verdict.rationale}};
  out["confidence"] = verdict.confidence ? json(*verdict.confidence) : json(nullptr);
  return out;
}

json to_json(const SolverTrace& trace, bool include_timing) {
  json out = {{"solver", trace.solver_name},
              {"succeeded", trace.succeeded},
              {"tokens_in", trace.tokens_in},
              {"tokens_out", trace.tokens_out},
              {"searches", trace.searches},
              {"cost_usd", trace.cost.to_string()}};
  out["note"] = trace.note ? json(*trace.note) : json(nullptr);
  if (include_timing) out["duration_ms"] = trace.duration_ms;
  return out;
}

json to_json(const FactCheckState& state, bool include_timing) {
  json out;
  out["schema_version"] = 1;
  out["success"] = state.success;
  out["document"] = state.document;
  out["question"] = state.question ? json(*state.question) : json(nullptr);
  out["sentences"] = state.sentences;
  out["claims"] = json::array();
  for (const auto& claim : state.claims) out["claims"].push_back(to_json(claim));
  out["evidence"] = json::object();
  for (const auto& [id, list] : state.evidence) {
    json items = json::array();
    for (const auto& evidence : list) items.push_back(to_json(evidence));
    out["evidence"][id.str()] = std::move(items);
  }
  out["verdicts"] = json::object();
  for (const auto& [id, verdict] : state.verdicts) out["verdicts"][id.str()] = to_json(verdict);
  out["document_verdict"] =
      state.document_verdict ? to_json(*state.document_verdict) : json(nullptr);
  out["trace"] = json::array();
  for (const auto& entry : state.trace) out["trace"].push_back(to_json(entry, include_timing));
  out["total_cost_usd"] = state.total_cost().to_string();
  return out;
}

namespace {

std::string table_cell(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (c == '|') out += "\\|";
    else if (c == '\n' || c == '\r') out += ' ';
    else out += c;
  }
  return out;
}

}  // namespace

std::string to_markdown(const FactCheckState& state) {
  std::ostringstream out;
  out << "# Fact-check summary\n\n";
  out << "- Run: " << (state.success ? "succeeded" : "failed") << "\n";
  if (state.document_verdict) {
    out << "- Document verdict: " << to_string(state.document_verdict->label) << " ("
        << table_cell(state.document_verdict->rationale) << ")\n";
  } else {
    out << "- Document verdict: none\n";
  }
  out << "- Claims: " << state.claims.size() << "\n";
  out << "- Cost: $" << state.total_cost().to_cents() << " (exact $" << state.total_cost().to_string() << ")\n\n";

  if (!state.claims.empty()) {
    out << "| # | Claim | Label | Evidence | Rationale |\n|---|---|---|---|---|\n";
    std::size_t n = 0;
    for (const auto& claim : state.claims) {
      auto ev = state.evidence.find(claim.id);
      auto verdict = state.verdicts.find(claim.id);
      out << "| " << ++n << " | " << table_cell(claim.text) << " | "
          << (verdict != state.verdicts.end() ? std::string(to_string(verdict->second.label)) : std::string("-"))
          << " | " << (ev != state.evidence.end() ? ev->second.size() : 0) << " | "
          << (verdict != state.verdicts.end() ? table_cell(verdict->second.rationale) : std::string()) << " |\n";
    }
    out << "\n";
  }

  out << "## Trace\n\n| Solver | Status | Tokens in | Tokens out | Searches | Cost (USD) | Note |\n"
         "|---|---|---|---|---|---|---|\n";
  for (const auto& entry : state.trace) {
    out << "| " << table_cell(entry.solver_name) << " | " << (entry.succeeded ? "ok" : "failed") << " | "
        << entry.tokens_in << " | " << entry.tokens_out << " | " << entry.searches << " | "
        << entry.cost.to_string() << " | " << table_cell(entry.note.value_or("")) << " |\n";
  }
  return out.str();
}

}  // namespace ofc
