#include "ofc/verifiers.hpp"

#include <algorithm>
#include <array>
#include <set>

#include <json.hpp>

#include "http_util.hpp"
#include "ofc/error.hpp"
#include "ofc/prompts.hpp"
#include "ofc/retrieval.hpp"
#include "ofc/util.hpp"

namespace ofc {

using nlohmann::json;

std::string_view to_string(Stance stance) {
  switch (stance) {
    case Stance::kEntailment: return "entailment";
    case Stance::kContradiction: return "contradiction";
    case Stance::kNeutral: return "neutral";
  }
  return "neutral";
}

std::optional<Stance> parse_stance(std::string_view text) {
  std::string lower = to_lower(trim(text));
  if (lower == "entailment" || lower == "entail" || lower == "entailed") return Stance::kEntailment;
  if (lower == "contradiction" || lower == "contradict") return Stance::kContradiction;
  if (lower == "neutral") return Stance::kNeutral;
  return std::nullopt;
}

Label stance_to_label(Stance stance) {
  switch (stance) {
    case Stance::kEntailment: return Label::kTrue;
    case Stance::kContradiction: return Label::kFalse;
    case Stance::kNeutral: return Label::kNotEnoughEvidence;
  }
  return Label::kNotEnoughEvidence;
}

MajorityResult majority_vote(std::span<const Stance> stances) {
  if (stances.empty()) throw Error(ErrorCode::kEmptyEvidence, "no stances to vote over");
  std::array<std::size_t, 3> counts{};
  for (Stance s : stances) ++counts[static_cast<std::size_t>(s)];
  const std::size_t best = *std::max_element(counts.begin(), counts.end());
  const auto winners = std::count(counts.begin(), counts.end(), best);
  const double confidence = static_cast<double>(best) / static_cast<double>(stances.size());
  if (winners > 1) return {Label::kNotEnoughEvidence, confidence};
  const auto top = static_cast<Stance>(std::find(counts.begin(), counts.end(), best) - counts.begin());
  return {stance_to_label(top), confidence};
}

ParsedVerdict parse_verifier_reply(std::string_view reply) {
  const auto lines = split_lines(reply);
  std::size_t first = 0;
  while (first < lines.size() && trim(lines[first]).empty()) ++first;
  if (first == lines.size()) throw Error(ErrorCode::kParse, "empty verifier reply");

  std::string_view head = trim(lines[first]);
  while (!head.empty() && (head.front() == '*' || head.front() == '"')) head.remove_prefix(1);
  // Longest token first so NOT_ENOUGH_EVIDENCE is not read as something shorter.
  static constexpr std::array<std::pair<std::string_view, Label>, 4> kTokens = {{
      {"NOT_ENOUGH_EVIDENCE", Label::kNotEnoughEvidence},
      {"OPINION", Label::kOpinion},
      {"FALSE", Label::kFalse},
      {"TRUE", Label::kTrue},
  }};
  for (const auto& [token, label] : kTokens) {
    if (head.size() < token.size() || to_upper(head.substr(0, token.size())) != token) continue;
    std::string_view rest = head.substr(token.size());
    if (!rest.empty() && (std::isalnum(static_cast<unsigned char>(rest.front())) || rest.front() == '_')) continue;
    // Separators between the label and an inline rationale.
    for (bool stripped = true; stripped;) {
      stripped = false;
      rest = trim(rest);
      for (std::string_view sep : {"\xE2\x80\x94", "\xE2\x80\x93", "-", ":", ".", ",", "*", "\""}) {
        if (rest.starts_with(sep)) {
          rest.remove_prefix(sep.size());
          stripped = true;
        }
      }
    }
    std::string rationale(rest);
    for (std::size_t i = first + 1; i < lines.size(); ++i) {
      auto line = trim(lines[i]);
      if (line.empty()) continue;
      if (!rationale.empty()) rationale += ' ';
      rationale += line;
    }
    return {label, rationale};
  }
  throw Error(ErrorCode::kParse, "verifier reply has no label on its first line: " + std::string(reply));
}

std::string format_evidence(std::span<const Evidence> evidence) {
  if (evidence.empty()) return "(no evidence retrieved)";
  std::string out;
  for (std::size_t i = 0; i < evidence.size(); ++i) {
    if (i > 0) out += '\n';
    out += "[" + std::to_string(i + 1) + "] " + normalize_whitespace(evidence[i].text);
    if (!evidence[i].source.empty()) out += " (source: " + evidence[i].source + ")";
  }
  return out;
}

Verdict verify_llm(const Claim& claim, std::span<const Evidence> evidence, ModelGateway& gateway,
                   CostMeter& meter) {
  const std::string prompt = prompts::render(
      prompts::get(prompts::kVerify), {{"claim", claim.text}, {"evidence", format_evidence(evidence)}});
  auto reply = gateway.chat(prompt, {}, meter);
  auto parsed = parse_verifier_reply(reply.text);
  Verdict verdict;
  verdict.claim_id = claim.id;
  verdict.label = parsed.label;
  verdict.rationale = std::move(parsed.rationale);
  for (const auto& e : evidence) verdict.evidence_ids.push_back(e.id());
  return verdict;
}

NliResult HttpNliClient::classify(std::string_view premise, std::string_view hypothesis) {
  auto url = detail::split_url(url_);
  auto client = detail::make_client(url, timeout_);
  json body = {{"premise", std::string(premise)}, {"hypothesis", std::string(hypothesis)}};
  auto res = client->Post(url.path.empty() ? "/" : url.path, body.dump(), "application/json");
  if (!res) throw Error(ErrorCode::kNli, "NLI request failed: " + httplib::to_string(res.error()));
  if (res->status != 200) throw Error(ErrorCode::kNli, "NLI endpoint returned HTTP " + std::to_string(res->status));
  json parsed = json::parse(res->body, nullptr, false);
  if (parsed.is_discarded() || !parsed.contains("label") || !parsed["label"].is_string()) {
    throw Error(ErrorCode::kNli, "malformed NLI response: " + res->body.substr(0, 200));
  }
  auto stance = parse_stance(parsed["label"].get<std::string>());
  if (!stance) throw Error(ErrorCode::kNli, "unknown NLI label " + parsed["label"].get<std::string>());
  return {*stance, parsed.value("score", 0.0)};
}

namespace {

bool has_negation(const std::vector<std::string>& terms) {
  static const std::set<std::string, std::less<>> kCues = {"not", "no", "never", "none", "neither",
                                                           "nor", "without", "isn", "wasn", "aren",
                                                           "weren", "didn", "doesn", "don", "cannot"};
  return std::any_of(terms.begin(), terms.end(), [](const auto& t) { return kCues.contains(t); });
}

}  // namespace

NliResult LexicalOverlapNli::classify(std::string_view premise, std::string_view hypothesis) {
  const auto premise_terms = tokenize_terms(premise);
  const auto hypothesis_terms = tokenize_terms(hypothesis);
  if (hypothesis_terms.empty()) return {Stance::kNeutral, 0.0};
  const std::set<std::string> premise_set(premise_terms.begin(), premise_terms.end());
  const std::set<std::string> hypothesis_set(hypothesis_terms.begin(), hypothesis_terms.end());
  std::size_t covered = 0;
  for (const auto& term : hypothesis_set) covered += premise_set.contains(term) ? 1 : 0;
  const double coverage = static_cast<double>(covered) / static_cast<double>(hypothesis_set.size());
  if (coverage < threshold_) return {Stance::kNeutral, 1.0 - coverage};
  if (has_negation(premise_terms) != has_negation(hypothesis_terms)) return {Stance::kContradiction, coverage};
  return {Stance::kEntailment, coverage};
}

Verdict verify_nli(const Claim& claim, std::span<const Evidence> evidence, NliClient& nli) {
  if (evidence.empty()) throw Error(ErrorCode::kEmptyEvidence, "NLI verification needs evidence");
  std::vector<Stance> stances;
  std::vector<std::string> notes;
  for (const auto& e : evidence) {
    auto result = nli.classify(e.text, claim.text);
    stances.push_back(result.stance);
    notes.push_back("[" + std::to_string(e.rank) + "] " + std::string(to_string(result.stance)));
  }
  auto vote = majority_vote(stances);
  Verdict verdict;
  verdict.claim_id = claim.id;
  verdict.label = vote.label;
  verdict.confidence = vote.confidence;
  for (const auto& e : evidence) verdict.evidence_ids.push_back(e.id());
  std::string rationale = "stances:";
  for (const auto& note : notes) rationale += " " + note;
  verdict.rationale = std::move(rationale);
  return verdict;
}

Verdict aggregate_document(std::span<const Verdict> verdicts, const AggregationPolicy& policy) {
  if (verdicts.empty()) throw Error(ErrorCode::kEmptyVerdicts, "no claim verdicts to aggregate");
  std::set<Label> present;
  for (const auto& v : verdicts) {
    if (std::find(policy.excluded.begin(), policy.excluded.end(), v.label) == policy.excluded.end()) {
      present.insert(v.label);
    }
  }
  Verdict out;
  out.claim_id = ClaimId::document();
  out.label = policy.when_nothing_checkable;
  for (Label label : policy.severity) {
    if (present.contains(label)) {
      out.label = label;
      break;
    }
  }
  std::size_t checked = 0;
  std::size_t matching = 0;
  for (const auto& v : verdicts) {
    if (!present.contains(v.label)) continue;
    ++checked;
    if (v.label == out.label) ++matching;
  }
  out.rationale = present.empty()
                      ? "no checkable claims"
                      : std::to_string(matching) + " of " + std::to_string(checked) + " checkable claims are " +
                            std::string(to_string(out.label));
  return out;
}

}  // namespace ofc
