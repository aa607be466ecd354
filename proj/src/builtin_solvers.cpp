#include "ofc/builtin_solvers.hpp"

#include <set>

#include "ofc/claims.hpp"
#include "ofc/error.hpp"
#include "ofc/retrieval.hpp"
#include "ofc/verifiers.hpp"
#include "ofc/web_search.hpp"

namespace ofc {

namespace {

constexpr IoDeclaration kDocumentToClaims{SemanticType::kDocument, SemanticType::kClaims};
constexpr IoDeclaration kClaimsToEvidence{SemanticType::kClaims, SemanticType::kEvidence};
constexpr IoDeclaration kEvidenceToVerdicts{SemanticType::kEvidence, SemanticType::kVerdicts};

std::size_t param_k(const Params& params) {
  const long long k = params.get_int("k", 5);
  if (k < 1) throw Error(ErrorCode::kSchema, "InvalidParam", "k must be at least 1");
  return static_cast<std::size_t>(k);
}

std::vector<Claim> unique_claims(std::vector<Claim> claims) {
  std::vector<Claim> out;
  std::set<ClaimId> seen;
  for (auto& claim : claims) {
    if (seen.insert(claim.id).second) out.push_back(std::move(claim));
  }
  return out;
}

// Adapts a function of (input, state, ctx) into a Solver.
template <typename Fn>
class FnSolver : public Solver {
 public:
  explicit FnSolver(Fn fn) : fn_(std::move(fn)) {}
  Slot run(const Slot& input, FactCheckState& state, SolverContext& ctx) override {
    return fn_(input, state, ctx);
  }

 private:
  Fn fn_;
};

template <typename Fn>
std::unique_ptr<Solver> make_solver(Fn fn) {
  return std::make_unique<FnSolver<Fn>>(std::move(fn));
}

Slot sentence_processor(const Slot& input, FactCheckState& state, SolverContext&) {
  state.sentences = split_sentences(input.as_document());
  std::vector<Claim> claims;
  for (std::size_t i = 0; i < state.sentences.size(); ++i) {
    claims.push_back(Claim::make(state.sentences[i], ClaimOrigin::kSentenceSplit, i));
  }
  return Slot::claims(unique_claims(std::move(claims)));
}

Slot factscore_processor(const Slot& input, FactCheckState& state, SolverContext& ctx) {
  const auto& document = input.as_document();
  state.sentences = split_sentences(document);
  return Slot::claims(decompose_per_sentence(document, ctx.services.require_gateway(), ctx.meter));
}

Slot factool_processor(const Slot& input, FactCheckState&, SolverContext& ctx) {
  return Slot::claims(decompose_document(input.as_document(), ctx.services.require_gateway(), ctx.meter));
}

Slot factcheckgpt_processor(const Slot& input, FactCheckState& state, SolverContext& ctx) {
  const auto& document = input.as_document();
  auto& gateway = ctx.services.require_gateway();
  state.sentences = split_sentences(document);
  std::vector<Claim> claims;
  for (const auto& claim : decompose_per_sentence(document, gateway, ctx.meter)) {
    claims.push_back(decontextualize(claim, document, gateway, ctx.meter));
  }
  return Slot::claims(unique_claims(std::move(claims)));
}

std::unique_ptr<Solver> make_bm25(const SolverBinding& binding) {
  const auto index_path = binding.params.get("index");
  if (!index_path || index_path->empty()) {
    throw Error(ErrorCode::kSchema, "MissingField", "bm25.retriever needs an 'index' param");
  }
  const std::size_t k = param_k(binding.params);
  Bm25Params bm25{binding.params.get_double("k1", 1.5), binding.params.get_double("b", 0.75)};
  return make_solver([path = *index_path, k, bm25](const Slot& input, FactCheckState&, SolverContext& ctx) {
    auto index = ctx.services.indexes->get(path);
    EvidenceMap evidence;
    for (const auto& claim : input.as_claims()) evidence[claim.id] = bm25_retrieve(claim, *index, k, bm25);
    return Slot::evidence(std::move(evidence));
  });
}

std::unique_ptr<Solver> make_serper(const SolverBinding& binding) {
  const std::size_t k = param_k(binding.params);
  return make_solver([k](const Slot& input, FactCheckState&, SolverContext& ctx) {
    auto& client = ctx.services.require_search();
    EvidenceMap evidence;
    for (const auto& claim : input.as_claims()) evidence[claim.id] = web_search(claim, client, k, ctx.meter);
    return Slot::evidence(std::move(evidence));
  });
}

// Verifies every claim in the state against its evidence, then folds the
// claim verdicts into the document verdict.
template <typename VerifyOne>
Slot verify_all(const EvidenceMap& evidence, FactCheckState& state, VerifyOne verify_one) {
  VerdictMap verdicts;
  std::vector<Verdict> folded;
  for (const auto& claim : state.claims) {
    auto it = evidence.find(claim.id);
    std::span<const Evidence> passages;
    if (it != evidence.end()) passages = it->second;
    Verdict verdict = verify_one(claim, passages);
    folded.push_back(verdict);
    verdicts.emplace(claim.id, std::move(verdict));
  }
  state.document_verdict.reset();
  if (!folded.empty()) state.document_verdict = aggregate_document(folded);
  return Slot::verdicts(std::move(verdicts));
}

Slot llm_verifier(const Slot& input, FactCheckState& state, SolverContext& ctx) {
  auto& gateway = ctx.services.require_gateway();
  return verify_all(input.as_evidence(), state, [&](const Claim& claim, std::span<const Evidence> passages) {
    return verify_llm(claim, passages, gateway, ctx.meter);
  });
}

Slot nli_verifier(const Slot& input, FactCheckState& state, SolverContext& ctx) {
  auto& nli = ctx.services.require_nli();
  return verify_all(input.as_evidence(), state, [&](const Claim& claim, std::span<const Evidence> passages) {
    if (passages.empty()) {
      Verdict verdict;
      verdict.claim_id = claim.id;
      verdict.label = Label::kNotEnoughEvidence;
      verdict.rationale = "no evidence retrieved";
      return verdict;
    }
    return verify_nli(claim, passages, nli);
  });
}

template <auto Fn>
SolverFactory stateless() {
  return [](const SolverBinding&) { return make_solver(Fn); };
}

}  // namespace

void register_builtins(SolverRegistry& registry) {
  registry
      .register_solver("sentence.claim_processor", SolverKind::kClaimProcessor, kDocumentToClaims,
                       stateless<sentence_processor>(), "One claim per rule-split sentence, no model calls")
      .register_solver("factscore.claim_processor", SolverKind::kClaimProcessor, kDocumentToClaims,
                       stateless<factscore_processor>(), "Split into sentences, then decompose each sentence")
      .register_solver("factool.claim_processor", SolverKind::kClaimProcessor, kDocumentToClaims,
                       stateless<factool_processor>(), "Decompose the whole document in one model call")
      .register_solver("factcheckgpt.claim_processor", SolverKind::kClaimProcessor, kDocumentToClaims,
                       stateless<factcheckgpt_processor>(),
                       "Per-sentence decomposition followed by decontextualization of each claim")
      .register_solver("bm25.retriever", SolverKind::kRetriever, kClaimsToEvidence, make_bm25,
                       "Okapi BM25 over a persisted offline corpus index")
      .register_solver("serper.retriever", SolverKind::kRetriever, kClaimsToEvidence, make_serper,
                       "Top-k organic web search results")
      .register_solver("llm.verifier", SolverKind::kVerifier, kEvidenceToVerdicts, stateless<llm_verifier>(),
                       "Model judgment from the evidence and the model's own knowledge")
      .register_solver("nli.verifier", SolverKind::kVerifier, kEvidenceToVerdicts, stateless<nli_verifier>(),
                       "Majority vote over per-passage NLI stances");
}

SolverRegistry builtin_registry() {
  SolverRegistry registry;
  register_builtins(registry);
  return registry;
}

}  // namespace ofc
