#pragma once

#include "ofc/registry.hpp"

namespace ofc {

// Registers the shipped solvers:
//
//   sentence.claim_processor      document -> claims   one claim per sentence
//   factscore.claim_processor     document -> claims   split, then decompose each sentence
//   factool.claim_processor       document -> claims   decompose the whole document
//   factcheckgpt.claim_processor  document -> claims   per-sentence decomposition + decontextualization
//   bm25.retriever                claims -> evidence   params: index (path), k, k1, b
//   serper.retriever              claims -> evidence   params: k
//   llm.verifier                  evidence -> verdicts
//   nli.verifier                  evidence -> verdicts
//
// Verifiers also fold their claim verdicts into state.document_verdict.
void register_builtins(SolverRegistry& registry);

SolverRegistry builtin_registry();

}  // namespace ofc
