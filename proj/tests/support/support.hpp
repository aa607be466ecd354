#pragma once

// Helpers shared by the unit suites and the acceptance gate.

#include <atomic>
#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <unistd.h>

#include "ofc/config.hpp"
#include "ofc/engine.hpp"
#include "ofc/error.hpp"
#include "ofc/registry.hpp"
#include "ofc/state.hpp"
#include "ofc/util.hpp"

#ifndef OFC_SOURCE_DIR
#define OFC_SOURCE_DIR "."
#endif

namespace ofc::testing {

inline std::filesystem::path source_dir() { return OFC_SOURCE_DIR; }
inline std::filesystem::path fixture(const std::string& name) { return source_dir() / "tests" / "fixtures" / name; }

// A scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "ofc") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Adapts a lambda into a solver. The binding param fail=true makes it throw.
class LambdaSolver : public Solver {
 public:
  using Fn = std::function<Slot(const Slot&, FactCheckState&, SolverContext&)>;
  LambdaSolver(Fn fn, bool fail) : fn_(std::move(fn)), fail_(fail) {}
  Slot run(const Slot& input, FactCheckState& state, SolverContext& ctx) override {
    if (fail_) throw Error(ErrorCode::kProvider, "injected failure");
    return fn_(input, state, ctx);
  }

 private:
  Fn fn_;
  bool fail_;
};

// Binding params tokens_in / tokens_out / searches are charged to the meter
// before the lambda runs.
inline SolverFactory lambda_factory(LambdaSolver::Fn fn) {
  return [fn](const SolverBinding& binding) {
    const auto in = static_cast<std::uint64_t>(binding.params.get_int("tokens_in", 0));
    const auto out = static_cast<std::uint64_t>(binding.params.get_int("tokens_out", 0));
    const auto searches = static_cast<std::uint64_t>(binding.params.get_int("searches", 0));
    auto metered = [fn, in, out, searches](const Slot& input, FactCheckState& state, SolverContext& ctx) {
      ctx.meter.add_tokens(in, out);
      ctx.meter.add_search(searches);
      return fn(input, state, ctx);
    };
    return std::unique_ptr<Solver>(std::make_unique<LambdaSolver>(metered, binding.params.get_bool("fail", false)));
  };
}

// Typed stub solvers:
//   t.doc2claims        claim_processor  document -> claims (one per '.'-terminated piece)
//   t.claims2evidence   retriever        claims -> evidence (one passage per claim)
//   t.evidence2verdicts verifier         evidence -> verdicts (TRUE for each claim)
//   t.mixed_verdicts    verifier         evidence -> verdicts (label from the claim id)
//   t.claims2claims     other            claims -> claims (identity)
//   t.opaque            other            opaque -> opaque (counts steps)
inline SolverRegistry test_registry() {
  SolverRegistry registry;
  registry.register_solver(
      "t.doc2claims", SolverKind::kClaimProcessor, {SemanticType::kDocument, SemanticType::kClaims},
      lambda_factory([](const Slot& input, FactCheckState&, SolverContext&) {
        std::vector<Claim> claims;
        for (const auto& piece : split(input.as_document(), '.')) {
          if (!trim(piece).empty()) claims.push_back(Claim::make(std::string(trim(piece)) + ".", ClaimOrigin::kPreannotated));
        }
        return Slot::claims(std::move(claims));
      }));
  registry.register_solver(
      "t.claims2evidence", SolverKind::kRetriever, {SemanticType::kClaims, SemanticType::kEvidence},
      lambda_factory([](const Slot& input, FactCheckState&, SolverContext&) {
        EvidenceMap map;
        for (const auto& claim : input.as_claims()) {
          map[claim.id].push_back(Evidence{claim.id, "passage about " + claim.text, "stub", 1, 1.0});
        }
        return Slot::evidence(std::move(map));
      }));
  registry.register_solver(
      "t.evidence2verdicts", SolverKind::kVerifier, {SemanticType::kEvidence, SemanticType::kVerdicts},
      lambda_factory([](const Slot&, FactCheckState& state, SolverContext&) {
        VerdictMap map;
        for (const auto& claim : state.claims) {
          map[claim.id] = Verdict{claim.id, Label::kTrue, 1.0, {}, "stub"};
        }
        return Slot::verdicts(std::move(map));
      }));
  registry.register_solver(
      "t.mixed_verdicts", SolverKind::kVerifier, {SemanticType::kEvidence, SemanticType::kVerdicts},
      lambda_factory([](const Slot&, FactCheckState& state, SolverContext&) {
        static constexpr Label kLabels[] = {Label::kTrue, Label::kFalse, Label::kNotEnoughEvidence, Label::kOpinion};
        VerdictMap map;
        for (const auto& claim : state.claims) {
          const int digit = std::stoi(claim.id.str().substr(0, 1), nullptr, 16);
          map[claim.id] = Verdict{claim.id, kLabels[digit % 4], std::nullopt, {}, "stub"};
        }
        return Slot::verdicts(std::move(map));
      }));
  registry.register_solver("t.claims2claims", SolverKind::kOther, {SemanticType::kClaims, SemanticType::kClaims},
                           lambda_factory([](const Slot& input, FactCheckState&, SolverContext&) { return input; }));
  registry.register_solver("t.opaque", SolverKind::kOther, {SemanticType::kOpaque, SemanticType::kOpaque},
                           lambda_factory([](const Slot& input, FactCheckState&, SolverContext&) {
                             nlohmann::json value = input.as_opaque();
                             value["steps"] = value.value("steps", 0) + 1;
                             return Slot::opaque(value);
                           }));
  return registry;
}

inline SolverBinding binding(std::string name, SolverKind kind, std::string impl, std::string in, std::string out,
                             std::map<std::string, std::string> params = {}) {
  return SolverBinding{std::move(name), kind, std::move(impl), std::move(in), std::move(out), Params(std::move(params))};
}

// document -> claims -> evidence -> verdicts over the stub solvers.
inline PipelineConfig three_stage(std::map<std::string, std::string> p0 = {}, std::map<std::string, std::string> p1 = {},
                                  std::map<std::string, std::string> p2 = {}) {
  return PipelineConfig{"three_stage",
                        {binding("claims", SolverKind::kClaimProcessor, "t.doc2claims", "document", "claims", p0),
                         binding("retrieve", SolverKind::kRetriever, "t.claims2evidence", "claims", "evidence", p1),
                         binding("verify", SolverKind::kVerifier, "t.evidence2verdicts", "evidence", "verdicts", p2)}};
}

}  // namespace ofc::testing
