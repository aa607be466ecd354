#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "ofc/config.hpp"
#include "ofc/error.hpp"
#include "ofc/registry.hpp"
#include "ofc/state.hpp"

namespace ofc {

struct ChainError {
  enum class Kind {
    kNameMismatch,   // output_name(i-1) != input_name(i)
    kTypeMismatch,   // declared output type of i-1 != declared input type of i
    kKindMismatch,   // binding kind disagrees with the registered kind
    kUnknownSolver,
  };

  Kind kind;
  std::size_t position = 0;
  std::string expected;
  std::string found;

  ErrorCode code() const {
    return kind == Kind::kUnknownSolver ? ErrorCode::kUnknownSolver : ErrorCode::kChainMismatch;
  }
  std::string message() const;
  nlohmann::json to_json() const;
};

class ChainValidationError : public Error {
 public:
  explicit ChainValidationError(ChainError detail)
      : Error(detail.code(), detail.message()), detail_(std::move(detail)) {}
  const ChainError& detail() const { return detail_; }

 private:
  ChainError detail_;
};

// Empty when every implementation resolves, kinds agree and each
// consecutive pair is matched by name and by declared semantic type.
std::optional<ChainError> validate_chain(const PipelineConfig& config, const SolverRegistry& registry);

// Runs solvers [start_at, end) over `state`.
//
// Each solver reads its input_name slot and writes its output_name slot;
// claims/evidence/verdicts outputs are also mirrored into the state's typed
// fields. A solver failure is recorded in its trace entry and halts the run
// with success=false. The engine itself only throws for caller errors:
// ChainValidationError, MissingInputSlot, InvalidArgument.
//
// With start_at == 0 an absent first input slot is seeded from the state
// field of the declared input type. With start_at > 0 the slot must exist.
FactCheckState run_pipeline(FactCheckState state, const PipelineConfig& config,
                            const SolverRegistry& registry, const Services& services,
                            CostMeter& meter, std::size_t start_at = 0);

// state.json (the reproducible view) and summary.md; with `with_timing`
// also timing.json, the trace with wall-clock durations.
void write_run_files(const std::filesystem::path& dir, const FactCheckState& state, bool with_timing = false);

}  // namespace ofc
