#include "ofc/engine.hpp"

#include <chrono>

#include "ofc/util.hpp"

namespace ofc {

using nlohmann::json;

std::string ChainError::message() const {
  switch (kind) {
    case Kind::kNameMismatch:
      return "ChainMismatch at position " + std::to_string(position) + ": expected input '" +
             expected + "', found '" + found + "'";
    case Kind::kTypeMismatch:
      return "ChainMismatch at position " + std::to_string(position) + ": expected input type " +
             expected + ", found " + found;
    case Kind::kKindMismatch:
      return "ChainMismatch at position " + std::to_string(position) + ": registered kind " +
             expected + ", binding declares " + found;
    case Kind::kUnknownSolver:
      return "UnknownSolver at position " + std::to_string(position) + ": '" + found + "'";
  }
  return "ChainError";
}

json ChainError::to_json() const {
  static constexpr const char* kKinds[] = {"name", "type", "kind", "unknown_solver"};
  return {{"error", std::string(ofc::to_string(code()))},
          {"detail", kKinds[static_cast<int>(kind)]},
          {"position", position},
          {"expected", expected},
          {"found", found},
          {"message", message()}};
}

std::optional<ChainError> validate_chain(const PipelineConfig& config, const SolverRegistry& registry) {
  const RegistryEntry* previous = nullptr;
  for (std::size_t i = 0; i < config.solvers.size(); ++i) {
    const auto& binding = config.solvers[i];
    const RegistryEntry* entry = registry.find(binding.implementation);
    if (entry == nullptr) {
      return ChainError{ChainError::Kind::kUnknownSolver, i, "", binding.implementation};
    }
    if (binding.kind != SolverKind::kOther && binding.kind != entry->kind) {
      return ChainError{ChainError::Kind::kKindMismatch, i, std::string(to_string(entry->kind)),
                        std::string(to_string(binding.kind))};
    }
    if (i > 0) {
      const auto& before = config.solvers[i - 1];
      if (before.output_name != binding.input_name) {
        return ChainError{ChainError::Kind::kNameMismatch, i, before.output_name, binding.input_name};
      }
      if (previous->io.output != entry->io.input) {
        return ChainError{ChainError::Kind::kTypeMismatch, i,
                          std::string(to_string(previous->io.output)),
                          std::string(to_string(entry->io.input))};
      }
    }
    previous = entry;
  }
  return std::nullopt;
}

namespace {

std::optional<Slot> seed_from_state(const FactCheckState& state, SemanticType type) {
  switch (type) {
    case SemanticType::kDocument: return Slot::document(state.document);
    case SemanticType::kClaims: return Slot::claims(state.claims);
    case SemanticType::kEvidence: return Slot::evidence(state.evidence);
    case SemanticType::kVerdicts: return Slot::verdicts(state.verdicts);
    case SemanticType::kOpaque: return std::nullopt;
  }
  return std::nullopt;
}

void mirror_into_state(FactCheckState& state, const Slot& slot) {
  switch (slot.type()) {
    case SemanticType::kClaims:
      state.claims = slot.as_claims();
      // Evidence and verdicts of replaced claims would dangle.
      std::erase_if(state.evidence, [&](const auto& kv) { return !state.find_claim(kv.first); });
      std::erase_if(state.verdicts, [&](const auto& kv) { return !state.find_claim(kv.first); });
      break;
    case SemanticType::kEvidence: state.evidence = slot.as_evidence(); break;
    case SemanticType::kVerdicts: state.verdicts = slot.as_verdicts(); break;
    default: break;
  }
}

// Checks the claim joins the state would have after mirroring `slot`.
std::optional<std::string> join_violation(const FactCheckState& state, const Slot& slot) {
  FactCheckState probe;
  probe.claims = slot.type() == SemanticType::kClaims ? slot.as_claims() : state.claims;
  if (slot.type() == SemanticType::kEvidence) {
    probe.evidence = slot.as_evidence();
  } else if (slot.type() != SemanticType::kClaims) {
    probe.evidence = state.evidence;
  }
  if (slot.type() == SemanticType::kVerdicts) {
    probe.verdicts = slot.as_verdicts();
  } else if (slot.type() != SemanticType::kClaims) {
    probe.verdicts = state.verdicts;
  }
  return probe.check_invariants();
}

std::string describe(const std::exception& e) {
  if (const auto* error = dynamic_cast<const Error*>(&e)) {
    return std::string(to_string(error->code())) + ": " + error->what();
  }
  return std::string("SolverPanic: ") + e.what();
}

}  // namespace

FactCheckState run_pipeline(FactCheckState state, const PipelineConfig& config,
                            const SolverRegistry& registry, const Services& services,
                            CostMeter& meter, std::size_t start_at) {
  if (auto error = validate_chain(config, registry)) throw ChainValidationError(*error);
  if (start_at >= config.solvers.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "start_at " + std::to_string(start_at) + " is past the last solver");
  }

  const auto& first = config.solvers[start_at];
  const auto& first_entry = registry.resolve(first.implementation);
  auto slot_it = state.named_slots.find(first.input_name);
  if (slot_it == state.named_slots.end()) {
    std::optional<Slot> seeded;
    if (start_at == 0) seeded = seed_from_state(state, first_entry.io.input);
    if (!seeded) {
      throw Error(ErrorCode::kMissingInputSlot,
                  "solver '" + first.name + "' needs slot '" + first.input_name + "'");
    }
    state.named_slots.emplace(first.input_name, std::move(*seeded));
  } else if (slot_it->second.type() != first_entry.io.input) {
    throw Error(ErrorCode::kMissingInputSlot, "SlotTypeMismatch",
                "slot '" + first.input_name + "' holds " + std::string(to_string(slot_it->second.type())) +
                    ", solver '" + first.name + "' expects " + std::string(to_string(first_entry.io.input)));
  }

  state.success = false;
  SolverContext context{services, meter};
  for (std::size_t i = start_at; i < config.solvers.size(); ++i) {
    const auto& binding = config.solvers[i];
    const auto& entry = registry.resolve(binding.implementation);

    SolverTrace trace;
    trace.solver_name = binding.name;
    const MeterSnapshot before = meter.snapshot();
    const auto started = std::chrono::steady_clock::now();
    try {
      std::unique_ptr<Solver> solver = entry.factory(binding);
      const Slot& input = state.named_slots.at(binding.input_name);
      Slot output = solver->run(input, state, context);
      if (output.type() != entry.io.output) {
        throw Error(ErrorCode::kInvariantViolation,
                    "solver produced " + std::string(to_string(output.type())) + ", declared " +
                        std::string(to_string(entry.io.output)));
      }
      if (auto broken = join_violation(state, output)) {
        throw Error(ErrorCode::kInvariantViolation, *broken);
      }
      mirror_into_state(state, output);
      state.named_slots.insert_or_assign(binding.output_name, std::move(output));
      trace.succeeded = true;
    } catch (const std::exception& e) {
      trace.note = describe(e);
    } catch (...) {
      trace.note = "SolverPanic: non-standard exception";
    }
    const auto elapsed = std::chrono::steady_clock::now() - started;
    trace.duration_ms = std::chrono::duration<double, std::milli>(elapsed).count();
    const MeterSnapshot used = meter.snapshot() - before;
    trace.tokens_in = used.tokens_in;
    trace.tokens_out = used.tokens_out;
    trace.searches = used.searches;
    trace.cost = used.total();

    const bool ok = trace.succeeded;
    state.trace.push_back(std::move(trace));
    if (!ok) return state;
  }
  state.success = true;
  return state;
}

void write_run_files(const std::filesystem::path& dir, const FactCheckState& state, bool with_timing) {
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "state.json", to_json(state, false).dump(2) + "\n");
  write_file_atomic(dir / "summary.md", to_markdown(state));
  if (with_timing) {
    nlohmann::json timing = {{"schema_version", 1}, {"trace", nlohmann::json::array()}};
    for (const auto& entry : state.trace) timing["trace"].push_back(to_json(entry, true));
    write_file_atomic(dir / "timing.json", timing.dump(2) + "\n");
  }
}

}  // namespace ofc
