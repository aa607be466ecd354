#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "ofc/config.hpp"
#include "ofc/gateway.hpp"
#include "ofc/state.hpp"

namespace ofc {

class CorpusIndex;
class SearchClient;
class NliClient;

// Loads each persisted index once and shares it between runs.
class IndexCache {
 public:
  std::shared_ptr<const CorpusIndex> get(const std::filesystem::path& path);

 private:
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<const CorpusIndex>> loaded_;
};

// Backends that solvers draw on. Shared (read-only) across concurrent runs.
struct Services {
  std::shared_ptr<ModelGateway> gateway;
  std::shared_ptr<SearchClient> search;
  std::shared_ptr<NliClient> nli;
  std::shared_ptr<IndexCache> indexes = std::make_shared<IndexCache>();

  // Pricing for a run's meter: the gateway's, or all-zero without one.
  Pricing pricing() const;

  ModelGateway& require_gateway() const;
  SearchClient& require_search() const;
  NliClient& require_nli() const;
};

struct SolverContext {
  const Services& services;
  CostMeter& meter;
};

// A task solver reads its input slot and returns the value for its output
// slot. Throwing marks the solver as failed; the engine records the message.
class Solver {
 public:
  virtual ~Solver() = default;
  virtual Slot run(const Slot& input, FactCheckState& state, SolverContext& ctx) = 0;
};

using SolverFactory = std::function<std::unique_ptr<Solver>(const SolverBinding&)>;

struct IoDeclaration {
  SemanticType input;
  SemanticType output;
};

struct RegistryEntry {
  std::string key;
  SolverKind kind;
  IoDeclaration io;
  std::string description;
  SolverFactory factory;
};

class SolverRegistry {
 public:
  // Throws DuplicateKey if `key` is already registered.
  SolverRegistry& register_solver(std::string key, SolverKind kind, IoDeclaration io,
                                  SolverFactory factory, std::string description = {});

  const RegistryEntry* find(std::string_view key) const;
  // Throws UnknownSolver.
  const RegistryEntry& resolve(std::string_view key) const;

  std::vector<const RegistryEntry*> entries() const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, RegistryEntry, std::less<>> entries_;
};

nlohmann::json to_json(const SolverRegistry& registry);

}  // namespace ofc
