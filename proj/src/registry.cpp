#include "ofc/registry.hpp"

#include "ofc/error.hpp"
#include "ofc/retrieval.hpp"

namespace ofc {

std::shared_ptr<const CorpusIndex> IndexCache::get(const std::filesystem::path& path) {
  const std::string key = std::filesystem::absolute(path).lexically_normal().string();
  std::lock_guard lock(mutex_);
  if (auto it = loaded_.find(key); it != loaded_.end()) return it->second;
  auto index = std::make_shared<const CorpusIndex>(CorpusIndex::load(path));
  loaded_.emplace(key, index);
  return index;
}

Pricing Services::pricing() const { return gateway ? gateway->config().pricing : Pricing{}; }

ModelGateway& Services::require_gateway() const {
  if (!gateway) throw Error(ErrorCode::kInvalidArgument, "this solver needs a model gateway");
  return *gateway;
}

SearchClient& Services::require_search() const {
  if (!search) throw Error(ErrorCode::kInvalidArgument, "this solver needs a search client");
  return *search;
}

NliClient& Services::require_nli() const {
  if (!nli) throw Error(ErrorCode::kInvalidArgument, "this solver needs an NLI client");
  return *nli;
}

SolverRegistry& SolverRegistry::register_solver(std::string key, SolverKind kind, IoDeclaration io,
                                                SolverFactory factory, std::string description) {
  if (entries_.contains(key)) throw Error(ErrorCode::kDuplicateKey, "solver '" + key + "' is already registered");
  RegistryEntry entry{key, kind, io, std::move(description), std::move(factory)};
  entries_.emplace(std::move(key), std::move(entry));
  return *this;
}

const RegistryEntry* SolverRegistry::find(std::string_view key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

const RegistryEntry& SolverRegistry::resolve(std::string_view key) const {
  if (const auto* entry = find(key)) return *entry;
  throw Error(ErrorCode::kUnknownSolver, "no solver registered as '" + std::string(key) + "'");
}

std::vector<const RegistryEntry*> SolverRegistry::entries() const {
  std::vector<const RegistryEntry*> out;
  out.reserve(entries_.size());
  for (const auto& [key, entry] : entries_) out.push_back(&entry);
  return out;
}

nlohmann::json to_json(const SolverRegistry& registry) {
  auto list = nlohmann::json::array();
  for (const auto* entry : registry.entries()) {
    list.push_back({{"key", entry->key},
                    {"kind", to_string(entry->kind)},
                    {"input_type", to_string(entry->io.input)},
                    {"output_type", to_string(entry->io.output)},
                    {"description", entry->description}});
  }
  return list;
}

}  // namespace ofc
