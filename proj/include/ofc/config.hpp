#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace ofc {

enum class SolverKind { kClaimProcessor, kRetriever, kVerifier, kOther };

std::string_view to_string(SolverKind kind);
std::optional<SolverKind> parse_solver_kind(std::string_view text);

// Flat scalar options of a solver binding. Values are kept as text and
// converted on access.
class Params {
 public:
  Params() = default;
  explicit Params(std::map<std::string, std::string> values) : values_(std::move(values)) {}

  bool contains(std::string_view key) const { return values_.find(std::string(key)) != values_.end(); }
  std::optional<std::string> get(std::string_view key) const;
  std::string get_string(std::string_view key, std::string_view fallback) const;
  // Throw SchemaError on a value that does not convert.
  long long get_int(std::string_view key, long long fallback) const;
  double get_double(std::string_view key, double fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;

  void set(std::string key, std::string value) { values_.insert_or_assign(std::move(key), std::move(value)); }
  const std::map<std::string, std::string>& values() const { return values_; }

  bool operator==(const Params&) const = default;

 private:
  std::map<std::string, std::string> values_;
};

struct SolverBinding {
  std::string name;
  SolverKind kind = SolverKind::kOther;
  std::string implementation;
  std::string input_name;
  std::string output_name;
  Params params;

  bool operator==(const SolverBinding&) const = default;
};

struct PipelineConfig {
  std::string pipeline_id;
  std::vector<SolverBinding> solvers;

  bool operator==(const PipelineConfig&) const = default;
};

// Parses the YAML pipeline document:
//
//   pipeline_id: offline_demo
//   solvers:
//     - name: claims
//       kind: claim_processor
//       implementation: factool.claim_processor
//       input_name: document
//       output_name: claims
//       params: {}
//
// Throws SyntaxError for malformed YAML and SchemaError (reason
// EmptyPipeline, MissingField, UnknownKind or InvalidParam) otherwise.
PipelineConfig parse_config(std::string_view config_text);

// Same schema, given as a JSON object (used by the HTTP API).
PipelineConfig config_from_json(const nlohmann::json& value);
nlohmann::json to_json(const PipelineConfig& config);

}  // namespace ofc
