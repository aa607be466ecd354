#include "ofc/config.hpp"

#include <charconv>

#include <yaml-cpp/yaml.h>

#include "ofc/error.hpp"
#include "ofc/util.hpp"

namespace ofc {

using nlohmann::json;

std::string_view to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::kClaimProcessor: return "claim_processor";
    case SolverKind::kRetriever: return "retriever";
    case SolverKind::kVerifier: return "verifier";
    case SolverKind::kOther: return "other";
  }
  return "other";
}

std::optional<SolverKind> parse_solver_kind(std::string_view text) {
  for (auto kind : {SolverKind::kClaimProcessor, SolverKind::kRetriever, SolverKind::kVerifier,
                    SolverKind::kOther}) {
    if (to_string(kind) == text) return kind;
  }
  return std::nullopt;
}

std::optional<std::string> Params::get(std::string_view key) const {
  auto it = values_.find(std::string(key));
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string Params::get_string(std::string_view key, std::string_view fallback) const {
  return get(key).value_or(std::string(fallback));
}

long long Params::get_int(std::string_view key, long long fallback) const {
  auto value = get(key);
  if (!value) return fallback;
  long long out = 0;
  auto text = trim(*value);
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::kSchema, "InvalidParam",
                "param '" + std::string(key) + "' is not an integer: " + *value);
  }
  return out;
}

double Params::get_double(std::string_view key, double fallback) const {
  auto value = get(key);
  if (!value) return fallback;
  try {
    std::size_t used = 0;
    double out = std::stod(*value, &used);
    if (used != value->size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kSchema, "InvalidParam",
                "param '" + std::string(key) + "' is not a number: " + *value);
  }
}

bool Params::get_bool(std::string_view key, bool fallback) const {
  auto value = get(key);
  if (!value) return fallback;
  std::string lower = to_lower(trim(*value));
  if (lower == "true" || lower == "yes" || lower == "1") return true;
  if (lower == "false" || lower == "no" || lower == "0") return false;
  throw Error(ErrorCode::kSchema, "InvalidParam",
              "param '" + std::string(key) + "' is not a boolean: " + *value);
}

namespace {

// Shared by the YAML and JSON front ends: field access is abstracted as a
// lookup returning the scalar text, if any.
struct RawBinding {
  std::map<std::string, std::optional<std::string>> fields;
  std::map<std::string, std::string> params;
};

PipelineConfig build_config(std::string pipeline_id, const std::vector<RawBinding>& raw) {
  if (raw.empty()) throw Error(ErrorCode::kSchema, "EmptyPipeline", "pipeline has no solvers");
  PipelineConfig config;
  config.pipeline_id = std::move(pipeline_id);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto field = [&](const char* name) -> std::string {
      auto it = raw[i].fields.find(name);
      if (it == raw[i].fields.end() || !it->second || trim(*it->second).empty()) {
        throw Error(ErrorCode::kSchema, "MissingField",
                    "solver " + std::to_string(i) + " is missing required field '" + name + "'");
      }
      return std::string(trim(*it->second));
    };
    SolverBinding binding;
    binding.name = field("name");
    std::string kind = field("kind");
    auto parsed_kind = parse_solver_kind(kind);
    if (!parsed_kind) {
      throw Error(ErrorCode::kSchema, "UnknownKind",
                  "solver '" + binding.name + "' has unknown kind '" + kind + "'");
    }
    binding.kind = *parsed_kind;
    binding.implementation = field("implementation");
    binding.input_name = field("input_name");
    binding.output_name = field("output_name");
    binding.params = Params(raw[i].params);
    config.solvers.push_back(std::move(binding));
  }
  return config;
}

constexpr const char* kBindingFields[] = {"name", "kind", "implementation", "input_name",
                                          "output_name"};

}  // namespace

PipelineConfig parse_config(std::string_view config_text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(config_text));
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::kSyntax, std::string("malformed pipeline config: ") + e.what());
  }
  if (!root.IsMap()) throw Error(ErrorCode::kSyntax, "pipeline config must be a mapping");

  std::string pipeline_id;
  if (root["pipeline_id"] && root["pipeline_id"].IsScalar()) {
    pipeline_id = root["pipeline_id"].as<std::string>();
  }
  if (trim(pipeline_id).empty()) {
    throw Error(ErrorCode::kSchema, "MissingField", "missing required field 'pipeline_id'");
  }
  YAML::Node solvers = root["solvers"];
  if (!solvers || solvers.IsNull()) {
    throw Error(ErrorCode::kSchema, "EmptyPipeline", "pipeline has no solvers");
  }
  if (!solvers.IsSequence()) throw Error(ErrorCode::kSchema, "InvalidField", "'solvers' must be a list");

  std::vector<RawBinding> raw;
  for (const auto& node : solvers) {
    if (!node.IsMap()) throw Error(ErrorCode::kSchema, "InvalidField", "solver entry must be a mapping");
    RawBinding binding;
    for (const char* name : kBindingFields) {
      if (node[name] && node[name].IsScalar()) {
        binding.fields[name] = node[name].as<std::string>();
      } else {
        binding.fields[name] = std::nullopt;
      }
    }
    if (YAML::Node params = node["params"]; params && !params.IsNull()) {
      if (!params.IsMap()) throw Error(ErrorCode::kSchema, "InvalidParam", "'params' must be a mapping");
      for (const auto& kv : params) {
        if (!kv.second.IsScalar()) {
          throw Error(ErrorCode::kSchema, "InvalidParam",
                      "param '" + kv.first.as<std::string>() + "' must be a scalar");
        }
        binding.params[kv.first.as<std::string>()] = kv.second.as<std::string>();
      }
    }
    raw.push_back(std::move(binding));
  }
  return build_config(std::move(pipeline_id), raw);
}

PipelineConfig config_from_json(const json& value) {
  if (!value.is_object()) throw Error(ErrorCode::kSchema, "InvalidField", "pipeline config must be an object");
  std::string pipeline_id =
      value.contains("pipeline_id") && value["pipeline_id"].is_string() ? value["pipeline_id"].get<std::string>() : "";
  if (trim(pipeline_id).empty()) {
    throw Error(ErrorCode::kSchema, "MissingField", "missing required field 'pipeline_id'");
  }
  if (!value.contains("solvers") || !value["solvers"].is_array()) {
    throw Error(ErrorCode::kSchema, "EmptyPipeline", "pipeline has no solvers");
  }
  auto scalar_text = [](const json& v) -> std::optional<std::string> {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    return std::nullopt;
  };
  std::vector<RawBinding> raw;
  for (const auto& node : value["solvers"]) {
    if (!node.is_object()) throw Error(ErrorCode::kSchema, "InvalidField", "solver entry must be an object");
    RawBinding binding;
    for (const char* name : kBindingFields) {
      binding.fields[name] = node.contains(name) ? scalar_text(node[name]) : std::nullopt;
    }
    if (node.contains("params") && !node["params"].is_null()) {
      if (!node["params"].is_object()) throw Error(ErrorCode::kSchema, "InvalidParam", "'params' must be an object");
      for (const auto& [key, v] : node["params"].items()) {
        auto text = scalar_text(v);
        if (!text) throw Error(ErrorCode::kSchema, "InvalidParam", "param '" + key + "' must be a scalar");
        binding.params[key] = *text;
      }
    }
    raw.push_back(std::move(binding));
  }
  return build_config(std::move(pipeline_id), raw);
}

json to_json(const PipelineConfig& config) {
  json solvers = json::array();
  for (const auto& binding : config.solvers) {
    solvers.push_back({{"name", binding.name},
                       {"kind", to_string(binding.kind)},
                       {"implementation", binding.implementation},
                       {"input_name", binding.input_name},
                       {"output_name", binding.output_name},
                       {"params", binding.params.values()}});
  }
  return {{"pipeline_id", config.pipeline_id}, {"solvers", std::move(solvers)}};
}

}  // namespace ofc
