#include "ofc/checker_eval.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "ofc/util.hpp"

namespace ofc {

using nlohmann::json;

std::string claim_gold_id(std::string_view item_id, std::size_t claim_index) {
  return std::string(item_id) + ":" + std::to_string(claim_index + 1);
}

GoldSet build_gold_set(const std::vector<FactBenchItem>& items, std::string dataset_id) {
  GoldSet gold;
  gold.dataset_id = std::move(dataset_id);
  for (const auto& item : items) {
    if (item.claims.empty()) {
      gold.labels.emplace(item.id, item.response_gold_label);
      continue;
    }
    for (std::size_t k = 0; k < item.claims.size(); ++k) {
      gold.labels.emplace(claim_gold_id(item.id, k), item.claims[k].gold_label);
    }
  }
  return gold;
}

GoldSet gold_from_counts(std::size_t true_count, std::size_t false_count, std::size_t unknown_count,
                         std::string dataset_id) {
  GoldSet gold;
  gold.dataset_id = std::move(dataset_id);
  for (std::size_t i = 0; i < true_count; ++i) gold.labels.emplace("t" + std::to_string(i), GoldLabel::kTrue);
  for (std::size_t i = 0; i < false_count; ++i) gold.labels.emplace("f" + std::to_string(i), GoldLabel::kFalse);
  for (std::size_t i = 0; i < unknown_count; ++i) gold.labels.emplace("u" + std::to_string(i), GoldLabel::kUnknown);
  return gold;
}

BinaryMetrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t support) {
  BinaryMetrics m{tp, fp, fn, support};
  m.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  m.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  m.f1 = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

BinaryMetrics binary_metrics(const std::vector<AlignedPair>& pairs, bool target, bool unknown_as_class) {
  const GoldLabel target_gold = target ? GoldLabel::kTrue : GoldLabel::kFalse;
  std::size_t tp = 0, fp = 0, fn = 0, support = 0;
  for (const auto& pair : pairs) {
    if (pair.gold == GoldLabel::kUnknown && !unknown_as_class) continue;
    const bool gold_positive = pair.gold == target_gold;
    const bool predicted_positive = pair.predicted == target;
    if (gold_positive) ++support;
    if (predicted_positive && gold_positive) ++tp;
    else if (predicted_positive) ++fp;
    else if (gold_positive) ++fn;
  }
  return metrics_from_counts(tp, fp, fn, support);
}

std::vector<AlignedPair> align(const CheckerSubmission& submission, const GoldSet& gold) {
  std::vector<RecordIssue> issues;
  std::set<std::string> seen;
  std::vector<AlignedPair> pairs;
  pairs.reserve(submission.predictions.size());
  for (const auto& prediction : submission.predictions) {
    auto it = gold.labels.find(prediction.id);
    if (it == gold.labels.end()) {
      issues.push_back({0, ErrorCode::kUnresolvedId, "id", "prediction id '" + prediction.id + "' is not in the gold set"});
      continue;
    }
    if (!seen.insert(prediction.id).second) {
      issues.push_back({0, ErrorCode::kDuplicateId, "id", "prediction id '" + prediction.id + "' appears twice"});
      continue;
    }
    pairs.push_back({prediction.label, it->second});
  }
  for (const auto& [id, label] : gold.labels) {
    if (!seen.contains(id)) {
      issues.push_back({0, ErrorCode::kUnresolvedId, "id", "no prediction for gold id '" + id + "'"});
    }
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return pairs;
}

MetricsReport evaluate_pairs(const std::vector<AlignedPair>& pairs, bool unknown_as_class) {
  MetricsReport report;
  report.true_label = binary_metrics(pairs, true, unknown_as_class);
  report.false_label = binary_metrics(pairs, false, unknown_as_class);
  std::size_t correct = 0;
  for (const auto& pair : pairs) {
    if (pair.gold == GoldLabel::kUnknown) {
      if (!unknown_as_class) {
        ++report.excluded_unknown;
        continue;
      }
    } else if ((pair.gold == GoldLabel::kTrue) == pair.predicted) {
      ++correct;
    }
    ++report.evaluated;
  }
  report.accuracy = report.evaluated == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(report.evaluated);
  report.macro_f1 = (report.true_label.f1 + report.false_label.f1) / 2.0;
  return report;
}

MetricsReport evaluate_submission(const CheckerSubmission& submission, const GoldSet& gold, bool unknown_as_class) {
  return evaluate_pairs(align(submission, gold), unknown_as_class);
}

std::string_view to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::kRandom: return "random";
    case BaselineKind::kAlwaysTrue: return "always_true";
    case BaselineKind::kAlwaysFalse: return "always_false";
  }
  return "random";
}

std::optional<BaselineKind> parse_baseline_kind(std::string_view text) {
  const std::string lower = to_lower(trim(text));
  if (lower == "random") return BaselineKind::kRandom;
  if (lower == "always_true") return BaselineKind::kAlwaysTrue;
  if (lower == "always_false") return BaselineKind::kAlwaysFalse;
  return std::nullopt;
}

CheckerSubmission run_baseline(const GoldSet& gold, BaselineKind kind, std::uint64_t seed) {
  CheckerSubmission submission;
  submission.system_name = std::string(to_string(kind));
  if (kind == BaselineKind::kRandom) submission.system_name += "(seed=" + std::to_string(seed) + ")";
  submission.dataset_id = gold.dataset_id;
  submission.self_reported = false;
  submission.meta = "baseline";
  std::mt19937_64 rng(seed);
  for (const auto& [id, label] : gold.labels) {
    bool predicted = kind == BaselineKind::kAlwaysTrue;
    if (kind == BaselineKind::kRandom) predicted = (rng() >> 63) == 1;
    submission.predictions.push_back({id, predicted});
  }
  return submission;
}

namespace {

std::optional<Usd> parse_cost(const json& value) {
  try {
    if (value.is_number()) return Usd::from_double(value.get<double>());
    if (value.is_string()) return Usd::parse(value.get<std::string>());
  } catch (const Error&) {
  }
  return std::nullopt;
}

}  // namespace

CheckerSubmission parse_checker_submission(std::string_view text) {
  CheckerSubmission submission;
  std::vector<RecordIssue> issues;
  bool have_header = false;
  const auto lines = split_lines(text);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    if (trim(lines[n]).empty()) continue;
    const std::size_t line = n + 1;
    json record = json::parse(lines[n], nullptr, false);
    if (record.is_discarded() || !record.is_object()) {
      issues.push_back({line, ErrorCode::kMalformedRecord, "", "line is not a JSON object"});
      continue;
    }
    if (!have_header) {
      have_header = true;
      if (!record.contains("system_name") || record.contains("label")) {
        issues.push_back({line, ErrorCode::kMalformedRecord, "system_name", "the first record must be the header"});
        continue;
      }
      auto string_field = [&](const char* field, bool required) -> std::string {
        if (!record.contains(field) || record[field].is_null()) {
          if (required) issues.push_back({line, ErrorCode::kMalformedRecord, field, "missing required field"});
          return {};
        }
        if (!record[field].is_string()) {
          issues.push_back({line, ErrorCode::kMalformedRecord, field, "expected a string"});
          return {};
        }
        return record[field].get<std::string>();
      };
      submission.system_name = string_field("system_name", true);
      submission.dataset_id = string_field("dataset_id", true);
      submission.submission_id = string_field("submission_id", false);
      submission.meta = string_field("meta", false);
      if (record.contains("total_latency_s")) {
        if (!record["total_latency_s"].is_number() || record["total_latency_s"].get<double>() < 0) {
          issues.push_back({line, ErrorCode::kMalformedRecord, "total_latency_s", "expected a number >= 0"});
        } else {
          submission.total_latency_s = record["total_latency_s"].get<double>();
        }
      }
      if (record.contains("total_cost_usd")) {
        auto cost = parse_cost(record["total_cost_usd"]);
        if (!cost || *cost < Usd{}) {
          issues.push_back({line, ErrorCode::kMalformedRecord, "total_cost_usd", "expected an amount >= 0"});
        } else {
          submission.total_cost = *cost;
        }
      }
      if (trim(submission.system_name).empty() && record.contains("system_name")) {
        issues.push_back({line, ErrorCode::kMalformedRecord, "system_name", "must not be empty"});
      }
      continue;
    }
    if (!record.contains("id") || !record["id"].is_string() || trim(record["id"].get<std::string>()).empty()) {
      issues.push_back({line, ErrorCode::kMalformedRecord, "id", "expected a non-empty string id"});
      continue;
    }
    Prediction prediction;
    prediction.id = record["id"].get<std::string>();
    const json label = record.value("label", json());
    if (label.is_boolean()) {
      prediction.label = label.get<bool>();
    } else if (label.is_string() && (to_upper(label.get<std::string>()) == "TRUE" ||
                                     to_upper(label.get<std::string>()) == "FALSE")) {
      prediction.label = to_upper(label.get<std::string>()) == "TRUE";
    } else {
      issues.push_back({line, ErrorCode::kMalformedRecord, "label", "label must be TRUE or FALSE"});
      continue;
    }
    submission.predictions.push_back(std::move(prediction));
  }
  if (!have_header) issues.push_back({0, ErrorCode::kMalformedRecord, "", "empty submission"});
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return submission;
}

std::string to_submission_file(const CheckerSubmission& submission) {
  json header = {{"system_name", submission.system_name},
                 {"dataset_id", submission.dataset_id},
                 {"total_latency_s", submission.total_latency_s},
                 {"total_cost_usd", submission.total_cost.to_string()}};
  if (!submission.submission_id.empty()) header["submission_id"] = submission.submission_id;
  if (!submission.meta.empty()) header["meta"] = submission.meta;
  std::string out = header.dump() + "\n";
  for (const auto& p : submission.predictions) {
    out += json{{"id", p.id}, {"label", p.label ? "TRUE" : "FALSE"}}.dump() + "\n";
  }
  return out;
}

std::vector<LeaderboardEntry> rank_leaderboard(std::vector<LeaderboardEntry> entries, std::string_view dataset_id) {
  std::erase_if(entries, [&](const auto& e) { return e.dataset_id != dataset_id; });
  std::stable_sort(entries.begin(), entries.end(), [](const LeaderboardEntry& a, const LeaderboardEntry& b) {
    if (a.metrics.macro_f1 != b.metrics.macro_f1) return a.metrics.macro_f1 > b.metrics.macro_f1;
    if (a.total_cost != b.total_cost) return a.total_cost < b.total_cost;
    if (a.total_latency_s != b.total_latency_s) return a.total_latency_s < b.total_latency_s;
    if (a.submitted_at != b.submitted_at) return a.submitted_at < b.submitted_at;
    return a.submission_id < b.submission_id;
  });
  return entries;
}

json to_json(const BinaryMetrics& m) {
  return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support},
          {"tp", m.tp},               {"fp", m.fp},         {"fn", m.fn}};
}

json to_json(const MetricsReport& r) {
  return {{"TRUE", to_json(r.true_label)},  {"FALSE", to_json(r.false_label)}, {"accuracy", r.accuracy},
          {"macro_f1", r.macro_f1},         {"evaluated", r.evaluated},       {"excluded_unknown", r.excluded_unknown}};
}

namespace {

BinaryMetrics binary_from_json(const json& v) {
  BinaryMetrics m;
  m.precision = v.at("precision").get<double>();
  m.recall = v.at("recall").get<double>();
  m.f1 = v.at("f1").get<double>();
  m.support = v.at("support").get<std::size_t>();
  m.tp = v.value("tp", std::size_t{0});
  m.fp = v.value("fp", std::size_t{0});
  m.fn = v.value("fn", std::size_t{0});
  return m;
}

}  // namespace

MetricsReport metrics_from_json(const json& v) {
  MetricsReport r;
  r.true_label = binary_from_json(v.at("TRUE"));
  r.false_label = binary_from_json(v.at("FALSE"));
  r.accuracy = v.at("accuracy").get<double>();
  r.macro_f1 = v.at("macro_f1").get<double>();
  r.evaluated = v.value("evaluated", std::size_t{0});
  r.excluded_unknown = v.value("excluded_unknown", std::size_t{0});
  return r;
}

json to_json(const LeaderboardEntry& e) {
  return {{"submission_id", e.submission_id},
          {"system_name", e.system_name},
          {"dataset_id", e.dataset_id},
          {"metrics", to_json(e.metrics)},
          {"total_cost_usd", e.total_cost.to_string()},
          {"total_latency_s", e.total_latency_s},
          {"submitted_at", e.submitted_at},
          {"self_reported", e.self_reported}};
}

LeaderboardEntry leaderboard_entry_from_json(const json& v) {
  LeaderboardEntry e;
  e.submission_id = v.at("submission_id").get<std::string>();
  e.system_name = v.at("system_name").get<std::string>();
  e.dataset_id = v.at("dataset_id").get<std::string>();
  e.metrics = metrics_from_json(v.at("metrics"));
  e.total_cost = Usd::parse(v.at("total_cost_usd").get<std::string>());
  e.total_latency_s = v.at("total_latency_s").get<double>();
  e.submitted_at = v.at("submitted_at").get<std::string>();
  e.self_reported = v.value("self_reported", true);
  return e;
}

std::string to_markdown(const MetricsReport& r, const CheckerSubmission& s) {
  auto fmt = [](double v) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(3);
    out << v;
    return out.str();
  };
  std::ostringstream md;
  md << "# Checker evaluation: " << s.system_name << " on " << s.dataset_id << "\n\n"
     << "| Target | Precision | Recall | F1 | Support |\n|---|---|---|---|---|\n"
     << "| TRUE | " << fmt(r.true_label.precision) << " | " << fmt(r.true_label.recall) << " | " << fmt(r.true_label.f1)
     << " | " << r.true_label.support << " |\n"
     << "| FALSE | " << fmt(r.false_label.precision) << " | " << fmt(r.false_label.recall) << " | "
     << fmt(r.false_label.f1) << " | " << r.false_label.support << " |\n\n"
     << "Accuracy: " << fmt(r.accuracy) << ". Macro-F1: " << fmt(r.macro_f1) << ". Evaluated: " << r.evaluated
     << ". Excluded UNKNOWN golds: " << r.excluded_unknown << ".\n\n"
     << "Cost: $" << s.total_cost.to_cents() << ". Latency: " << s.total_latency_s << " s"
     << (s.self_reported ? " (self-reported)" : "") << ".\n";
  return md.str();
}

void write_checker_files(const std::filesystem::path& dir, const MetricsReport& report,
                         const CheckerSubmission& submission) {
  std::filesystem::create_directories(dir);
  json metrics = to_json(report);
  metrics["schema_version"] = 1;
  metrics["system_name"] = submission.system_name;
  metrics["dataset_id"] = submission.dataset_id;
  metrics["total_cost_usd"] = submission.total_cost.to_string();
  metrics["total_latency_s"] = submission.total_latency_s;
  write_file_atomic(dir / "metrics.json", metrics.dump(2) + "\n");
  write_file_atomic(dir / "report.md", to_markdown(report, submission));
}

}  // namespace ofc
