#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ofc/datasets.hpp"
#include "ofc/money.hpp"

namespace ofc {

// Gold labels addressed by prediction id: "<item_id>:<k>" (k = 1-based
// claim position) for claim-annotated items, the item id itself for
// response-level (HaluEval) items.
struct GoldSet {
  std::string dataset_id;
  std::map<std::string, GoldLabel> labels;
};

// claim_index is 0-based; the id carries index + 1.
std::string claim_gold_id(std::string_view item_id, std::size_t claim_index);
GoldSet build_gold_set(const std::vector<FactBenchItem>& items, std::string dataset_id);
// A gold set from bare counts, ids "t<n>" / "f<n>" / "u<n>".
GoldSet gold_from_counts(std::size_t true_count, std::size_t false_count, std::size_t unknown_count = 0,
                         std::string dataset_id = "counts");

struct Prediction {
  std::string id;
  bool label = true;  // TRUE / FALSE

  bool operator==(const Prediction&) const = default;
};

struct CheckerSubmission {
  std::string submission_id;
  std::string system_name;
  std::string dataset_id;
  std::vector<Prediction> predictions;
  double total_latency_s = 0.0;
  Usd total_cost;
  std::string meta;
  bool self_reported = true;  // baselines generated here are not
};

struct BinaryMetrics {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t support = 0;  // gold count of the target label
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MetricsReport {
  BinaryMetrics true_label;
  BinaryMetrics false_label;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::size_t evaluated = 0;
  std::size_t excluded_unknown = 0;
};

// Aligned (predicted, gold) pairs; UNKNOWN golds are skipped unless
// `unknown_as_class`, in which case they count as a third class that no
// binary prediction matches.
struct AlignedPair {
  bool predicted;
  GoldLabel gold;
};

BinaryMetrics binary_metrics(const std::vector<AlignedPair>& pairs, bool target, bool unknown_as_class = false);
BinaryMetrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t support);

// Throws ValidationError listing UnresolvedId / DuplicateId problems.
std::vector<AlignedPair> align(const CheckerSubmission& submission, const GoldSet& gold);

MetricsReport evaluate_pairs(const std::vector<AlignedPair>& pairs, bool unknown_as_class = false);
MetricsReport evaluate_submission(const CheckerSubmission& submission, const GoldSet& gold,
                                  bool unknown_as_class = false);

enum class BaselineKind { kRandom, kAlwaysTrue, kAlwaysFalse };

std::string_view to_string(BaselineKind kind);
std::optional<BaselineKind> parse_baseline_kind(std::string_view text);

// A prediction for every gold id. Random is a fair coin drawn from a
// seeded 64-bit Mersenne twister in gold-id order.
CheckerSubmission run_baseline(const GoldSet& gold, BaselineKind kind, std::uint64_t seed = 0);

// Header {system_name, dataset_id, total_latency_s, total_cost_usd,
// [submission_id], [meta]} then one {id, label} per line. Throws
// ValidationError.
CheckerSubmission parse_checker_submission(std::string_view text);
std::string to_submission_file(const CheckerSubmission& submission);

struct LeaderboardEntry {
  std::string submission_id;
  std::string system_name;
  std::string dataset_id;
  MetricsReport metrics;
  Usd total_cost;
  double total_latency_s = 0.0;
  std::string submitted_at;  // ISO-8601 UTC, fixed width so it sorts as text
  bool self_reported = true;
};

// Entries of `dataset_id` ordered by macro-F1 desc, cost asc, latency asc,
// submitted_at asc, then submission_id.
std::vector<LeaderboardEntry> rank_leaderboard(std::vector<LeaderboardEntry> entries, std::string_view dataset_id);

nlohmann::json to_json(const BinaryMetrics& metrics);
nlohmann::json to_json(const MetricsReport& report);
nlohmann::json to_json(const LeaderboardEntry& entry);
LeaderboardEntry leaderboard_entry_from_json(const nlohmann::json& value);
MetricsReport metrics_from_json(const nlohmann::json& value);

std::string to_markdown(const MetricsReport& report, const CheckerSubmission& submission);

// metrics.json and report.md under `dir`.
void write_checker_files(const std::filesystem::path& dir, const MetricsReport& report,
                         const CheckerSubmission& submission);

}  // namespace ofc
