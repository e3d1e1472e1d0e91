#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "focus/config.hpp"
#include "focus/cost.hpp"
#include "focus/fl_engine.hpp"
#include "focus/icl.hpp"
#include "focus/ledger.hpp"
#include "json.hpp"

namespace focus {

/// Everything one (scenario, seed) pair produced.
struct RunRecord {
  std::string scenario;
  ScenarioKind kind = ScenarioKind::icl_zero_shot;
  std::uint64_t seed = 0;
  std::string run_id;

  std::optional<EvalMetrics> metrics;
  std::optional<DemoPolicyKind> policy;  // icl scenarios
  std::size_t k = 0;
  std::uint64_t fm_calls = 0;

  std::vector<FlowEvent> ledger;
  CostTally raw_tally;  // single task, straight from the run
  CostTally tally;      // after tally_scenario
  std::vector<RoundStats> rounds;
  SecrecyVerdict secrecy;
  std::map<std::string, bool> task_exposed;
  std::optional<CostModelReport> cost_report;
  std::vector<std::string> unimplemented_flags;
};

/// Task, silos and public pool built from a data block and a seed.
struct PreparedData {
  Task task;
  std::vector<ClientSilo> silos;
  Pool public_pool;
  bool numeric = false;  // feature-vector inputs
};

PreparedData prepare_data(const DataConfig& data, std::uint64_t seed);

/// Frozen reference backend fit on the public pool: a class scorer for
/// classification data, a bigram model for next-word data.
ReferenceFm build_backend(const BackendConfig& backend, const PreparedData& data,
                          std::uint64_t seed);

RunRecord run_scenario(const RunConfig& config, const ScenarioConfig& scenario, std::uint64_t seed);

/// Runs every (scenario, seed) pair, optionally in parallel; results come back
/// in config order, scenarios outer and seeds inner.
std::vector<RunRecord> run_all(const RunConfig& config);

struct PolicyRow {
  DemoPolicyKind policy = DemoPolicyKind::user_privacy;
  std::size_t k = 0;
  std::string scenario;
  std::vector<std::uint64_t> seeds;
  std::vector<double> per_seed;  // macro accuracy
  double mean = 0.0;
  std::vector<double> delta_vs_zero_shot;  // paired per seed, empty without a k = 0 row
};

struct PolicyComparison {
  std::vector<PolicyRow> rows;  // sorted by (k, policy)
  /// Paired per-seed mean differences between policies at the same k:
  /// key "user_privacy-no_user_privacy@3" etc.
  std::map<std::string, double> paired_deltas;
};

/// Groups icl_kshot records (and k = 0 baselines) by policy and k.
PolicyComparison compare_policies(const std::vector<RunRecord>& records);

struct EntropyPoint {
  std::string scenario;
  std::uint64_t seed = 0;
  std::string client_id;
  double entropy = 0.0;
  double accuracy = 0.0;
};

struct EntropyAnalysis {
  std::vector<EntropyPoint> points;
  std::optional<double> spearman;
  std::vector<std::string> warnings;
};

/// Users with at least `min_train` training examples; Spearman over all points.
EntropyAnalysis entropy_analysis(const std::vector<RunRecord>& records, std::size_t min_train = 4);

/// Spearman rank correlation with average ranks for ties; nullopt when either
/// side has zero variance or fewer than two points.
std::optional<double> spearman(const std::vector<double>& x, const std::vector<double>& y);

nlohmann::ordered_json to_json(const EvalMetrics& metrics);
nlohmann::ordered_json run_metrics_json(const RunRecord& record);
nlohmann::ordered_json summary_json(const RunConfig& config, const std::vector<RunRecord>& records);

std::string per_user_csv(const RunRecord& record);
std::string per_class_csv(const RunRecord& record);
std::string rounds_csv(const RunRecord& record);

/// Writes the per-run files under outdir/scenarios/<name>/seed_<s>/, then the
/// run-level metrics.json, plotdata/*.csv and meta.json. Throws IoError.
void emit_reports(const RunConfig& config, const std::vector<RunRecord>& records,
                  const std::string& outdir);

/// Human-readable table from a finished run directory.
std::string render_report(const std::string& run_dir);

}  // namespace focus
