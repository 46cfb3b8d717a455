#pragma once

// Multi-trial experiment harness: config -> datasets -> strategies -> traces ->
// aggregated convergence curves, written as a trace CSV and a summary JSON.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "slicemon/dataset.hpp"
#include "slicemon/gp.hpp"
#include "slicemon/metric.hpp"
#include "slicemon/search.hpp"

namespace slicemon {

enum class Strategy { kBo, kRs, kEs };

Strategy parse_strategy(std::string_view name);
std::string_view to_string(Strategy s);

struct ExperimentConfig {
  /// One file shared by every trial, or exactly one file per trial.
  std::vector<std::filesystem::path> datasets;
  DatasetSpec data;
  MetricSpec metric;
  std::vector<Strategy> strategies{Strategy::kBo, Strategy::kRs, Strategy::kEs};
  std::size_t trials = 20;
  std::size_t budget = 100;
  std::size_t initial_design = 10;
  std::size_t refit_every = 1;
  std::uint64_t base_seed = 0;
  std::size_t support_threshold = 1;
  /// Trials run concurrently (0 = hardware concurrency).
  std::size_t threads = 1;
  /// The true worst is computed only for pools up to this size.
  std::size_t true_worst_max_pool = 1'000'000;
  std::filesystem::path output_dir = "slicemon-out";
  HyperGrid<double> hypers;

  /// Throws ConfigError on inconsistent settings (no dataset access).
  void validate() const;
  const std::filesystem::path& dataset_for_trial(std::size_t trial) const;
};

/// Parses the TOML config; relative paths resolve against `base_dir`.
ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Config keys and their defaults, for --help.
std::string config_reference();

struct TrueWorst {
  Subgroup subgroup;
  std::string label;
  double raw_value = 0;
  double oriented_value = 0;
};

/// Unmetered pass over the whole pool; ties go to the earliest subgroup in
/// lexicographic order. DataError on an empty pool.
TrueWorst find_true_worst(const SearchProblem& problem);
TrueWorst find_true_worst(const LabeledDataset& dataset, const MetricSpec& metric, std::size_t support_threshold = 1);

struct Curve {
  std::vector<double> mean;
  std::vector<double> stderr_;
};

/// Per-iteration mean and standard error (sample sd / sqrt(trials)) of the
/// best-so-far raw value. Shorter traces carry their final value forward; the
/// curve is as long as the longest trace.
Curve aggregate(const std::vector<SearchTrace>& traces);

/// First 1-based iteration whose best-so-far reaches `true_worst_oriented`, if any.
std::optional<std::size_t> iterations_to_find(const SearchTrace& trace, double true_worst_oriented);

struct TrialRecord {
  Strategy strategy = Strategy::kBo;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::optional<SearchTrace> trace;  ///< empty when the trial failed numerically
  std::string failure;
  std::optional<std::size_t> iterations_to_find;
};

struct StrategySummary {
  Curve curve;
  std::vector<std::optional<std::size_t>> iterations_to_find;  ///< per trial, failed trials omitted
  std::vector<std::string> incumbent_labels;
  std::vector<std::size_t> failed_trials;
};

struct DatasetInfo {
  std::filesystem::path path;
  AttributeSchema schema;
  std::size_t rows = 0;
  std::size_t dropped_rows = 0;
  std::size_t pool_size = 0;
  /// Metric over all rows; empty when undefined (e.g. no predicted positives).
  std::optional<double> global_metric;
  std::optional<TrueWorst> true_worst;
};

struct ExperimentResult {
  ExperimentConfig config;
  AttributeSchema schema;
  std::uint64_t lattice_size = 0;
  std::vector<DatasetInfo> datasets;  ///< one entry per distinct dataset file
  std::vector<std::size_t> dataset_of_trial;
  std::vector<TrialRecord> records;   ///< strategy-major, then trial
  std::map<Strategy, StrategySummary> summaries;

  /// True worst shared by every trial (single dataset), if computed.
  const std::optional<TrueWorst>& shared_true_worst() const;
  /// True when some strategy had every one of its trials fail.
  bool all_trials_failed_for_some_strategy() const;
};

/// Runs every strategy for every trial (seed = base_seed + trial). Numerical
/// failures are recorded and excluded from aggregation with a warning on `log`.
/// ConfigError / DataError propagate.
ExperimentResult run_experiment(const ExperimentConfig& config, std::ostream& log);

/// Columns: method,trial,iteration,subgroup_id,subgroup_label,raw_value,oriented_value,best_so_far_raw
void write_trace_csv(const ExperimentResult& result, std::ostream& out);
void write_summary_json(const ExperimentResult& result, std::ostream& out);
/// Writes trace.csv and summary.json into config.output_dir (created if needed).
void write_outputs(const ExperimentResult& result);

/// Shortest round-trip decimal form of `v`.
std::string format_real(double v);

}  // namespace slicemon
