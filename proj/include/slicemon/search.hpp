#pragma once

// Search strategies over the finite subgroup lattice: Bayesian optimization
// with a GP surrogate and expected improvement, plus random and exhaustive
// baselines. Every strategy meters evaluations through an EvaluationLedger and
// works in minimization orientation.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "slicemon/dataset.hpp"
#include "slicemon/domain.hpp"
#include "slicemon/gp.hpp"
#include "slicemon/metric.hpp"

namespace slicemon {

/// What a strategy searches: the candidate pool and an unmetered measurement.
struct SearchProblem {
  AttributeSchema schema;
  /// Supported subgroups, lexicographic order.
  std::vector<Subgroup> pool;
  MetricSpec metric;
  /// Raw metric value of a pool member.
  std::function<double(const Subgroup&)> measure;
};

/// Problem backed by `dataset` (which must outlive it). The pool keeps the
/// subgroups with support >= max(support_threshold, 1) on which the metric is
/// defined.
SearchProblem make_problem(const LabeledDataset& dataset, const MetricSpec& metric, std::size_t support_threshold = 1);

struct BoConfig {
  std::size_t initial_design = 10;
  /// Total evaluations, initial design included.
  std::size_t budget = 1;
  std::uint64_t seed = 0;
  /// Hyperparameters are re-selected every `refit_every` acquisitions; the GP
  /// is conditioned on all observations at every step regardless.
  std::size_t refit_every = 1;
  HyperGrid<double> hypers;

  void validate() const;
};

struct TraceStep {
  std::size_t iteration = 0;  ///< 1-based evaluation count
  Subgroup subgroup;
  double raw_value = 0;
  double oriented_value = 0;
  double best_so_far_oriented = 0;
  double best_so_far_raw = 0;
};

enum class StopReason { kBudgetSpent, kPoolExhausted };

struct SearchTrace {
  std::string method;
  std::vector<TraceStep> steps;
  /// Subgroup with the lowest oriented value among the steps.
  Subgroup incumbent;
  StopReason stop = StopReason::kBudgetSpent;
  /// Budget units charged by the ledger.
  std::size_t evaluations_charged = 0;

  double best_oriented() const { return steps.empty() ? 0.0 : steps.back().best_so_far_oriented; }
  double best_raw() const { return steps.empty() ? 0.0 : steps.back().best_so_far_raw; }
};

/// Throws NumericalFailure if the surrogate cannot be fitted; DataError on an empty pool.
SearchTrace run_bo(const SearchProblem& problem, const BoConfig& config);
SearchTrace run_random_search(const SearchProblem& problem, std::size_t budget, std::uint64_t seed);
SearchTrace run_exhaustive_search(const SearchProblem& problem, std::size_t budget);

/// Position (1-based) of `target` in the pool order used by exhaustive search, or 0.
std::size_t exhaustive_position(const SearchProblem& problem, const Subgroup& target);

std::string_view to_string(StopReason reason);

}  // namespace slicemon
