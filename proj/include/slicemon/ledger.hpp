#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>

#include "slicemon/dataset.hpp"
#include "slicemon/domain.hpp"
#include "slicemon/metric.hpp"

namespace slicemon {

struct Evaluation {
  double value = 0.0;
  bool from_cache = false;
};

/// Labelling budget meter. One unit per distinct subgroup; re-queries hit the
/// cache and are free. Owned by a single search run.
class EvaluationLedger {
 public:
  explicit EvaluationLedger(std::size_t budget_total, std::size_t support_threshold = 1)
      : budget_total_(budget_total), support_threshold_(support_threshold) {}

  std::size_t budget_total() const { return budget_total_; }
  std::size_t spent() const { return spent_; }
  std::size_t remaining() const { return budget_total_ - spent_; }
  std::size_t support_threshold() const { return support_threshold_; }
  const std::map<Subgroup, double>& cache() const { return cache_; }
  std::optional<double> cached(const Subgroup& s) const;

  /// Returns the cached value or calls `measure` and charges one unit. Throws
  /// BudgetExhaustedError when nothing is left and `s` is not cached. Nothing is
  /// charged if `measure` throws.
  Evaluation evaluate(const Subgroup& s, const std::function<double(const Subgroup&)>& measure);

 private:
  std::size_t budget_total_;
  std::size_t spent_ = 0;
  std::size_t support_threshold_;
  std::map<Subgroup, double> cache_;
};

/// Metered subgroup_metric using the ledger's support threshold.
Evaluation evaluate(EvaluationLedger& ledger, const LabeledDataset& dataset, const Subgroup& s, const MetricSpec& m);

}  // namespace slicemon
