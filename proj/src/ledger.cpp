#include "slicemon/ledger.hpp"

#include "slicemon/error.hpp"

namespace slicemon {

std::optional<double> EvaluationLedger::cached(const Subgroup& s) const {
  const auto it = cache_.find(s);
  if (it == cache_.end()) return std::nullopt;
  return it->second;
}

Evaluation EvaluationLedger::evaluate(const Subgroup& s, const std::function<double(const Subgroup&)>& measure) {
  if (const auto hit = cached(s)) return {*hit, true};
  if (spent_ >= budget_total_)
    throw BudgetExhaustedError("labelling budget of " + std::to_string(budget_total_) + " evaluations exhausted");
  const double value = measure(s);
  cache_.emplace(s, value);
  ++spent_;
  return {value, false};
}

Evaluation evaluate(EvaluationLedger& ledger, const LabeledDataset& dataset, const Subgroup& s, const MetricSpec& m) {
  const std::size_t threshold = ledger.support_threshold();
  return ledger.evaluate(s, [&](const Subgroup& g) { return dataset.subgroup_metric(g, m, threshold); });
}

}  // namespace slicemon
