#include "slicemon/search.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "slicemon/acquisition.hpp"
#include "slicemon/error.hpp"
#include "slicemon/ledger.hpp"

namespace slicemon {

SearchProblem make_problem(const LabeledDataset& dataset, const MetricSpec& metric, std::size_t support_threshold) {
  const std::size_t threshold = std::max<std::size_t>(support_threshold, 1);
  SearchProblem problem;
  problem.schema = dataset.schema();
  problem.metric = metric;
  for (const auto& s : dataset.populated_subgroups()) {
    if (dataset.support(s) < threshold) continue;
    try {
      (void)dataset.subgroup_metric(s, metric, threshold);
    } catch (const UndefinedMetricError&) {
      continue;
    }
    problem.pool.push_back(s);
  }
  problem.measure = [&dataset, metric, threshold](const Subgroup& s) {
    return dataset.subgroup_metric(s, metric, threshold);
  };
  return problem;
}

void BoConfig::validate() const {
  if (budget < 1) throw ConfigError("budget must be at least 1");
  if (initial_design > budget) throw ConfigError("initial design size exceeds the budget");
  if (refit_every < 1) throw ConfigError("refit_every must be at least 1");
  hypers.validate();
}

std::string_view to_string(StopReason reason) {
  return reason == StopReason::kBudgetSpent ? "budget-spent" : "pool-exhausted";
}

namespace {

// Meters evaluations and keeps the running best.
class Recorder {
 public:
  Recorder(const SearchProblem& problem, std::size_t budget, std::string method)
      : problem_(problem), ledger_(budget) {
    if (problem.pool.empty()) throw DataError("no supported subgroups to search");
    if (budget < 1) throw ConfigError("budget must be at least 1");
    trace_.method = std::move(method);
  }

  bool has_budget() const { return ledger_.remaining() > 0; }

  double record(const Subgroup& s) {
    const auto ev = ledger_.evaluate(s, problem_.measure);
    const double oriented = oriented_value(ev.value, problem_.metric);
    TraceStep step;
    step.iteration = trace_.steps.size() + 1;
    step.subgroup = s;
    step.raw_value = ev.value;
    step.oriented_value = oriented;
    if (trace_.steps.empty() || oriented < trace_.steps.back().best_so_far_oriented) {
      step.best_so_far_oriented = oriented;
      step.best_so_far_raw = ev.value;
      trace_.incumbent = s;
    } else {
      step.best_so_far_oriented = trace_.steps.back().best_so_far_oriented;
      step.best_so_far_raw = trace_.steps.back().best_so_far_raw;
    }
    trace_.steps.push_back(std::move(step));
    return oriented;
  }

  SearchTrace finish() {
    trace_.evaluations_charged = ledger_.spent();
    trace_.stop = has_budget() ? StopReason::kPoolExhausted : StopReason::kBudgetSpent;
    return std::move(trace_);
  }

 private:
  const SearchProblem& problem_;
  EvaluationLedger ledger_;
  SearchTrace trace_;
};

std::vector<std::size_t> shuffled_indices(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

}  // namespace

SearchTrace run_random_search(const SearchProblem& problem, std::size_t budget, std::uint64_t seed) {
  Recorder rec(problem, budget, "rs");
  std::mt19937_64 rng(seed);
  for (std::size_t i : shuffled_indices(problem.pool.size(), rng)) {
    if (!rec.has_budget()) break;
    rec.record(problem.pool[i]);
  }
  return rec.finish();
}

SearchTrace run_exhaustive_search(const SearchProblem& problem, std::size_t budget) {
  Recorder rec(problem, budget, "es");
  for (const auto& s : problem.pool) {
    if (!rec.has_budget()) break;
    rec.record(s);
  }
  return rec.finish();
}

std::size_t exhaustive_position(const SearchProblem& problem, const Subgroup& target) {
  const auto it = std::find(problem.pool.begin(), problem.pool.end(), target);
  return it == problem.pool.end() ? 0 : static_cast<std::size_t>(it - problem.pool.begin()) + 1;
}

SearchTrace run_bo(const SearchProblem& problem, const BoConfig& config) {
  config.validate();
  Recorder rec(problem, config.budget, "bo");
  std::mt19937_64 rng(config.seed);

  const std::size_t pool_size = problem.pool.size();
  const Matrix<double> pool_x = encode_rows<double>(problem.schema, problem.pool);
  std::vector<bool> evaluated(pool_size, false);

  Matrix<double> obs_x(0, pool_x.cols());
  Vector<double> obs_y(0);
  double f_best = 0.0;
  auto observe = [&](std::size_t idx) {
    const double y = rec.record(problem.pool[idx]);
    evaluated[idx] = true;
    const Eigen::Index n = obs_x.rows();
    obs_x.conservativeResize(n + 1, Eigen::NoChange);
    obs_x.row(n) = pool_x.row(static_cast<Eigen::Index>(idx));
    obs_y.conservativeResize(n + 1);
    obs_y(n) = y;
    f_best = n == 0 ? y : std::min(f_best, y);
  };

  // Initial design: the first draws of the same seeded shuffle random search uses.
  const auto order = shuffled_indices(pool_size, rng);
  const std::size_t n0 = std::min({config.initial_design, config.budget, pool_size});
  for (std::size_t k = 0; k < n0; ++k) observe(order[k]);

  KernelParams<double> params = config.hypers.fallback();
  std::size_t acquisitions = 0;
  std::vector<Eigen::Index> remaining;
  while (rec.has_budget()) {
    remaining.clear();
    for (std::size_t i = 0; i < pool_size; ++i)
      if (!evaluated[i]) remaining.push_back(static_cast<Eigen::Index>(i));
    if (remaining.empty()) break;

    std::size_t pick;
    if (obs_x.rows() == 0) {
      // Empty model: every candidate has the same posterior.
      std::uniform_int_distribution<std::size_t> uniform(0, remaining.size() - 1);
      pick = uniform(rng);
    } else {
      if (obs_x.rows() >= 2 && acquisitions % config.refit_every == 0)
        params = optimize_hypers(obs_x, obs_y, config.hypers);
      const auto model = GpModel<double>::fit(obs_x, obs_y, params);
      const Matrix<double> candidates = pool_x(remaining, Eigen::all);
      pick = *suggest_next(model, candidates, f_best, rng);
    }
    observe(static_cast<std::size_t>(remaining[pick]));
    ++acquisitions;
  }
  return rec.finish();
}

}  // namespace slicemon
