#include "slicemon/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <memory>
#include <mutex>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "slicemon/csv.hpp"
#include "slicemon/error.hpp"

namespace slicemon {

std::string format_real(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

TrueWorst find_true_worst(const SearchProblem& problem) {
  if (problem.pool.empty()) throw DataError("no supported subgroups");
  TrueWorst best;
  bool first = true;
  for (const auto& s : problem.pool) {
    const double raw = problem.measure(s);
    const double oriented = oriented_value(raw, problem.metric);
    if (first || oriented < best.oriented_value) {
      best.subgroup = s;
      best.raw_value = raw;
      best.oriented_value = oriented;
      first = false;
    }
  }
  best.label = subgroup_label(problem.schema, best.subgroup);
  return best;
}

TrueWorst find_true_worst(const LabeledDataset& dataset, const MetricSpec& metric, std::size_t support_threshold) {
  return find_true_worst(make_problem(dataset, metric, support_threshold));
}

Curve aggregate(const std::vector<SearchTrace>& traces) {
  Curve c;
  std::size_t len = 0;
  for (const auto& t : traces) len = std::max(len, t.steps.size());
  const auto n = static_cast<double>(traces.size());
  for (std::size_t k = 0; k < len; ++k) {
    std::vector<double> xs;
    for (const auto& t : traces) {
      if (t.steps.empty()) continue;
      xs.push_back(t.steps[std::min(k, t.steps.size() - 1)].best_so_far_raw);
    }
    double mean = 0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double ss = 0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double sd = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
    c.mean.push_back(mean);
    c.stderr_.push_back(xs.size() > 1 ? sd / std::sqrt(n) : 0.0);
  }
  return c;
}

std::optional<std::size_t> iterations_to_find(const SearchTrace& trace, double true_worst_oriented) {
  for (const auto& step : trace.steps)
    if (step.best_so_far_oriented <= true_worst_oriented) return step.iteration;
  return std::nullopt;
}

const std::optional<TrueWorst>& ExperimentResult::shared_true_worst() const {
  static const std::optional<TrueWorst> none;
  return datasets.size() == 1 ? datasets.front().true_worst : none;
}

bool ExperimentResult::all_trials_failed_for_some_strategy() const {
  for (const auto& [strategy, summary] : summaries)
    if (summary.failed_trials.size() == config.trials) return true;
  return false;
}

namespace {

struct LoadedDataset {
  std::unique_ptr<LabeledDataset> dataset;
  SearchProblem problem;
};

// Runs `count` tasks on up to `threads` workers; rethrows the lowest-index failure.
template <typename Task>
void parallel_for(std::size_t count, std::size_t threads, Task task) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  std::vector<std::exception_ptr> errors(count);
  auto run = [&](std::size_t i) {
    try {
      task(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) run(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) run(i);
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, std::ostream& log) {
  config.validate();
  ExperimentResult result;
  result.config = config;

  // Distinct dataset files, in first-use order.
  std::vector<LoadedDataset> loaded;
  for (std::size_t t = 0; t < config.trials; ++t) {
    const auto& path = config.dataset_for_trial(t);
    std::size_t idx = 0;
    while (idx < result.datasets.size() && result.datasets[idx].path != path) ++idx;
    if (idx == result.datasets.size()) {
      auto ds = std::make_unique<LabeledDataset>(load_dataset(path, config.data));
      SearchProblem problem = make_problem(*ds, config.metric, config.support_threshold);
      if (problem.pool.empty())
        throw DataError(path.string() + ": no subgroup reaches the support threshold of " +
                        std::to_string(config.support_threshold));
      DatasetInfo info;
      info.path = path;
      info.schema = ds->schema();
      info.rows = ds->size();
      info.dropped_rows = ds->dropped_rows();
      info.pool_size = problem.pool.size();
      try {
        info.global_metric = ds->global_metric(config.metric);
      } catch (const UndefinedMetricError&) {
      }
      if (problem.pool.size() <= config.true_worst_max_pool) info.true_worst = find_true_worst(problem);
      if (info.dropped_rows > 0) log << "note: " << path.string() << ": dropped " << info.dropped_rows << " rows\n";
      if (!result.datasets.empty() && info.schema.attributes() != result.datasets.front().schema.attributes())
        log << "warning: " << path.string() << " yields different attribute levels than "
            << result.datasets.front().path.string() << "\n";
      result.datasets.push_back(std::move(info));
      loaded.push_back({std::move(ds), std::move(problem)});
    }
    result.dataset_of_trial.push_back(idx);
  }
  result.schema = result.datasets.front().schema;
  result.lattice_size = result.schema.lattice_size();

  for (Strategy s : config.strategies)
    for (std::size_t t = 0; t < config.trials; ++t) result.records.push_back({s, t, config.base_seed + t, {}, {}, {}});

  parallel_for(result.records.size(), config.threads, [&](std::size_t i) {
    TrialRecord& rec = result.records[i];
    const auto& problem = loaded[result.dataset_of_trial[rec.trial]].problem;
    try {
      switch (rec.strategy) {
        case Strategy::kBo: {
          BoConfig bo;
          bo.initial_design = config.initial_design;
          bo.budget = config.budget;
          bo.seed = rec.seed;
          bo.refit_every = config.refit_every;
          bo.hypers = config.hypers;
          rec.trace = run_bo(problem, bo);
          break;
        }
        case Strategy::kRs: rec.trace = run_random_search(problem, config.budget, rec.seed); break;
        case Strategy::kEs: rec.trace = run_exhaustive_search(problem, config.budget); break;
      }
    } catch (const NumericalFailure& e) {
      rec.failure = e.what();
    }
  });

  for (auto& rec : result.records) {
    auto& summary = result.summaries[rec.strategy];
    if (!rec.trace) {
      summary.failed_trials.push_back(rec.trial);
      log << "warning: " << to_string(rec.strategy) << " trial " << rec.trial
          << " failed and is excluded: " << rec.failure << "\n";
      continue;
    }
    const auto& info = result.datasets[result.dataset_of_trial[rec.trial]];
    if (info.true_worst) rec.iterations_to_find = iterations_to_find(*rec.trace, info.true_worst->oriented_value);
    summary.iterations_to_find.push_back(rec.iterations_to_find);
    summary.incumbent_labels.push_back(subgroup_label(info.schema, rec.trace->incumbent));
  }
  for (Strategy s : config.strategies) {
    auto& summary = result.summaries[s];
    std::vector<SearchTrace> traces;
    for (const auto& rec : result.records)
      if (rec.strategy == s && rec.trace) traces.push_back(*rec.trace);
    summary.curve = aggregate(traces);
    if (!summary.failed_trials.empty())
      log << "warning: " << summary.failed_trials.size() << " of " << config.trials << " " << to_string(s)
          << " trials failed\n";
  }
  return result;
}

void write_trace_csv(const ExperimentResult& result, std::ostream& out) {
  out << "method,trial,iteration,subgroup_id,subgroup_label,raw_value,oriented_value,best_so_far_raw\n";
  for (const auto& rec : result.records) {
    if (!rec.trace) continue;
    const auto& schema = result.datasets[result.dataset_of_trial[rec.trial]].schema;
    for (const auto& step : rec.trace->steps) {
      out << to_string(rec.strategy) << ',' << rec.trial << ',' << step.iteration << ','
          << subgroup_id(schema, step.subgroup) << ',' << csv::escape(subgroup_label(schema, step.subgroup)) << ','
          << format_real(step.raw_value) << ',' << format_real(step.oriented_value) << ','
          << format_real(step.best_so_far_raw) << '\n';
    }
  }
}

namespace {

nlohmann::ordered_json true_worst_json(const TrueWorst& tw, const AttributeSchema& schema) {
  nlohmann::ordered_json j;
  j["subgroup_label"] = tw.label;
  j["subgroup_id"] = subgroup_id(schema, tw.subgroup);
  j["raw_value"] = tw.raw_value;
  return j;
}

}  // namespace

void write_summary_json(const ExperimentResult& result, std::ostream& out) {
  using nlohmann::ordered_json;
  const auto& cfg = result.config;
  ordered_json j;
  j["metric"] = std::string(to_string(cfg.metric.kind));
  j["orientation"] = std::string(to_string(cfg.metric.orientation));
  j["trials"] = cfg.trials;
  j["budget"] = cfg.budget;
  j["initial_design"] = cfg.initial_design;
  j["base_seed"] = cfg.base_seed;
  j["support_threshold"] = cfg.support_threshold;
  j["lattice_size"] = result.lattice_size;

  ordered_json datasets = ordered_json::array();
  for (const auto& d : result.datasets) {
    ordered_json dj;
    dj["path"] = d.path.string();
    dj["rows"] = d.rows;
    dj["dropped_rows"] = d.dropped_rows;
    dj["pool_size"] = d.pool_size;
    dj["global_metric"] = d.global_metric ? ordered_json(*d.global_metric) : ordered_json(nullptr);
    if (d.true_worst) dj["true_worst"] = true_worst_json(*d.true_worst, d.schema);
    datasets.push_back(std::move(dj));
  }
  j["datasets"] = std::move(datasets);

  // Reference line: the shared true worst, or the mean over per-trial datasets.
  bool all_known = true;
  double sum = 0;
  std::optional<std::string> common_label;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    const auto& tw = result.datasets[result.dataset_of_trial[t]].true_worst;
    if (!tw) {
      all_known = false;
      break;
    }
    sum += tw->raw_value;
    if (t == 0) common_label = tw->label;
    else if (common_label && *common_label != tw->label) common_label.reset();
  }
  if (all_known) {
    if (const auto& shared = result.shared_true_worst()) {
      j["true_worst"] = true_worst_json(*shared, result.schema);
    } else {
      ordered_json tw;
      tw["subgroup_label"] = common_label ? ordered_json(*common_label) : ordered_json(nullptr);
      tw["raw_value"] = sum / static_cast<double>(cfg.trials);
      j["true_worst"] = std::move(tw);
    }
  }

  ordered_json strategies = ordered_json::object();
  for (Strategy s : cfg.strategies) {
    const auto& summary = result.summaries.at(s);
    ordered_json sj;
    sj["mean"] = summary.curve.mean;
    sj["stderr"] = summary.curve.stderr_;
    ordered_json found = ordered_json::array();
    for (const auto& f : summary.iterations_to_find) found.push_back(f ? ordered_json(*f) : ordered_json(nullptr));
    sj["iterations_to_find"] = std::move(found);
    sj["incumbents"] = summary.incumbent_labels;
    sj["failed_trials"] = summary.failed_trials;
    strategies[std::string(to_string(s))] = std::move(sj);
  }
  j["strategies"] = std::move(strategies);
  out << j.dump(2) << '\n';
}

void write_outputs(const ExperimentResult& result) {
  const auto& dir = result.config.output_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
  {
    std::ofstream out(dir / "trace.csv", std::ios::binary);
    if (!out) throw DataError("cannot write " + (dir / "trace.csv").string());
    write_trace_csv(result, out);
  }
  std::ofstream out(dir / "summary.json", std::ios::binary);
  if (!out) throw DataError("cannot write " + (dir / "summary.json").string());
  write_summary_json(result, out);
}

}  // namespace slicemon
