// slicemon: find the worst-performing data subgroup of a monitored model.
//
//   slicemon run --config exp.toml [--trials N] [--budget T] [--seed S] [--strategy bo,rs]
//   slicemon true-worst --config exp.toml
//   slicemon validate-config exp.toml
//
// Exit codes: 0 ok, 2 config error, 3 data error, 4 numerical failure in all trials.

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "slicemon/error.hpp"
#include "slicemon/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

struct Overrides {
  std::optional<std::size_t> trials;
  std::optional<std::size_t> budget;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> strategy;
  std::optional<std::string> output_dir;
  std::optional<std::size_t> threads;

  void apply(slicemon::ExperimentConfig& cfg) const {
    if (trials) cfg.trials = *trials;
    if (budget) cfg.budget = *budget;
    if (seed) cfg.base_seed = *seed;
    if (output_dir) cfg.output_dir = *output_dir;
    if (threads) cfg.threads = *threads;
    if (strategy) {
      cfg.strategies.clear();
      std::stringstream ss(*strategy);
      for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) cfg.strategies.push_back(slicemon::parse_strategy(item));
    }
    cfg.validate();
  }
};

void print_true_worst(const slicemon::ExperimentResult& r, std::ostream& out) {
  for (const auto& d : r.datasets) {
    out << d.path.string() << ": " << d.rows << " rows (" << d.dropped_rows << " dropped), pool " << d.pool_size
        << " of " << d.schema.lattice_size() << " subgroups";
    if (d.global_metric) out << ", global " << slicemon::to_string(r.config.metric.kind) << " "
                             << slicemon::format_real(*d.global_metric);
    out << '\n';
    if (d.true_worst)
      out << "  true worst: " << d.true_worst->label << " = " << slicemon::format_real(d.true_worst->raw_value) << '\n';
    else
      out << "  true worst: not computed (pool above true_worst_max_pool)\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Worst-subgroup discovery with Bayesian optimization and random/exhaustive baselines"};
  app.footer(slicemon::config_reference());
  app.require_subcommand(1);

  std::string config_path;
  Overrides overrides;

  auto* run = app.add_subcommand("run", "Run all configured strategies for every trial and write trace.csv + summary.json");
  run->add_option("--config", config_path, "Experiment config (TOML)")->required()->check(CLI::ExistingFile);
  run->add_option("--trials", overrides.trials, "Override number of trials");
  run->add_option("--budget", overrides.budget, "Override evaluation budget per trial");
  run->add_option("--seed", overrides.seed, "Override base seed (trial t uses seed + t)");
  run->add_option("--strategy", overrides.strategy, "Comma-separated subset of bo,rs,es");
  run->add_option("--output-dir", overrides.output_dir, "Override output directory");
  run->add_option("--threads", overrides.threads, "Trials run concurrently (0 = all cores)");

  auto* worst = app.add_subcommand("true-worst", "Exhaustively evaluate every supported subgroup (unmetered)");
  worst->add_option("--config", config_path, "Experiment config (TOML)")->required()->check(CLI::ExistingFile);

  auto* check = app.add_subcommand("validate-config", "Parse the config and check that every dataset loads");
  check->add_option("config", config_path, "Experiment config (TOML)")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    auto cfg = slicemon::load_config(config_path);
    overrides.apply(cfg);

    if (*run) {
      const auto result = slicemon::run_experiment(cfg, std::cerr);
      slicemon::write_outputs(result);
      for (const auto& [strategy, summary] : result.summaries) {
        std::cout << slicemon::to_string(strategy) << ": ";
        if (summary.curve.mean.empty()) {
          std::cout << "all trials failed\n";
          continue;
        }
        std::cout << "final mean best " << slicemon::format_real(summary.curve.mean.back()) << " +/- "
                  << slicemon::format_real(summary.curve.stderr_.back());
        std::size_t found = 0;
        for (const auto& f : summary.iterations_to_find) found += f.has_value();
        if (result.shared_true_worst() || result.datasets.size() > 1)
          std::cout << ", found true worst in " << found << "/" << summary.iterations_to_find.size() << " trials";
        std::cout << '\n';
      }
      if (const auto& tw = result.shared_true_worst())
        std::cout << "true worst: " << tw->label << " = " << slicemon::format_real(tw->raw_value) << '\n';
      std::cout << "wrote " << (cfg.output_dir / "trace.csv").string() << " and "
                << (cfg.output_dir / "summary.json").string() << '\n';
      return result.all_trials_failed_for_some_strategy() ? kExitNumerical : 0;
    }

    // true-worst and validate-config load every dataset without running a search.
    cfg.strategies = {slicemon::Strategy::kEs};
    cfg.budget = 1;
    cfg.initial_design = 0;
    std::ostringstream quiet;
    const auto result = slicemon::run_experiment(cfg, quiet);
    if (*worst) {
      print_true_worst(result, std::cout);
    } else {
      std::cout << "config ok: " << result.datasets.size() << " dataset(s), " << cfg.data.attributes.size()
                << " attributes, lattice of " << result.lattice_size << " subgroups\n";
    }
    return 0;
  } catch (const slicemon::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const slicemon::NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const slicemon::Error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  }
}
