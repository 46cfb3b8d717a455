#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>
#include <json.hpp>

#include "slicemon/csv.hpp"
#include "slicemon/experiment.hpp"
#include "support/landscape.hpp"

namespace slicemon {
namespace {

namespace fs = std::filesystem;
using testing::planted_landscape;
using testing::temp_dir;
using testing::to_dataset;
using testing::write_csv;

const MetricSpec kAccuracy = MetricSpec::make(MetricKind::kAccuracy);

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SearchTrace trace_of(std::vector<double> best_raw) {
  SearchTrace t;
  for (std::size_t i = 0; i < best_raw.size(); ++i) {
    TraceStep s;
    s.iteration = i + 1;
    s.best_so_far_raw = best_raw[i];
    s.best_so_far_oriented = best_raw[i];
    t.steps.push_back(s);
  }
  return t;
}

// Minimal config text over a CSV written by write_csv (attributes a, b).
std::string landscape_config(const std::vector<fs::path>& csvs, std::size_t trials, std::size_t budget,
                             const std::string& extra = "") {
  std::ostringstream os;
  os << "datasets = [";
  for (std::size_t i = 0; i < csvs.size(); ++i) os << (i ? ", " : "") << '"' << csvs[i].generic_string() << '"';
  os << "]\ntruth_column = \"truth\"\nprediction_column = \"prediction\"\nmetric = \"accuracy\"\n"
     << "trials = " << trials << "\nbudget = " << budget << "\ninitial_design = 5\n"
     << extra << "\n[[attribute]]\nname = \"a\"\n[[attribute]]\nname = \"b\"\n";
  return os.str();
}

TEST(Config, ParsesAdultConfig) {
  const auto cfg = load_config(SLICEMON_CONFIG_DIR "/adult.toml");
  EXPECT_EQ(cfg.metric.kind, MetricKind::kAccuracy);
  EXPECT_EQ(cfg.metric.orientation, Orientation::kLowerIsWorse);
  EXPECT_EQ(cfg.trials, 20u);
  EXPECT_EQ(cfg.support_threshold, 5u);
  ASSERT_EQ(cfg.datasets.size(), 1u);
  EXPECT_TRUE(fs::exists(cfg.datasets[0]));
  ASSERT_EQ(cfg.data.attributes.size(), 4u);
  EXPECT_EQ(cfg.data.attributes[0].kind, AttributeColumn::Kind::kBinned);
  EXPECT_EQ(cfg.data.attributes[2].column, "sex");
  EXPECT_EQ(cfg.strategies.size(), 3u);
}

TEST(Config, ParsesBikeHourTable) {
  const auto cfg = load_config(SLICEMON_CONFIG_DIR "/bike.toml");
  EXPECT_EQ(cfg.metric.kind, MetricKind::kMse);
  EXPECT_EQ(cfg.metric.orientation, Orientation::kHigherIsWorse);
  EXPECT_TRUE(cfg.data.real_outcomes);
  EXPECT_EQ(cfg.datasets.size(), 20u);
  const auto& hour = cfg.data.attributes[2];
  ASSERT_EQ(hour.kind, AttributeColumn::Kind::kMapped);
  EXPECT_EQ(hour.value_map.size(), 24u);
  std::map<std::string, std::string> m(hour.value_map.begin(), hour.value_map.end());
  EXPECT_EQ(m["3"], "midnight");
  EXPECT_EQ(m["23"], "midnight");
  EXPECT_EQ(m["7"], "early-morning");
  EXPECT_EQ(m["10"], "morning");
  EXPECT_EQ(m["17"], "afternoon");
  EXPECT_EQ(m["18"], "evening");
}

TEST(Config, RejectsBadConfigs) {
  const std::string ok = landscape_config({"x.csv"}, 2, 10);
  EXPECT_NO_THROW(parse_config(ok));
  EXPECT_THROW(parse_config(ok + "bogus = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("budget = 10\n" + ok), ConfigError);  // duplicate key
  EXPECT_THROW(parse_config(landscape_config({"x.csv"}, 2, 3)), ConfigError);  // initial design > budget
  EXPECT_THROW(parse_config(landscape_config({"x.csv", "y.csv", "z.csv"}, 2, 10)), ConfigError);
  EXPECT_THROW(parse_config(landscape_config({"x.csv"}, 2, 10, "strategies = [\"bo\", \"ga\"]")), ConfigError);
  EXPECT_THROW(parse_config(landscape_config({"x.csv"}, 2, 10, "metric2 = 1")), ConfigError);
  EXPECT_THROW(parse_config("dataset = \"x\"\ntruth_column = \"t\"\nprediction_column = \"p\"\n"
                            "metric = \"precision\"\n[[attribute]]\nname = \"a\"\n"),
               ConfigError);  // precision without positive_label
  EXPECT_THROW(parse_config("this is not toml"), ConfigError);
}

TEST(Config, RelativePathsResolveAgainstConfigDir) {
  const auto cfg = parse_config(landscape_config({"sub/x.csv"}, 1, 10, "output_dir = \"out\""), "/base");
  EXPECT_EQ(cfg.datasets[0], fs::path("/base/sub/x.csv"));
  EXPECT_EQ(cfg.output_dir, fs::path("/base/out"));
  EXPECT_NE(config_reference().find("support_threshold"), std::string::npos);
}

TEST(Aggregate, MeanAndStandardError) {
  const auto c = aggregate({trace_of({0.4}), trace_of({0.6})});
  ASSERT_EQ(c.mean.size(), 1u);
  EXPECT_NEAR(c.mean[0], 0.5, 1e-15);
  // sample sd = sqrt(0.02) = 0.1414..., / sqrt(2) = 0.1
  EXPECT_NEAR(c.stderr_[0], 0.1, 1e-12);
}

TEST(Aggregate, SingleTrialHasZeroStderr) {
  const auto c = aggregate({trace_of({0.9, 0.7, 0.7})});
  EXPECT_EQ(c.mean, (std::vector<double>{0.9, 0.7, 0.7}));
  EXPECT_EQ(c.stderr_, (std::vector<double>{0, 0, 0}));
}

TEST(Aggregate, ShortTracesCarryForward) {
  const auto c = aggregate({trace_of({0.8, 0.6}), trace_of({0.9, 0.5, 0.4, 0.2})});
  ASSERT_EQ(c.mean.size(), 4u);
  EXPECT_NEAR(c.mean[2], (0.6 + 0.4) / 2, 1e-15);
  EXPECT_NEAR(c.mean[3], (0.6 + 0.2) / 2, 1e-15);
  EXPECT_TRUE(aggregate({}).mean.empty());
}

TEST(IterationsToFind, FirstReach) {
  const auto t = trace_of({0.9, 0.5, 0.3, 0.3});
  EXPECT_EQ(iterations_to_find(t, 0.3), 3u);
  EXPECT_EQ(iterations_to_find(t, 0.95), 1u);
  EXPECT_FALSE(iterations_to_find(t, 0.1).has_value());
}

TEST(FindTrueWorst, PlantedCellAndTies) {
  const auto l = planted_landscape(2);
  const auto ds = to_dataset(l, 200);
  const auto tw = find_true_worst(ds, kAccuracy);
  EXPECT_EQ(tw.subgroup, l.planted);
  EXPECT_EQ(tw.raw_value, l.accuracy[subgroup_id(l.schema, l.planted)]);
  EXPECT_EQ(tw.oriented_value, tw.raw_value);
  EXPECT_EQ(tw.label, subgroup_label(l.schema, l.planted));

  const auto flat = testing::table_problem(testing::grid_schema(2, 2), {0.5, 0.2, 0.2, 0.7}, kAccuracy);
  EXPECT_EQ(find_true_worst(flat).subgroup, (Subgroup{0, 1}));  // earliest of the tie
  auto empty = flat;
  empty.pool.clear();
  EXPECT_THROW(find_true_worst(empty), DataError);
}

class LandscapeExperiment : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = temp_dir(::testing::UnitTest::GetInstance()->current_test_info()->name());
    const auto l = planted_landscape(17);
    planted_ = l.planted;
    csv_ = dir_ / "grid.csv";
    write_csv(to_dataset(l, 50), csv_);
  }
  ExperimentConfig config(std::size_t trials, std::size_t budget) const {
    auto cfg = parse_config(landscape_config({csv_}, trials, budget));
    cfg.output_dir = dir_ / "out";
    return cfg;
  }
  fs::path dir_, csv_;
  Subgroup planted_;
};

TEST_F(LandscapeExperiment, ExhaustiveIncumbentIsTrueWorst) {
  auto cfg = config(3, 36);
  std::ostringstream log;
  const auto r = run_experiment(cfg, log);
  ASSERT_TRUE(r.shared_true_worst().has_value());
  EXPECT_EQ(r.shared_true_worst()->subgroup, planted_);
  EXPECT_EQ(r.lattice_size, 36u);
  EXPECT_EQ(r.records.size(), 9u);
  for (const auto& rec : r.records) {
    ASSERT_TRUE(rec.trace.has_value());
    if (rec.strategy == Strategy::kEs) {
      EXPECT_EQ(rec.trace->incumbent, planted_);
    }
    EXPECT_EQ(rec.seed, cfg.base_seed + rec.trial);
    EXPECT_TRUE(rec.iterations_to_find.has_value());
  }
  EXPECT_FALSE(r.all_trials_failed_for_some_strategy());
}

TEST_F(LandscapeExperiment, BoCurveNotAboveRandomAfterInitialDesign) {
  auto cfg = config(20, 36);
  cfg.strategies = {Strategy::kBo, Strategy::kRs};
  cfg.threads = 4;
  std::ostringstream log;
  const auto r = run_experiment(cfg, log);
  const auto& bo = r.summaries.at(Strategy::kBo).curve.mean;
  const auto& rs = r.summaries.at(Strategy::kRs).curve.mean;
  ASSERT_EQ(bo.size(), 36u);
  // Common random numbers: identical up to the initial design.
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(bo[i], rs[i]);
  for (std::size_t i = 5; i < 36; ++i) EXPECT_LE(bo[i], rs[i] + 1e-12) << "iteration " << i + 1;
}

TEST_F(LandscapeExperiment, OutputsAreWellFormedAndReproducible) {
  auto cfg = config(4, 12);
  std::ostringstream log;
  write_outputs(run_experiment(cfg, log));
  const auto trace1 = slurp(cfg.output_dir / "trace.csv");
  const auto summary1 = slurp(cfg.output_dir / "summary.json");

  cfg.threads = 3;
  write_outputs(run_experiment(cfg, log));
  EXPECT_EQ(slurp(cfg.output_dir / "trace.csv"), trace1);
  EXPECT_EQ(slurp(cfg.output_dir / "summary.json"), summary1);

  std::istringstream in(trace1);
  const auto table = csv::read(in);
  EXPECT_EQ(table.header, (std::vector<std::string>{"method", "trial", "iteration", "subgroup_id", "subgroup_label",
                                                    "raw_value", "oriented_value", "best_so_far_raw"}));
  EXPECT_EQ(table.rows.size(), 3u * 4u * 12u);
  for (const auto& row : table.rows) {
    const auto id = std::stoull(row[3]);
    EXPECT_EQ(row[4], subgroup_label(testing::grid_schema(6, 6), subgroup_from_id(testing::grid_schema(6, 6), id)));
    EXPECT_EQ(std::stod(row[5]), std::stod(row[6]));  // accuracy is used as-is
  }

  const auto j = nlohmann::json::parse(summary1);
  EXPECT_EQ(j["metric"], "accuracy");
  EXPECT_EQ(j["lattice_size"], 36);
  EXPECT_EQ(j["datasets"].size(), 1u);
  EXPECT_EQ(j["datasets"][0]["pool_size"], 36);
  EXPECT_EQ(j["true_worst"]["subgroup_label"], subgroup_label(testing::grid_schema(6, 6), planted_));
  for (const char* s : {"bo", "rs", "es"}) {
    EXPECT_EQ(j["strategies"][s]["mean"].size(), 12u);
    EXPECT_EQ(j["strategies"][s]["stderr"].size(), 12u);
    EXPECT_EQ(j["strategies"][s]["iterations_to_find"].size(), 4u);
    EXPECT_TRUE(j["strategies"][s]["failed_trials"].empty());
  }
}

TEST_F(LandscapeExperiment, PerTrialDatasets) {
  std::vector<fs::path> csvs;
  for (int t = 0; t < 3; ++t) {
    csvs.push_back(dir_ / ("split" + std::to_string(t) + ".csv"));
    write_csv(to_dataset(planted_landscape(30 + t), 20), csvs.back());
  }
  auto cfg = parse_config(landscape_config(csvs, 3, 10, "strategies = [\"rs\"]"));
  std::ostringstream log;
  const auto r = run_experiment(cfg, log);
  EXPECT_EQ(r.datasets.size(), 3u);
  EXPECT_EQ(r.dataset_of_trial, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_FALSE(r.shared_true_worst().has_value());
  for (std::size_t t = 0; t < 3; ++t)
    EXPECT_EQ(r.datasets[t].true_worst->subgroup, planted_landscape(30 + t).planted);
}

TEST_F(LandscapeExperiment, MissingDatasetIsDataError) {
  auto cfg = parse_config(landscape_config({dir_ / "missing.csv"}, 1, 10));
  std::ostringstream log;
  EXPECT_THROW(run_experiment(cfg, log), DataError);
}

TEST(FormatReal, ShortestRoundTrip) {
  EXPECT_EQ(format_real(0.1), "0.1");
  EXPECT_EQ(format_real(0.5333333333333333), "0.5333333333333333");
  EXPECT_EQ(std::stod(format_real(1.0 / 3.0)), 1.0 / 3.0);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SLICEMON_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

TEST(Cli, ExitCodes) {
  const auto dir = temp_dir("cli");
  const auto l = planted_landscape(5);
  write_csv(to_dataset(l, 20), dir / "grid.csv");
  std::ofstream(dir / "ok.toml") << landscape_config({"grid.csv"}, 2, 8, "output_dir = \"out\"");
  std::ofstream(dir / "bad.toml") << "metric = \"accuracy\"\nnonsense = 3\n";
  std::ofstream(dir / "nodata.toml") << landscape_config({"nope.csv"}, 1, 8);

  EXPECT_EQ(run_cli("validate-config " + (dir / "ok.toml").string()), 0);
  EXPECT_EQ(run_cli("validate-config " + (dir / "bad.toml").string()), 2);
  EXPECT_EQ(run_cli("validate-config " + (dir / "nodata.toml").string()), 3);
  EXPECT_EQ(run_cli("true-worst --config " + (dir / "ok.toml").string()), 0);
  EXPECT_EQ(run_cli("run --config " + (dir / "ok.toml").string() + " --strategy rs,es --budget 6"), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "trace.csv"));
  EXPECT_TRUE(fs::exists(dir / "out" / "summary.json"));
  EXPECT_EQ(run_cli("run --config " + (dir / "ok.toml").string() + " --strategy ga"), 2);
}

}  // namespace
}  // namespace slicemon
