#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "slicemon/error.hpp"
#include "slicemon/experiment.hpp"

namespace slicemon {

Strategy parse_strategy(std::string_view name) {
  if (name == "bo") return Strategy::kBo;
  if (name == "rs") return Strategy::kRs;
  if (name == "es") return Strategy::kEs;
  throw ConfigError("unknown strategy '" + std::string(name) + "' (expected bo, rs or es)");
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kBo: return "bo";
    case Strategy::kRs: return "rs";
    case Strategy::kEs: return "es";
  }
  return "?";
}

void ExperimentConfig::validate() const {
  if (datasets.empty()) throw ConfigError("no dataset configured");
  if (datasets.size() != 1 && datasets.size() != trials)
    throw ConfigError("expected one dataset or one per trial (" + std::to_string(trials) + "), got " +
                      std::to_string(datasets.size()));
  if (data.attributes.empty()) throw ConfigError("no subgroup attributes configured");
  if (data.truth_column.empty()) throw ConfigError("truth_column not set");
  if (data.prediction_column.empty()) throw ConfigError("prediction_column not set");
  if (data.real_outcomes != (metric.kind == MetricKind::kMse))
    throw ConfigError("outcome parsing does not match the metric");
  if ((metric.kind == MetricKind::kPrecision || metric.kind == MetricKind::kRecall) && !metric.positive_label)
    throw ConfigError("precision/recall need positive_label");
  if (strategies.empty()) throw ConfigError("no strategies selected");
  if (std::set<Strategy>(strategies.begin(), strategies.end()).size() != strategies.size())
    throw ConfigError("strategy listed twice");
  if (trials < 1) throw ConfigError("trials must be at least 1");
  BoConfig bo;
  bo.budget = budget;
  bo.initial_design = initial_design;
  bo.refit_every = refit_every;
  bo.hypers = hypers;
  bo.validate();
  std::set<std::string> names;
  for (const auto& a : data.attributes) {
    if (!names.insert(a.name).second) throw ConfigError("duplicate attribute '" + a.name + "'");
    if (a.kind == AttributeColumn::Kind::kBinned) validate_bin_edges(a.bin_edges);
  }
}

const std::filesystem::path& ExperimentConfig::dataset_for_trial(std::size_t trial) const {
  return datasets.size() == 1 ? datasets.front() : datasets.at(trial);
}

namespace {

void reject_unknown_keys(const toml::table& t, std::initializer_list<std::string_view> known, const std::string& where) {
  for (const auto& [key, node] : t) {
    bool ok = false;
    for (auto k : known) ok = ok || key.str() == k;
    if (!ok) throw ConfigError("unknown key '" + std::string(key.str()) + "' in " + where);
  }
}

std::string get_string(const toml::node& n, const std::string& key) {
  if (auto v = n.value<std::string>()) return *v;
  throw ConfigError("'" + key + "' must be a string");
}

std::size_t get_count(const toml::node& n, const std::string& key) {
  if (auto v = n.value<std::int64_t>(); v && *v >= 0) return static_cast<std::size_t>(*v);
  throw ConfigError("'" + key + "' must be a non-negative integer");
}

double get_real(const toml::node& n, const std::string& key) {
  if (auto v = n.value<double>()) return *v;
  throw ConfigError("'" + key + "' must be a number");
}

const toml::array& get_array(const toml::node& n, const std::string& key) {
  if (const auto* a = n.as_array()) return *a;
  throw ConfigError("'" + key + "' must be an array");
}

std::vector<std::string> string_list(const toml::node& n, const std::string& key) {
  std::vector<std::string> out;
  for (const auto& e : get_array(n, key)) out.push_back(get_string(e, key));
  return out;
}

std::vector<double> real_list(const toml::node& n, const std::string& key) {
  std::vector<double> out;
  for (const auto& e : get_array(n, key)) out.push_back(get_real(e, key));
  return out;
}

AttributeColumn parse_attribute(const toml::table& t, std::size_t index) {
  const std::string where = "attribute #" + std::to_string(index + 1);
  reject_unknown_keys(t, {"name", "column", "levels", "bin_edges", "map"}, where);
  AttributeColumn a;
  if (const auto* n = t.get("name")) a.name = get_string(*n, "name");
  if (a.name.empty()) throw ConfigError(where + " needs a name");
  a.column = a.name;
  if (const auto* n = t.get("column")) a.column = get_string(*n, "column");
  if (const auto* n = t.get("levels")) a.levels = string_list(*n, "levels");

  const auto* edges = t.get("bin_edges");
  const auto* map = t.get("map");
  if (edges && map) throw ConfigError(where + ": bin_edges and map are mutually exclusive");
  if (edges) {
    a.kind = AttributeColumn::Kind::kBinned;
    a.bin_edges = real_list(*edges, "bin_edges");
    validate_bin_edges(a.bin_edges);
  } else if (map) {
    a.kind = AttributeColumn::Kind::kMapped;
    const auto* tbl = map->as_table();
    if (!tbl) throw ConfigError(where + ": map must be a table");
    for (const auto& [raw, label] : *tbl) a.value_map.emplace_back(std::string(raw.str()), get_string(label, "map"));
    if (a.levels.empty()) throw ConfigError(where + ": a mapped attribute must list its levels");
  }
  return a;
}

HyperGrid<double> parse_grid(const toml::table& t) {
  reject_unknown_keys(t, {"lengthscales", "signal_variances", "noise_variances", "jitter"}, "[gp]");
  HyperGrid<double> g;
  if (const auto* n = t.get("lengthscales")) g.lengthscales = real_list(*n, "lengthscales");
  if (const auto* n = t.get("signal_variances")) g.signal_variances = real_list(*n, "signal_variances");
  if (const auto* n = t.get("noise_variances")) g.noise_variances = real_list(*n, "noise_variances");
  if (const auto* n = t.get("jitter")) g.jitter = get_real(*n, "jitter");
  g.validate();
  return g;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "config parse error: " << e.description() << " (line " << e.source().begin.line << ")";
    throw ConfigError(os.str());
  }
  reject_unknown_keys(root,
                      {"dataset", "datasets", "truth_column", "prediction_column", "metric", "orientation",
                       "positive_label", "strategies", "trials", "budget", "initial_design", "refit_every",
                       "base_seed", "support_threshold", "threads", "true_worst_max_pool", "output_dir", "gp",
                       "attribute"},
                      "config");

  auto resolve = [&](std::filesystem::path p) { return p.is_relative() && !base_dir.empty() ? base_dir / p : p; };

  ExperimentConfig cfg;
  const auto* single = root.get("dataset");
  const auto* many = root.get("datasets");
  if (single && many) throw ConfigError("set either 'dataset' or 'datasets', not both");
  if (single) cfg.datasets.push_back(resolve(get_string(*single, "dataset")));
  if (many)
    for (const auto& p : string_list(*many, "datasets")) cfg.datasets.push_back(resolve(p));

  if (const auto* n = root.get("truth_column")) cfg.data.truth_column = get_string(*n, "truth_column");
  if (const auto* n = root.get("prediction_column")) cfg.data.prediction_column = get_string(*n, "prediction_column");

  std::optional<std::string> positive;
  if (const auto* n = root.get("positive_label")) positive = get_string(*n, "positive_label");
  const auto* metric = root.get("metric");
  if (!metric) throw ConfigError("'metric' not set");
  cfg.metric = MetricSpec::make(parse_metric_kind(get_string(*metric, "metric")), positive);
  if (const auto* n = root.get("orientation")) cfg.metric.orientation = parse_orientation(get_string(*n, "orientation"));
  cfg.data.real_outcomes = cfg.metric.kind == MetricKind::kMse;

  if (const auto* n = root.get("strategies")) {
    cfg.strategies.clear();
    for (const auto& s : string_list(*n, "strategies")) cfg.strategies.push_back(parse_strategy(s));
  }
  if (const auto* n = root.get("trials")) cfg.trials = get_count(*n, "trials");
  if (const auto* n = root.get("budget")) cfg.budget = get_count(*n, "budget");
  if (const auto* n = root.get("initial_design")) cfg.initial_design = get_count(*n, "initial_design");
  if (const auto* n = root.get("refit_every")) cfg.refit_every = get_count(*n, "refit_every");
  if (const auto* n = root.get("base_seed")) cfg.base_seed = get_count(*n, "base_seed");
  if (const auto* n = root.get("support_threshold")) cfg.support_threshold = get_count(*n, "support_threshold");
  if (const auto* n = root.get("threads")) cfg.threads = get_count(*n, "threads");
  if (const auto* n = root.get("true_worst_max_pool")) cfg.true_worst_max_pool = get_count(*n, "true_worst_max_pool");
  if (const auto* n = root.get("output_dir")) cfg.output_dir = resolve(get_string(*n, "output_dir"));

  if (const auto* n = root.get("gp")) {
    const auto* t = n->as_table();
    if (!t) throw ConfigError("[gp] must be a table");
    cfg.hypers = parse_grid(*t);
  }

  const auto* attrs = root.get("attribute");
  if (!attrs) throw ConfigError("no [[attribute]] entries");
  const auto* arr = attrs->as_array();
  if (!arr) throw ConfigError("attributes must be declared as [[attribute]] tables");
  for (std::size_t i = 0; i < arr->size(); ++i) {
    const auto* t = (*arr)[i].as_table();
    if (!t) throw ConfigError("attributes must be declared as [[attribute]] tables");
    cfg.data.attributes.push_back(parse_attribute(*t, i));
  }

  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

std::string config_reference() {
  const ExperimentConfig d;
  const HyperGrid<double> g;
  auto list = [](const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_real(v[i]);
    return s + "]";
  };
  std::ostringstream os;
  os << "Config file (TOML):\n"
     << "  dataset = \"file.csv\"            one CSV shared by all trials\n"
     << "  datasets = [\"a.csv\", ...]       or one CSV per trial\n"
     << "  truth_column, prediction_column  column names (required)\n"
     << "  metric = accuracy|mse|precision|recall (required)\n"
     << "  orientation = lower-is-worse|higher-is-worse (default by metric)\n"
     << "  positive_label = \"...\"          required for precision/recall\n"
     << "  strategies = [\"bo\",\"rs\",\"es\"]   default all three\n"
     << "  trials = " << d.trials << ", budget = " << d.budget << ", initial_design = " << d.initial_design
     << ", refit_every = " << d.refit_every << "\n"
     << "  base_seed = " << d.base_seed << ", support_threshold = " << d.support_threshold
     << ", threads = " << d.threads << " (0 = all cores)\n"
     << "  true_worst_max_pool = " << d.true_worst_max_pool << ", output_dir = \"" << d.output_dir.string() << "\"\n"
     << "  [gp] lengthscales = " << list(g.lengthscales) << "\n"
     << "       signal_variances = " << list(g.signal_variances) << "\n"
     << "       noise_variances = " << list(g.noise_variances) << ", jitter = " << format_real(g.jitter) << "\n"
     << "  [[attribute]] name, column (default = name), and one of:\n"
     << "       levels = [...]                 categorical (levels discovered when omitted)\n"
     << "       bin_edges = [...]              numeric bins (-inf,e1), [e1,e2), ..., [ek,inf); levels = labels\n"
     << "       levels = [...] + [attribute.map] \"raw\" = \"level\"   explicit value table\n";
  return os.str();
}

}  // namespace slicemon
