#include "slicemon/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <unordered_map>

#include "slicemon/csv.hpp"
#include "slicemon/error.hpp"

namespace slicemon {

LabeledDataset::LabeledDataset(AttributeSchema schema, std::vector<DataRow> rows, std::size_t dropped_rows)
    : schema_(std::move(schema)), rows_(std::move(rows)), dropped_rows_(dropped_rows) {
  if (rows_.empty()) throw DataError("dataset has no usable rows");
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    validate(schema_, rows_[i].subgroup);
    index_[rows_[i].subgroup].push_back(i);
  }
}

std::span<const std::size_t> LabeledDataset::rows_of(const Subgroup& s) const {
  const auto it = index_.find(s);
  if (it == index_.end()) return {};
  return it->second;
}

std::vector<Subgroup> LabeledDataset::populated_subgroups() const {
  std::vector<Subgroup> out;
  out.reserve(index_.size());
  for (const auto& [s, ids] : index_) out.push_back(s);
  return out;
}

double LabeledDataset::subgroup_metric(const Subgroup& s, const MetricSpec& m, std::size_t support_threshold) const {
  validate(schema_, s);
  const auto ids = rows_of(s);
  if (ids.empty() || ids.size() < support_threshold)
    throw UnsupportedSubgroupError("subgroup " + subgroup_label(schema_, s) + " has support " +
                                   std::to_string(ids.size()) + " < " +
                                   std::to_string(std::max<std::size_t>(support_threshold, 1)));
  std::vector<Outcome> truth, pred;
  truth.reserve(ids.size());
  pred.reserve(ids.size());
  for (std::size_t id : ids) {
    truth.push_back(rows_[id].truth);
    pred.push_back(rows_[id].prediction);
  }
  return compute_metric(m, truth, pred);
}

double LabeledDataset::global_metric(const MetricSpec& m) const {
  std::vector<Outcome> truth, pred;
  truth.reserve(rows_.size());
  pred.reserve(rows_.size());
  for (const auto& r : rows_) {
    truth.push_back(r.truth);
    pred.push_back(r.prediction);
  }
  return compute_metric(m, truth, pred);
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool is_missing(std::string_view v) {
  return v.empty() || v == "?" || v == "NA" || v == "NaN" || v == "nan" || v == "N/A";
}

std::optional<double> parse_real(std::string_view v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return out;
}

// Resolves a raw CSV value to a level index for one attribute.
class LevelResolver {
 public:
  LevelResolver(const AttributeColumn& spec, int column, const csv::Table& table) : spec_(spec), column_(column) {
    switch (spec.kind) {
      case AttributeColumn::Kind::kCategorical: {
        levels_ = spec.levels;
        if (levels_.empty()) {
          std::set<std::string> seen;
          for (const auto& row : table.rows) {
            const auto v = trim(row[column]);
            if (!is_missing(v)) seen.emplace(v);
          }
          levels_.assign(seen.begin(), seen.end());
        }
        for (std::size_t i = 0; i < levels_.size(); ++i) by_label_.emplace(levels_[i], static_cast<int>(i));
        break;
      }
      case AttributeColumn::Kind::kBinned: {
        validate_bin_edges(spec.bin_edges);
        levels_ = spec.levels.empty() ? default_bin_labels(spec.bin_edges) : spec.levels;
        if (levels_.size() != spec.bin_edges.size() + 1)
          throw ConfigError("attribute '" + spec.name + "': " + std::to_string(spec.bin_edges.size()) +
                            " bin edges need " + std::to_string(spec.bin_edges.size() + 1) + " labels");
        break;
      }
      case AttributeColumn::Kind::kMapped: {
        if (spec.value_map.empty()) throw ConfigError("attribute '" + spec.name + "': empty value map");
        levels_ = spec.levels;
        if (levels_.empty()) {
          for (const auto& [raw, label] : spec.value_map)
            if (std::find(levels_.begin(), levels_.end(), label) == levels_.end()) levels_.push_back(label);
        }
        std::unordered_map<std::string, int> level_index;
        for (std::size_t i = 0; i < levels_.size(); ++i) level_index.emplace(levels_[i], static_cast<int>(i));
        for (const auto& [raw, label] : spec.value_map) {
          const auto it = level_index.find(label);
          if (it == level_index.end())
            throw ConfigError("attribute '" + spec.name + "': map target '" + label + "' is not a level");
          by_label_[raw] = it->second;
          if (const auto num = parse_real(trim(raw))) by_number_.emplace_back(*num, it->second);
        }
        break;
      }
    }
  }

  const std::vector<std::string>& levels() const { return levels_; }
  int column() const { return column_; }

  /// Level index, or nullopt when the value has no level.
  std::optional<int> resolve(std::string_view raw, std::size_t record) const {
    switch (spec_.kind) {
      case AttributeColumn::Kind::kBinned: {
        const auto num = parse_real(raw);
        if (!num) {
          throw DataError("record " + std::to_string(record) + ": column '" + spec_.column + "' value '" +
                          std::string(raw) + "' is not a number");
        }
        return bin_numeric(*num, spec_.bin_edges);
      }
      case AttributeColumn::Kind::kCategorical:
      case AttributeColumn::Kind::kMapped: {
        if (const auto it = by_label_.find(std::string(raw)); it != by_label_.end()) return it->second;
        if (const auto num = parse_real(raw)) {
          for (const auto& [key, level] : by_number_)
            if (key == *num) return level;
        }
        return std::nullopt;
      }
    }
    return std::nullopt;
  }

 private:
  const AttributeColumn& spec_;
  int column_;
  std::vector<std::string> levels_;
  std::unordered_map<std::string, int> by_label_;
  std::vector<std::pair<double, int>> by_number_;
};

int require_column(const csv::Table& table, const std::string& name, const char* role) {
  if (name.empty()) throw ConfigError(std::string(role) + " column not configured");
  const int c = table.column(name);
  if (c < 0) throw DataError(std::string("missing ") + role + " column '" + name + "'");
  return c;
}

LabeledDataset build(const csv::Table& table, const DatasetSpec& spec) {
  if (spec.attributes.empty()) throw ConfigError("no subgroup attributes configured");

  std::vector<LevelResolver> resolvers;
  resolvers.reserve(spec.attributes.size());
  for (const auto& attr : spec.attributes) {
    const int c = require_column(table, attr.column.empty() ? attr.name : attr.column, "attribute");
    resolvers.emplace_back(attr, c, table);
  }
  const int truth_col = require_column(table, spec.truth_column, "ground-truth");
  const int pred_col = require_column(table, spec.prediction_column, "prediction");

  std::vector<Attribute> attrs;
  for (std::size_t i = 0; i < spec.attributes.size(); ++i)
    attrs.push_back({spec.attributes[i].name, resolvers[i].levels()});
  AttributeSchema schema(std::move(attrs));

  auto outcome = [&](std::string_view raw, std::size_t record, const char* role) -> Outcome {
    if (!spec.real_outcomes) return std::string(raw);
    const auto num = parse_real(raw);
    if (!num || !std::isfinite(*num))
      throw DataError("record " + std::to_string(record) + ": " + role + " value '" + std::string(raw) +
                      "' is not a finite number");
    return *num;
  };

  std::vector<DataRow> rows;
  rows.reserve(table.rows.size());
  std::size_t dropped = 0;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& rec = table.rows[r];
    const std::size_t record = r + 2;  // 1-based, after the header
    const auto truth_raw = trim(rec[truth_col]);
    const auto pred_raw = trim(rec[pred_col]);
    bool usable = !is_missing(truth_raw) && !is_missing(pred_raw);

    std::vector<int> levels(resolvers.size());
    for (std::size_t a = 0; usable && a < resolvers.size(); ++a) {
      const auto raw = trim(rec[resolvers[a].column()]);
      if (is_missing(raw)) {
        usable = false;
        break;
      }
      const auto level = resolvers[a].resolve(raw, record);
      if (!level) {
        usable = false;
        break;
      }
      levels[a] = *level;
    }
    if (!usable) {
      ++dropped;
      continue;
    }
    rows.push_back({Subgroup(std::move(levels)), outcome(truth_raw, record, "ground-truth"),
                    outcome(pred_raw, record, "prediction")});
  }
  if (rows.empty()) throw DataError("dataset has no usable rows (" + std::to_string(dropped) + " dropped)");
  return LabeledDataset(std::move(schema), std::move(rows), dropped);
}

}  // namespace

LabeledDataset load_dataset(std::istream& csv_in, const DatasetSpec& spec) { return build(csv::read(csv_in), spec); }

LabeledDataset load_dataset(const std::filesystem::path& csv_path, const DatasetSpec& spec) {
  return build(csv::read_file(csv_path), spec);
}

}  // namespace slicemon
