#pragma once

// Evaluation dataset: rows of (subgroup, ground truth, prediction) indexed by
// subgroup, plus the subgroup-restricted metric M_x(C).

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "slicemon/domain.hpp"
#include "slicemon/metric.hpp"

namespace slicemon {

struct DataRow {
  Subgroup subgroup;
  Outcome truth;
  Outcome prediction;
};

/// How one schema attribute is read from a CSV column.
struct AttributeColumn {
  enum class Kind {
    kCategorical,  ///< raw value is the level label
    kBinned,       ///< numeric value binned by `bin_edges`
    kMapped,       ///< raw value looked up in `value_map`
  };

  std::string name;
  std::string column;
  Kind kind = Kind::kCategorical;
  /// Level labels. Categorical: optional, discovered (sorted) from the data when
  /// empty. Binned: optional, defaults to default_bin_labels. Mapped: required.
  std::vector<std::string> levels;
  std::vector<double> bin_edges;
  /// raw value -> level label; numeric keys also match numerically ("7" == "7.0").
  std::vector<std::pair<std::string, std::string>> value_map;
};

struct DatasetSpec {
  std::vector<AttributeColumn> attributes;
  std::string truth_column;
  std::string prediction_column;
  /// Parse truth/prediction as reals (mse) instead of class labels.
  bool real_outcomes = false;
};

/// Immutable after construction; safe to share across concurrent trials.
class LabeledDataset {
 public:
  /// Throws InvalidSubgroupError if a row does not fit the schema and DataError
  /// if there are no rows.
  LabeledDataset(AttributeSchema schema, std::vector<DataRow> rows, std::size_t dropped_rows = 0);

  const AttributeSchema& schema() const { return schema_; }
  std::size_t size() const { return rows_.size(); }
  const DataRow& row(std::size_t i) const { return rows_.at(i); }
  std::size_t dropped_rows() const { return dropped_rows_; }

  /// Row ids whose subgroup equals `s` (empty when none).
  std::span<const std::size_t> rows_of(const Subgroup& s) const;
  std::size_t support(const Subgroup& s) const { return rows_of(s).size(); }
  /// Subgroups with at least one row, in lexicographic order.
  std::vector<Subgroup> populated_subgroups() const;

  /// Metric over the rows of `s`. Throws UnsupportedSubgroupError when the
  /// support is below max(support_threshold, 1); UndefinedMetricError propagates.
  double subgroup_metric(const Subgroup& s, const MetricSpec& m, std::size_t support_threshold = 1) const;
  /// Metric over every row.
  double global_metric(const MetricSpec& m) const;

 private:
  AttributeSchema schema_;
  std::vector<DataRow> rows_;
  std::map<Subgroup, std::vector<std::size_t>> index_;
  std::size_t dropped_rows_ = 0;
};

/// Reads a CSV with a header row. Rows missing any subgroup attribute, truth or
/// prediction (empty, "?", "NA", "NaN") or whose value has no level are dropped
/// and counted. Throws DataError for missing columns, unparsable numerics and
/// zero usable rows; ConfigError for an invalid spec.
LabeledDataset load_dataset(const std::filesystem::path& csv_path, const DatasetSpec& spec);
LabeledDataset load_dataset(std::istream& csv, const DatasetSpec& spec);

}  // namespace slicemon
