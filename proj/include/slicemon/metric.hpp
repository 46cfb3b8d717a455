#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>

namespace slicemon {

enum class MetricKind { kAccuracy, kMse, kPrecision, kRecall };
enum class Orientation { kLowerIsWorse, kHigherIsWorse };

/// A class label (compared as a string) or a real-valued target.
using Outcome = std::variant<std::string, double>;

struct MetricSpec {
  MetricKind kind = MetricKind::kAccuracy;
  Orientation orientation = Orientation::kLowerIsWorse;
  /// Required for precision and recall.
  std::optional<std::string> positive_label;

  /// Spec with the default orientation for `kind`.
  static MetricSpec make(MetricKind kind, std::optional<std::string> positive_label = std::nullopt);

  bool is_classification() const { return kind != MetricKind::kMse; }
};

Orientation default_orientation(MetricKind kind);

MetricKind parse_metric_kind(std::string_view name);
std::string_view to_string(MetricKind kind);
Orientation parse_orientation(std::string_view name);
std::string_view to_string(Orientation orientation);

/// Metric over paired outcomes. Throws UndefinedMetricError for empty input,
/// precision with no predicted positives, or recall with no actual positives;
/// throws DataError when outcome kinds do not match the metric.
double compute_metric(const MetricSpec& m, std::span<const Outcome> truth, std::span<const Outcome> prediction);

/// Maps a raw metric value into minimization orientation: identity when lower
/// is worse, negation when higher is worse.
double oriented_value(double value, const MetricSpec& m);

/// Inverse of oriented_value.
double raw_from_oriented(double oriented, const MetricSpec& m);

}  // namespace slicemon
