#include "slicemon/metric.hpp"

#include <cmath>

#include "slicemon/error.hpp"

namespace slicemon {

Orientation default_orientation(MetricKind kind) {
  return kind == MetricKind::kMse ? Orientation::kHigherIsWorse : Orientation::kLowerIsWorse;
}

MetricSpec MetricSpec::make(MetricKind kind, std::optional<std::string> positive_label) {
  return MetricSpec{kind, default_orientation(kind), std::move(positive_label)};
}

MetricKind parse_metric_kind(std::string_view name) {
  if (name == "accuracy") return MetricKind::kAccuracy;
  if (name == "mse") return MetricKind::kMse;
  if (name == "precision") return MetricKind::kPrecision;
  if (name == "recall") return MetricKind::kRecall;
  throw ConfigError("unknown metric '" + std::string(name) + "' (expected accuracy, mse, precision or recall)");
}

std::string_view to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::kAccuracy: return "accuracy";
    case MetricKind::kMse: return "mse";
    case MetricKind::kPrecision: return "precision";
    case MetricKind::kRecall: return "recall";
  }
  return "?";
}

Orientation parse_orientation(std::string_view name) {
  if (name == "lower-is-worse") return Orientation::kLowerIsWorse;
  if (name == "higher-is-worse") return Orientation::kHigherIsWorse;
  throw ConfigError("unknown orientation '" + std::string(name) + "'");
}

std::string_view to_string(Orientation orientation) {
  return orientation == Orientation::kLowerIsWorse ? "lower-is-worse" : "higher-is-worse";
}

namespace {

const std::string& label_of(const Outcome& o) {
  if (const auto* s = std::get_if<std::string>(&o)) return *s;
  throw DataError("metric expects class labels but found a real value");
}

double real_of(const Outcome& o) {
  if (const auto* d = std::get_if<double>(&o)) return *d;
  throw DataError("metric expects real values but found a class label");
}

}  // namespace

double compute_metric(const MetricSpec& m, std::span<const Outcome> truth, std::span<const Outcome> prediction) {
  if (truth.size() != prediction.size()) throw DataError("truth/prediction length mismatch");
  if (truth.empty()) throw UndefinedMetricError(std::string(to_string(m.kind)) + " of zero rows");
  const std::size_t n = truth.size();

  switch (m.kind) {
    case MetricKind::kAccuracy: {
      std::size_t hits = 0;
      for (std::size_t i = 0; i < n; ++i) hits += label_of(truth[i]) == label_of(prediction[i]);
      return static_cast<double>(hits) / static_cast<double>(n);
    }
    case MetricKind::kMse: {
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double r = real_of(truth[i]) - real_of(prediction[i]);
        sum += r * r;
      }
      return sum / static_cast<double>(n);
    }
    case MetricKind::kPrecision:
    case MetricKind::kRecall: {
      if (!m.positive_label) throw ConfigError("precision/recall need a positive_label");
      const std::string& pos = *m.positive_label;
      std::size_t tp = 0, pred_pos = 0, actual_pos = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const bool t = label_of(truth[i]) == pos;
        const bool p = label_of(prediction[i]) == pos;
        tp += t && p;
        pred_pos += p;
        actual_pos += t;
      }
      if (m.kind == MetricKind::kPrecision) {
        if (pred_pos == 0) throw UndefinedMetricError("precision undefined: no predicted positives");
        return static_cast<double>(tp) / static_cast<double>(pred_pos);
      }
      if (actual_pos == 0) throw UndefinedMetricError("recall undefined: no actual positives");
      return static_cast<double>(tp) / static_cast<double>(actual_pos);
    }
  }
  throw ConfigError("unhandled metric kind");
}

double oriented_value(double value, const MetricSpec& m) {
  if (!std::isfinite(value)) throw NumericalFailure("non-finite metric value");
  return m.orientation == Orientation::kLowerIsWorse ? value : -value;
}

double raw_from_oriented(double oriented, const MetricSpec& m) {
  return m.orientation == Orientation::kLowerIsWorse ? oriented : -oriented;
}

}  // namespace slicemon
