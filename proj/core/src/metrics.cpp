#include "revsent/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace revsent {

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw std::invalid_argument("confusion: length mismatch " + std::to_string(y_true.size()) + " vs " +
                                std::to_string(y_pred.size()));
  }
  if (y_true.empty()) throw std::invalid_argument("confusion: no instances");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i];
    const int p = y_pred[i];
    if ((t != 0 && t != 1) || (p != 0 && p != 1)) throw std::invalid_argument("confusion: label outside {0,1}");
    if (t == 1) {
      (p == 1 ? cm.tp : cm.fn) += 1;
    } else {
      (p == 1 ? cm.fp : cm.tn) += 1;
    }
  }
  return cm;
}

double accuracy(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw std::invalid_argument("accuracy: empty confusion matrix");
  return static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
}

MetricValue recall(const ConfusionMatrix& cm) {
  const std::size_t denom = cm.tp + cm.fn;
  if (denom == 0) return {0.0, true};
  return {static_cast<double>(cm.tp) / static_cast<double>(denom), false};
}

MetricValue f1(const ConfusionMatrix& cm) {
  const std::size_t denom = 2 * cm.tp + cm.fp + cm.fn;
  if (denom == 0) return {0.0, true};
  return {static_cast<double>(2 * cm.tp) / static_cast<double>(denom), false};
}

Metrics compute_metrics(const ConfusionMatrix& cm) {
  const auto r = recall(cm);
  const auto f = f1(cm);
  return {accuracy(cm), r.value, f.value, r.undefined, f.undefined};
}

Aggregate aggregate(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("aggregate: no values");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (*lo == *hi) return {*lo, 0.0};
  double sum = 0.0;
  for (const double v : values) sum += v;
  // Rounding can push the quotient a ulp outside the input range.
  const double mean = std::clamp(sum / static_cast<double>(values.size()), *lo, *hi);
  double sq = 0.0;
  for (const double v : values) sq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sq / static_cast<double>(values.size() - 1))};
}

}  // namespace revsent
