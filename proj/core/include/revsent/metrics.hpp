#pragma once

#include <cstddef>
#include <span>

namespace revsent {

// Binary confusion counts with class 1 as the positive class.
struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fn = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fn + fp + tn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred);

// Undefined ratios (zero denominator) read as 0.0 with the flag set.
struct MetricValue {
  double value = 0.0;
  bool undefined = false;
};

double accuracy(const ConfusionMatrix& cm);
MetricValue recall(const ConfusionMatrix& cm);
MetricValue f1(const ConfusionMatrix& cm);

struct Metrics {
  double accuracy = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

Metrics compute_metrics(const ConfusionMatrix& cm);

struct Aggregate {
  double mean = 0.0;
  double std = 0.0;  // sample (n - 1) standard deviation; 0 for one value
};

Aggregate aggregate(std::span<const double> values);

}  // namespace revsent
