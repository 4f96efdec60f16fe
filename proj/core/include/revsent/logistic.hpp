#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "revsent/matrix.hpp"

namespace revsent {

struct LogisticConfig {
  // L2 strength; unset -> 1 / (n * inverse_regularization).
  std::optional<double> l2_strength;
  double inverse_regularization = 1.0;
  double learning_rate = 0.1;
  std::size_t max_epochs = 1000;
  double tolerance = 1e-6;  // on the epoch-to-epoch loss change
  // Scale each input row to unit L2 norm before training and prediction.
  bool normalize_rows = true;
};

struct LogisticModel {
  std::vector<double> weights;
  double bias = 0.0;
  double l2_strength = 0.0;
  LogisticConfig config;
  std::size_t epochs_run = 0;
  bool converged = false;
  // Regularized loss before the first update and after each epoch.
  std::vector<double> loss_trace;
};

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> weight_gradient;
  double bias_gradient = 0.0;
};

double sigmoid(double z);

// Mean cross-entropy + (l2 / 2) * ||w||^2 (bias unregularized) over the rows
// of X exactly as given.
LossAndGradient logistic_loss(const FeatureMatrix& X, std::span<const int> y, std::span<const double> weights,
                              double bias, double l2_strength);

// Full-batch gradient descent from zero. Throws std::invalid_argument for a
// single-class target or non-finite features.
LogisticModel train_logreg(const FeatureMatrix& X, std::span<const int> y, const LogisticConfig& config = {});

struct LogisticPrediction {
  int label = 0;
  double probability = 0.5;  // P(class 1)
};

// label = 1 iff probability >= 0.5.
LogisticPrediction predict_logreg(const LogisticModel& model, std::span<const double> x);

}  // namespace revsent
