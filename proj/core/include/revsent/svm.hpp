#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "revsent/matrix.hpp"

namespace revsent {

// exp(-gamma * ||x - y||^2). Throws std::invalid_argument on a dimension
// mismatch or non-positive gamma.
double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma);

struct SvmConfig {
  double C = 1.0;
  // Unset -> 1 / (dim * variance of all training feature values).
  std::optional<double> gamma;
  double tolerance = 1e-3;  // KKT gap at which SMO stops
  // Iteration budget is max_passes * n pair updates.
  std::size_t max_passes = 100;
};

struct SvmModel {
  FeatureMatrix support_vectors;
  std::vector<double> dual_coefficients;  // alpha_i * y_i per support vector
  std::vector<std::size_t> support_indices;  // training-set row of each support vector
  double bias = 0.0;
  double gamma = 1.0;
  double C = 1.0;
  std::size_t iterations = 0;
  bool converged = false;
  // Training rows were all identical; the model predicts the majority class.
  bool degenerate = false;
};

// Kernel "scale" heuristic used when SvmConfig::gamma is unset.
double scale_gamma(const FeatureMatrix& X);

// Soft-margin RBF SVM trained by SMO with second-order working-set
// selection. Labels are {0,1}; they are mapped to {-1,+1} internally.
SvmModel train_svm(const FeatureMatrix& X, std::span<const int> y, const SvmConfig& config = {});

double svm_decision_value(const SvmModel& model, std::span<const double> x);

// Sign of the decision value mapped to {0,1}; zero maps to 1.
int predict_svm(const SvmModel& model, std::span<const double> x);

}  // namespace revsent
