#include "revsent/logistic.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace revsent {
namespace {

void check_labels(std::span<const int> y) {
  bool has_pos = false;
  bool has_neg = false;
  for (const int label : y) {
    if (label != 0 && label != 1) throw std::invalid_argument("labels must be 0 or 1");
    has_pos = has_pos || label == 1;
    has_neg = has_neg || label == 0;
  }
  if (!has_pos || !has_neg) throw std::invalid_argument("training data must contain both classes");
}

FeatureMatrix normalized(const FeatureMatrix& X) {
  FeatureMatrix out = X;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto row = out.row(i);
    double norm_sq = 0.0;
    for (const double v : row) norm_sq += v * v;
    if (norm_sq > 0.0) {
      const double inv = 1.0 / std::sqrt(norm_sq);
      for (auto& v : row) v *= inv;
    }
  }
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

LossAndGradient logistic_loss(const FeatureMatrix& X, std::span<const int> y, std::span<const double> weights,
                              double bias, double l2_strength) {
  const std::size_t n = X.rows();
  LossAndGradient out;
  out.weight_gradient.assign(weights.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = X.row(i);
    const double z = dot(weights, row) + bias;
    // -[y log s(z) + (1 - y) log(1 - s(z))] = softplus(z) - y z
    out.loss += softplus(z) - (y[i] == 1 ? z : 0.0);
    const double residual = sigmoid(z) - static_cast<double>(y[i]);
    for (std::size_t j = 0; j < row.size(); ++j) out.weight_gradient[j] += residual * row[j];
    out.bias_gradient += residual;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  out.loss *= inv_n;
  out.bias_gradient *= inv_n;
  double w_sq = 0.0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    out.weight_gradient[j] = out.weight_gradient[j] * inv_n + l2_strength * weights[j];
    w_sq += weights[j] * weights[j];
  }
  out.loss += 0.5 * l2_strength * w_sq;
  return out;
}

LogisticModel train_logreg(const FeatureMatrix& X, std::span<const int> y, const LogisticConfig& config) {
  if (X.rows() != y.size()) throw std::invalid_argument("train_logreg: X and y differ in length");
  if (X.rows() < 2) throw std::invalid_argument("train_logreg: need at least 2 samples");
  check_labels(y);
  for (std::size_t i = 0; i < X.rows(); ++i) {
    for (const double v : X.row(i)) {
      if (!std::isfinite(v)) throw std::invalid_argument("train_logreg: non-finite feature value");
    }
  }
  if (!(config.learning_rate > 0.0)) throw std::invalid_argument("train_logreg: learning rate must be > 0");

  const FeatureMatrix inputs = config.normalize_rows ? normalized(X) : X;
  LogisticModel model;
  model.config = config;
  model.l2_strength = config.l2_strength.value_or(
      1.0 / (static_cast<double>(X.rows()) * config.inverse_regularization));
  model.weights.assign(X.cols(), 0.0);

  auto state = logistic_loss(inputs, y, model.weights, model.bias, model.l2_strength);
  model.loss_trace.push_back(state.loss);
  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    for (std::size_t j = 0; j < model.weights.size(); ++j) {
      model.weights[j] -= config.learning_rate * state.weight_gradient[j];
    }
    model.bias -= config.learning_rate * state.bias_gradient;
    const double previous = state.loss;
    state = logistic_loss(inputs, y, model.weights, model.bias, model.l2_strength);
    model.loss_trace.push_back(state.loss);
    model.epochs_run = epoch + 1;
    if (std::abs(previous - state.loss) < config.tolerance) {
      model.converged = true;
      break;
    }
  }
  return model;
}

LogisticPrediction predict_logreg(const LogisticModel& model, std::span<const double> x) {
  if (x.size() != model.weights.size()) {
    throw std::invalid_argument("predict_logreg: dimension " + std::to_string(x.size()) + " vs model " +
                                std::to_string(model.weights.size()));
  }
  double z = model.bias;
  if (model.config.normalize_rows) {
    double norm_sq = 0.0;
    for (const double v : x) norm_sq += v * v;
    const double scale = norm_sq > 0.0 ? 1.0 / std::sqrt(norm_sq) : 0.0;
    z += dot(model.weights, x) * scale;
  } else {
    z += dot(model.weights, x);
  }
  const double p = sigmoid(z);
  return {p >= 0.5 ? 1 : 0, p};
}

}  // namespace revsent
