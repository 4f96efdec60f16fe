#include "revsent/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace revsent {

double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("rbf_kernel: dimension " + std::to_string(x.size()) + " vs " +
                                std::to_string(y.size()));
  }
  if (!(gamma > 0.0)) throw std::invalid_argument("rbf_kernel: gamma must be > 0");
  double dist_sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    dist_sq += d * d;
  }
  return std::exp(-gamma * dist_sq);
}

double scale_gamma(const FeatureMatrix& X) {
  const double count = static_cast<double>(X.rows() * X.cols());
  if (count == 0.0) return 1.0;
  double mean = 0.0;
  for (std::size_t i = 0; i < X.rows(); ++i) {
    for (const double v : X.row(i)) mean += v;
  }
  mean /= count;
  double var = 0.0;
  for (std::size_t i = 0; i < X.rows(); ++i) {
    for (const double v : X.row(i)) var += (v - mean) * (v - mean);
  }
  var /= count;
  if (!(var > 0.0)) return 1.0;
  return 1.0 / (static_cast<double>(X.cols()) * var);
}

namespace {

constexpr double kTau = 1e-12;
constexpr double kSupportThreshold = 1e-8;

bool rows_identical(const FeatureMatrix& X) {
  for (std::size_t i = 1; i < X.rows(); ++i) {
    if (!std::equal(X.row(i).begin(), X.row(i).end(), X.row(0).begin())) return false;
  }
  return true;
}

}  // namespace

SvmModel train_svm(const FeatureMatrix& X, std::span<const int> labels, const SvmConfig& config) {
  const std::size_t n = X.rows();
  if (labels.size() != n) throw std::invalid_argument("train_svm: X and y differ in length");
  if (!(config.C > 0.0)) throw std::invalid_argument("train_svm: C must be > 0");
  if (config.gamma && !(*config.gamma > 0.0)) throw std::invalid_argument("train_svm: gamma must be > 0");

  std::vector<double> y(n);
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw std::invalid_argument("train_svm: labels must be 0 or 1");
    y[i] = labels[i] == 1 ? 1.0 : -1.0;
    positives += labels[i] == 1 ? 1 : 0;
  }
  if (positives == 0 || positives == n) throw std::invalid_argument("train_svm: training data must contain both classes");

  SvmModel model;
  model.C = config.C;
  model.gamma = config.gamma.value_or(scale_gamma(X));
  const double C = config.C;

  if (rows_identical(X)) {
    // No geometry to separate: fall back to the majority class (ties -> 1).
    model.degenerate = true;
    model.converged = false;
    model.support_vectors = FeatureMatrix(0, X.cols());
    model.bias = 2 * positives >= n ? 1.0 : -1.0;
    return model;
  }

  std::vector<double> K(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    K[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double k = rbf_kernel(X.row(i), X.row(j), model.gamma);
      K[i * n + j] = k;
      K[j * n + i] = k;
    }
  }

  // Minimize 0.5 a'Qa - e'a with Q_ij = y_i y_j K_ij; G = Qa - e.
  std::vector<double> alpha(n, 0.0);
  std::vector<double> G(n, -1.0);
  const std::size_t max_iterations = std::max<std::size_t>(1, config.max_passes) * std::max<std::size_t>(n, 1);

  auto in_up = [&](std::size_t t) { return y[t] > 0 ? alpha[t] < C : alpha[t] > 0; };
  auto in_low = [&](std::size_t t) { return y[t] > 0 ? alpha[t] > 0 : alpha[t] < C; };

  std::size_t iter = 0;
  for (; iter < max_iterations; ++iter) {
    // i: maximal -y_t G_t over I_up.
    double g_max = -std::numeric_limits<double>::infinity();
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (in_up(t) && -y[t] * G[t] >= g_max) {
        g_max = -y[t] * G[t];
        i = t;
      }
    }
    // j: second-order choice among I_low members violating with i.
    double g_max2 = -std::numeric_limits<double>::infinity();
    double best_obj = std::numeric_limits<double>::infinity();
    std::size_t j = n;
    for (std::size_t t = 0; t < n && i < n; ++t) {
      if (!in_low(t)) continue;
      const double yg = y[t] * G[t];
      g_max2 = std::max(g_max2, yg);
      const double grad_diff = g_max + yg;
      if (grad_diff > 0) {
        double quad = K[i * n + i] + K[t * n + t] - 2.0 * K[i * n + t];
        if (quad <= 0) quad = kTau;
        const double obj = -(grad_diff * grad_diff) / quad;
        if (obj <= best_obj) {
          best_obj = obj;
          j = t;
        }
      }
    }
    if (i == n || j == n || g_max + g_max2 < config.tolerance) {
      model.converged = true;
      break;
    }

    const double old_ai = alpha[i];
    const double old_aj = alpha[j];
    const double Kij = K[i * n + j];
    double quad = K[i * n + i] + K[j * n + j] - 2.0 * Kij;
    if (quad <= 0) quad = kTau;
    if (y[i] != y[j]) {
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = diff; }
      } else {
        if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = -diff; }
      }
      if (diff > 0) {
        if (alpha[i] > C) { alpha[i] = C; alpha[j] = C - diff; }
      } else {
        if (alpha[j] > C) { alpha[j] = C; alpha[i] = C + diff; }
      }
    } else {
      const double delta = (G[i] - G[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) { alpha[i] = C; alpha[j] = sum - C; }
      } else {
        if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = sum; }
      }
      if (sum > C) {
        if (alpha[j] > C) { alpha[j] = C; alpha[i] = sum - C; }
      } else {
        if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = sum; }
      }
    }

    const double dai = alpha[i] - old_ai;
    const double daj = alpha[j] - old_aj;
    for (std::size_t t = 0; t < n; ++t) {
      G[t] += y[t] * (y[i] * K[t * n + i] * dai + y[j] * K[t * n + j] * daj);
    }
  }
  model.iterations = iter;

  // Offset: mean of y_t G_t over free vectors, else midpoint of the bounds.
  double upper = std::numeric_limits<double>::infinity();
  double lower = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  std::size_t free_count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * G[t];
    if (alpha[t] >= C) {
      if (y[t] < 0) upper = std::min(upper, yg); else lower = std::max(lower, yg);
    } else if (alpha[t] <= 0) {
      if (y[t] > 0) upper = std::min(upper, yg); else lower = std::max(lower, yg);
    } else {
      free_sum += yg;
      ++free_count;
    }
  }
  const double rho = free_count > 0 ? free_sum / static_cast<double>(free_count) : (upper + lower) / 2.0;
  model.bias = -rho;

  std::vector<std::size_t> support;
  for (std::size_t t = 0; t < n; ++t) {
    if (std::abs(alpha[t]) > kSupportThreshold) support.push_back(t);
  }
  model.support_vectors = X.select_rows(support);
  model.support_indices = support;
  model.dual_coefficients.reserve(support.size());
  for (const auto t : support) model.dual_coefficients.push_back(alpha[t] * y[t]);
  return model;
}

double svm_decision_value(const SvmModel& model, std::span<const double> x) {
  if (model.support_vectors.cols() != x.size()) {
    throw std::invalid_argument("predict_svm: dimension " + std::to_string(x.size()) + " vs model " +
                                std::to_string(model.support_vectors.cols()));
  }
  double value = model.bias;
  for (std::size_t s = 0; s < model.support_vectors.rows(); ++s) {
    value += model.dual_coefficients[s] * rbf_kernel(model.support_vectors.row(s), x, model.gamma);
  }
  return value;
}

int predict_svm(const SvmModel& model, std::span<const double> x) {
  return svm_decision_value(model, x) >= 0.0 ? 1 : 0;
}

}  // namespace revsent
