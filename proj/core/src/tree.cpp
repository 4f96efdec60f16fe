#include "revsent/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace revsent {

double gini_impurity(std::size_t positives, std::size_t total) {
  if (total == 0) return 0.0;
  const double p = static_cast<double>(positives) / static_cast<double>(total);
  return 1.0 - p * p - (1.0 - p) * (1.0 - p);
}

std::size_t TreeModel::depth() const {
  std::size_t deepest = 0;
  for (const auto& node : nodes) deepest = std::max(deepest, node.depth);
  return deepest;
}

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double impurity = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& X, std::span<const int> y, const TreeConfig& config, Rng* rng)
      : X_(X), y_(y), config_(config), rng_(rng) {
    all_features_.resize(X.cols());
    std::iota(all_features_.begin(), all_features_.end(), std::size_t{0});
  }

  TreeModel build() {
    TreeModel model;
    model.max_depth = config_.max_depth;
    model.n_features = X_.cols();
    std::vector<std::size_t> samples(X_.rows());
    std::iota(samples.begin(), samples.end(), std::size_t{0});
    model.nodes.emplace_back();
    grow(model, 0, samples, 0);
    return model;
  }

 private:
  void grow(TreeModel& model, std::size_t node_index, std::vector<std::size_t>& samples, std::size_t depth) {
    std::size_t positives = 0;
    for (const auto s : samples) positives += y_[s] == 1 ? 1 : 0;
    {
      auto& node = model.nodes[node_index];
      node.depth = depth;
      node.samples = samples.size();
      node.impurity = gini_impurity(positives, samples.size());
      node.leaf_class = 2 * positives > samples.size() ? 1 : 0;
      const std::size_t majority = node.leaf_class == 1 ? positives : samples.size() - positives;
      node.leaf_probability = samples.empty() ? 1.0 : static_cast<double>(majority) / static_cast<double>(samples.size());
    }
    const bool pure = positives == 0 || positives == samples.size();
    if (pure || depth >= config_.max_depth || samples.size() < config_.min_samples_split) return;

    const Split split = best_split(samples, positives);
    if (split.feature < 0) return;

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (const auto s : samples) {
      (X_(s, static_cast<std::size_t>(split.feature)) <= split.threshold ? left : right).push_back(s);
    }
    samples.clear();
    samples.shrink_to_fit();

    const std::size_t left_index = model.nodes.size();
    model.nodes.emplace_back();
    const std::size_t right_index = model.nodes.size();
    model.nodes.emplace_back();
    auto& node = model.nodes[node_index];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.split_impurity = split.impurity;
    node.left = left_index;
    node.right = right_index;
    grow(model, left_index, left, depth + 1);
    grow(model, right_index, right, depth + 1);
  }

  std::vector<std::size_t> candidate_features() {
    const std::size_t dim = X_.cols();
    if (config_.max_features == 0 || config_.max_features >= dim || rng_ == nullptr) return all_features_;
    std::vector<std::size_t> pool = all_features_;
    // Partial Fisher-Yates draw without replacement.
    for (std::size_t i = 0; i < config_.max_features; ++i) {
      const auto j = i + static_cast<std::size_t>(rng_->uniform_index(dim - i));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(config_.max_features);
    std::sort(pool.begin(), pool.end());
    return pool;
  }

  Split best_split(const std::vector<std::size_t>& samples, std::size_t positives) {
    Split best;
    double best_impurity = std::numeric_limits<double>::infinity();
    const std::size_t n = samples.size();
    std::vector<std::pair<double, int>> column(n);
    for (const auto feature : candidate_features()) {
      bool constant = true;
      const double first = X_(samples[0], feature);
      for (std::size_t k = 0; k < n; ++k) {
        column[k] = {X_(samples[k], feature), y_[samples[k]]};
        constant = constant && column[k].first == first;
      }
      if (constant) continue;
      std::sort(column.begin(), column.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      // Prefix sweep: left = column[0..k].
      std::size_t left_pos = 0;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        left_pos += column[k].second == 1 ? 1 : 0;
        if (column[k].first == column[k + 1].first) continue;
        const std::size_t left_n = k + 1;
        const std::size_t right_n = n - left_n;
        const double impurity =
            (static_cast<double>(left_n) * gini_impurity(left_pos, left_n) +
             static_cast<double>(right_n) * gini_impurity(positives - left_pos, right_n)) /
            static_cast<double>(n);
        if (impurity < best_impurity) {
          best_impurity = impurity;
          double threshold = 0.5 * (column[k].first + column[k + 1].first);
          if (threshold >= column[k + 1].first) threshold = column[k].first;
          best = {static_cast<int>(feature), threshold, impurity};
        }
      }
    }
    return best;
  }

  const FeatureMatrix& X_;
  std::span<const int> y_;
  TreeConfig config_;
  Rng* rng_;
  std::vector<std::size_t> all_features_;
};

void check_inputs(const FeatureMatrix& X, std::span<const int> y, const char* who) {
  if (X.rows() != y.size()) throw std::invalid_argument(std::string(who) + ": X and y differ in length");
  if (X.rows() == 0) throw std::invalid_argument(std::string(who) + ": need at least one sample");
  for (const int label : y) {
    if (label != 0 && label != 1) throw std::invalid_argument(std::string(who) + ": labels must be 0 or 1");
  }
}

}  // namespace

TreeModel train_tree(const FeatureMatrix& X, std::span<const int> y, const TreeConfig& config, Rng* rng) {
  check_inputs(X, y, "train_tree");
  return TreeBuilder(X, y, config, rng).build();
}

TreePrediction predict_tree(const TreeModel& model, std::span<const double> x) {
  if (x.size() != model.n_features) {
    throw std::invalid_argument("predict_tree: dimension " + std::to_string(x.size()) + " vs model " +
                                std::to_string(model.n_features));
  }
  std::size_t index = 0;
  while (!model.nodes[index].is_leaf()) {
    const auto& node = model.nodes[index];
    index = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  return {model.nodes[index].leaf_class, model.nodes[index].leaf_probability};
}

ForestModel train_forest(const FeatureMatrix& X, std::span<const int> y, const ForestConfig& config) {
  check_inputs(X, y, "train_forest");
  if (config.n_trees < 1) throw std::invalid_argument("train_forest: n_trees must be >= 1");
  ForestModel forest;
  forest.n_trees = config.n_trees;
  forest.bootstrap = config.bootstrap;
  forest.seed = config.seed;
  forest.feature_subsample = config.feature_subsample != 0
                                 ? config.feature_subsample
                                 : std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(
                                                                std::sqrt(static_cast<double>(X.cols())))));
  const TreeConfig tree_config{config.max_depth, config.min_samples_split, forest.feature_subsample};
  forest.trees.reserve(config.n_trees);
  std::vector<std::size_t> rows(X.rows());
  std::vector<int> labels(X.rows());
  for (std::size_t t = 0; t < config.n_trees; ++t) {
    Rng rng(mix_seed(config.seed, t));
    if (config.bootstrap) {
      for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<std::size_t>(rng.uniform_index(rows.size()));
      for (std::size_t i = 0; i < rows.size(); ++i) labels[i] = y[rows[i]];
      forest.trees.push_back(train_tree(X.select_rows(rows), labels, tree_config, &rng));
    } else {
      forest.trees.push_back(train_tree(X, y, tree_config, &rng));
    }
  }
  return forest;
}

int predict_forest(const ForestModel& model, std::span<const double> x) {
  std::size_t votes[2] = {0, 0};
  double mass[2] = {0.0, 0.0};
  for (const auto& tree : model.trees) {
    const auto p = predict_tree(tree, x);
    ++votes[p.label];
    mass[p.label] += p.probability;
  }
  if (votes[1] != votes[0]) return votes[1] > votes[0] ? 1 : 0;
  return mass[1] > mass[0] ? 1 : 0;
}

}  // namespace revsent
