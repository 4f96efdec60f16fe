#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "revsent/matrix.hpp"
#include "revsent/random.hpp"

namespace revsent {

struct TreeNode {
  // Internal nodes: feature >= 0 and x[feature] <= threshold goes left.
  int feature = -1;
  double threshold = 0.0;
  std::size_t left = 0;
  std::size_t right = 0;
  // Leaves: majority class (ties -> 0) and that class's share of the leaf.
  int leaf_class = 0;
  double leaf_probability = 1.0;
  std::size_t depth = 0;
  std::size_t samples = 0;
  double impurity = 0.0;        // Gini of this node
  double split_impurity = 0.0;  // weighted Gini of the children, internal nodes only

  bool is_leaf() const { return feature < 0; }
};

struct TreeConfig {
  std::size_t max_depth = 10;
  std::size_t min_samples_split = 2;
  // Candidate features per split; 0 or >= dim means all features.
  std::size_t max_features = 0;
};

struct TreeModel {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  std::size_t max_depth = 10;
  std::size_t n_features = 0;

  std::size_t depth() const;
};

double gini_impurity(std::size_t positives, std::size_t total);

// Greedy CART on Gini impurity. Thresholds are midpoints between consecutive
// distinct feature values. `rng` is consulted only when max_features < dim.
TreeModel train_tree(const FeatureMatrix& X, std::span<const int> y, const TreeConfig& config = {},
                     Rng* rng = nullptr);

struct TreePrediction {
  int label = 0;
  double probability = 1.0;
};

TreePrediction predict_tree(const TreeModel& model, std::span<const double> x);

struct ForestConfig {
  std::size_t n_trees = 100;
  std::size_t max_depth = 10;
  std::size_t min_samples_split = 2;
  // Candidate features per split; 0 means floor(sqrt(dim)).
  std::size_t feature_subsample = 0;
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

struct ForestModel {
  std::vector<TreeModel> trees;
  std::size_t n_trees = 0;
  std::size_t feature_subsample = 0;
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

// Tree t draws from Rng(mix_seed(seed, t)), so forests are reproducible and
// trees could be trained in any order.
ForestModel train_forest(const FeatureMatrix& X, std::span<const int> y, const ForestConfig& config = {});

// Majority vote; ties go to the class with the larger summed leaf
// probability, then to 0.
int predict_forest(const ForestModel& model, std::span<const double> x);

}  // namespace revsent
