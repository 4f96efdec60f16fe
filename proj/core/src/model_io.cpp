#include "revsent/model.hpp"

#include <stdexcept>

#include "revsent/error.hpp"

namespace revsent {

std::string_view to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::kSvm: return "svm";
    case ClassifierKind::kTree: return "dt";
    case ClassifierKind::kForest: return "rf";
    case ClassifierKind::kLogistic: return "lr";
  }
  return "lr";
}

std::string_view display_name(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::kSvm: return "SVM";
    case ClassifierKind::kTree: return "DT";
    case ClassifierKind::kForest: return "RF";
    case ClassifierKind::kLogistic: return "LR";
  }
  return "LR";
}

ClassifierKind parse_classifier_kind(std::string_view name) {
  if (name == "svm") return ClassifierKind::kSvm;
  if (name == "dt") return ClassifierKind::kTree;
  if (name == "rf") return ClassifierKind::kForest;
  if (name == "lr") return ClassifierKind::kLogistic;
  throw ConfigError("unknown classifier '" + std::string(name) + "' (expected svm, dt, rf or lr)");
}

TrainedModel train_classifier(const ClassifierSpec& spec, const FeatureMatrix& X, std::span<const int> y,
                              std::uint64_t seed) {
  switch (spec.kind) {
    case ClassifierKind::kSvm: return train_svm(X, y, spec.svm);
    case ClassifierKind::kTree: return train_tree(X, y, spec.tree);
    case ClassifierKind::kForest: {
      ForestConfig config = spec.forest;
      config.seed = seed;
      return train_forest(X, y, config);
    }
    case ClassifierKind::kLogistic: return train_logreg(X, y, spec.logistic);
  }
  throw std::logic_error("unhandled classifier kind");
}

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Json matrix_to_json(const FeatureMatrix& m) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
  return {{"cols", m.cols()}, {"rows", std::move(rows)}};
}

FeatureMatrix matrix_from_json(const Json& j) {
  const auto rows = j.at("rows").get<std::vector<std::vector<double>>>();
  FeatureMatrix m = FeatureMatrix::from_rows(rows);
  if (rows.empty()) m = FeatureMatrix(0, j.at("cols").get<std::size_t>());
  if (m.cols() != j.at("cols").get<std::size_t>()) throw IoError("matrix column count mismatch");
  return m;
}

Json tree_to_json(const TreeModel& tree) {
  // Parallel arrays, one entry per node.
  Json feature = Json::array(), threshold = Json::array(), left = Json::array(), right = Json::array(),
       leaf_class = Json::array(), leaf_probability = Json::array(), depth = Json::array(),
       samples = Json::array(), impurity = Json::array(), split_impurity = Json::array();
  for (const auto& node : tree.nodes) {
    feature.push_back(node.feature);
    threshold.push_back(node.threshold);
    left.push_back(node.left);
    right.push_back(node.right);
    leaf_class.push_back(node.leaf_class);
    leaf_probability.push_back(node.leaf_probability);
    depth.push_back(node.depth);
    samples.push_back(node.samples);
    impurity.push_back(node.impurity);
    split_impurity.push_back(node.split_impurity);
  }
  return {{"max_depth", tree.max_depth}, {"n_features", tree.n_features}, {"feature", feature},
          {"threshold", threshold},     {"left", left},                   {"right", right},
          {"leaf_class", leaf_class},   {"leaf_probability", leaf_probability},
          {"depth", depth},             {"samples", samples},             {"impurity", impurity},
          {"split_impurity", split_impurity}};
}

TreeModel tree_from_json(const Json& j) {
  TreeModel tree;
  tree.max_depth = j.at("max_depth").get<std::size_t>();
  tree.n_features = j.at("n_features").get<std::size_t>();
  const std::size_t count = j.at("feature").size();
  tree.nodes.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto& node = tree.nodes[i];
    node.feature = j.at("feature").at(i).get<int>();
    node.threshold = j.at("threshold").at(i).get<double>();
    node.left = j.at("left").at(i).get<std::size_t>();
    node.right = j.at("right").at(i).get<std::size_t>();
    node.leaf_class = j.at("leaf_class").at(i).get<int>();
    node.leaf_probability = j.at("leaf_probability").at(i).get<double>();
    node.depth = j.at("depth").at(i).get<std::size_t>();
    node.samples = j.at("samples").at(i).get<std::size_t>();
    node.impurity = j.at("impurity").at(i).get<double>();
    node.split_impurity = j.at("split_impurity").at(i).get<double>();
    if (!node.is_leaf() && (node.left >= count || node.right >= count ||
                            static_cast<std::size_t>(node.feature) >= tree.n_features)) {
      throw IoError("tree node " + std::to_string(i) + " references out-of-range child or feature");
    }
  }
  if (count == 0) throw IoError("tree has no nodes");
  return tree;
}

Json logistic_config_to_json(const LogisticConfig& c) {
  Json j = {{"inverse_regularization", c.inverse_regularization},
            {"learning_rate", c.learning_rate},
            {"max_epochs", c.max_epochs},
            {"tolerance", c.tolerance},
            {"normalize_rows", c.normalize_rows}};
  if (c.l2_strength) j["l2_strength"] = *c.l2_strength;
  return j;
}

LogisticConfig logistic_config_from_json(const Json& j) {
  LogisticConfig c;
  if (j.contains("l2_strength")) c.l2_strength = j.at("l2_strength").get<double>();
  c.inverse_regularization = j.at("inverse_regularization").get<double>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.max_epochs = j.at("max_epochs").get<std::size_t>();
  c.tolerance = j.at("tolerance").get<double>();
  c.normalize_rows = j.at("normalize_rows").get<bool>();
  return c;
}

}  // namespace

int predict(const TrainedModel& model, std::span<const double> x) {
  return std::visit(Overloaded{
                        [&](const LogisticModel& m) { return predict_logreg(m, x).label; },
                        [&](const SvmModel& m) { return predict_svm(m, x); },
                        [&](const TreeModel& m) { return predict_tree(m, x).label; },
                        [&](const ForestModel& m) { return predict_forest(m, x); },
                    },
                    model);
}

Json model_to_json(const TrainedModel& model) {
  Json doc = std::visit(
      Overloaded{
          [](const LogisticModel& m) -> Json {
            return {{"type", "logistic"},          {"weights", m.weights},
                    {"bias", m.bias},              {"l2_strength", m.l2_strength},
                    {"config", logistic_config_to_json(m.config)},
                    {"epochs_run", m.epochs_run},  {"converged", m.converged}};
          },
          [](const SvmModel& m) -> Json {
            return {{"type", "svm"},
                    {"support_vectors", matrix_to_json(m.support_vectors)},
                    {"dual_coefficients", m.dual_coefficients},
                    {"support_indices", m.support_indices},
                    {"bias", m.bias},
                    {"gamma", m.gamma},
                    {"C", m.C},
                    {"iterations", m.iterations},
                    {"converged", m.converged},
                    {"degenerate", m.degenerate}};
          },
          [](const TreeModel& m) -> Json {
            Json j = tree_to_json(m);
            j["type"] = "tree";
            return j;
          },
          [](const ForestModel& m) -> Json {
            Json trees = Json::array();
            for (const auto& tree : m.trees) trees.push_back(tree_to_json(tree));
            return {{"type", "forest"},
                    {"n_trees", m.n_trees},
                    {"feature_subsample", m.feature_subsample},
                    {"bootstrap", m.bootstrap},
                    {"seed", m.seed},
                    {"trees", std::move(trees)}};
          },
      },
      model);
  doc["format_version"] = kModelFormatVersion;
  return doc;
}

TrainedModel model_from_json(const Json& doc) {
  try {
    const int version = doc.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw IoError("unsupported model format_version " + std::to_string(version));
    }
    const auto type = doc.at("type").get<std::string>();
    if (type == "logistic") {
      LogisticModel m;
      m.weights = doc.at("weights").get<std::vector<double>>();
      m.bias = doc.at("bias").get<double>();
      m.l2_strength = doc.at("l2_strength").get<double>();
      m.config = logistic_config_from_json(doc.at("config"));
      m.epochs_run = doc.at("epochs_run").get<std::size_t>();
      m.converged = doc.at("converged").get<bool>();
      return m;
    }
    if (type == "svm") {
      SvmModel m;
      m.support_vectors = matrix_from_json(doc.at("support_vectors"));
      m.dual_coefficients = doc.at("dual_coefficients").get<std::vector<double>>();
      m.support_indices = doc.at("support_indices").get<std::vector<std::size_t>>();
      m.bias = doc.at("bias").get<double>();
      m.gamma = doc.at("gamma").get<double>();
      m.C = doc.at("C").get<double>();
      m.iterations = doc.at("iterations").get<std::size_t>();
      m.converged = doc.at("converged").get<bool>();
      m.degenerate = doc.at("degenerate").get<bool>();
      if (m.dual_coefficients.size() != m.support_vectors.rows()) {
        throw IoError("svm dual coefficient count differs from support vector count");
      }
      return m;
    }
    if (type == "tree") return tree_from_json(doc);
    if (type == "forest") {
      ForestModel m;
      m.n_trees = doc.at("n_trees").get<std::size_t>();
      m.feature_subsample = doc.at("feature_subsample").get<std::size_t>();
      m.bootstrap = doc.at("bootstrap").get<bool>();
      m.seed = doc.at("seed").get<std::uint64_t>();
      for (const auto& tree : doc.at("trees")) m.trees.push_back(tree_from_json(tree));
      if (m.trees.size() != m.n_trees) throw IoError("forest tree count differs from n_trees");
      return m;
    }
    throw IoError("unknown model type '" + type + "'");
  } catch (const Json::exception& e) {
    throw IoError(std::string("invalid model document: ") + e.what());
  }
}

}  // namespace revsent
