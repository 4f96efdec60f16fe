#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>

#include "revsent/io.hpp"
#include "revsent/logistic.hpp"
#include "revsent/matrix.hpp"
#include "revsent/svm.hpp"
#include "revsent/tree.hpp"

namespace revsent {

enum class ClassifierKind { kSvm, kTree, kForest, kLogistic };

// Short tags: "svm", "dt", "rf", "lr".
std::string_view to_string(ClassifierKind kind);
// Report tags: "SVM", "DT", "RF", "LR".
std::string_view display_name(ClassifierKind kind);
ClassifierKind parse_classifier_kind(std::string_view name);

struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::kLogistic;
  LogisticConfig logistic;
  SvmConfig svm;
  TreeConfig tree;
  ForestConfig forest;  // forest.seed is replaced by the per-run seed
};

using TrainedModel = std::variant<LogisticModel, SvmModel, TreeModel, ForestModel>;

TrainedModel train_classifier(const ClassifierSpec& spec, const FeatureMatrix& X, std::span<const int> y,
                              std::uint64_t seed);

int predict(const TrainedModel& model, std::span<const double> x);

// Versioned JSON documents: {"format_version": 1, "type": ..., ...}.
inline constexpr int kModelFormatVersion = 1;

Json model_to_json(const TrainedModel& model);
// Throws IoError on an unknown type, a version mismatch or missing fields.
TrainedModel model_from_json(const Json& document);

}  // namespace revsent
