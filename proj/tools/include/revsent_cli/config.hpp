#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "revsent/corpus.hpp"
#include "revsent/embedding.hpp"
#include "revsent/labeler.hpp"
#include "revsent/model.hpp"

namespace revsent::cli {

struct DatasetConfig {
  std::string name;
  std::filesystem::path path;
  LoadOptions load;
};

struct PreprocessConfig {
  double english_threshold = 0.9;
  double tail_fraction = 0.05;
  std::size_t domain_corpus_n = 10'000;
  std::size_t experimental_n = 5'000;
};

struct LabelerSection {
  std::string mode = "escs";  // escs | mock
  LabelerConfig chat;
  std::optional<std::filesystem::path> lexicon;  // mock scoring lexicon; built-in when absent
};

struct EmbedderConfig {
  std::string key;  // featurizer key, e.g. "urslm-roberta"
  EmbeddingBackendConfig backend;
};

struct FeaturesConfig {
  std::optional<std::size_t> max_features = 5000;
  std::vector<EmbedderConfig> embedders;
};

struct EvalConfig {
  std::size_t k = 5;
  bool stratified = false;
  std::size_t repeats = 10;
  std::size_t sample_n = 100;
  std::vector<std::string> featurizers = {"bow", "tfidf"};
  std::vector<std::string> baseline_featurizers = {"tfidf", "bow"};
};

struct RunConfig {
  std::uint64_t seed = 42;
  std::filesystem::path output_dir = "out";
  std::size_t jobs = 1;
  std::vector<DatasetConfig> datasets;
  PreprocessConfig preprocess;
  LabelerSection labeler;
  FeaturesConfig features;
  ClassifierSpec classifier_params;
  std::vector<ClassifierKind> classifiers = {ClassifierKind::kSvm, ClassifierKind::kTree, ClassifierKind::kForest,
                                             ClassifierKind::kLogistic};
  EvalConfig eval;

  // Throws ConfigError on any inconsistent value.
  void validate() const;
  const EmbedderConfig* find_embedder(std::string_view key) const;
};

// Parses a YAML run config. Unknown keys and malformed values raise
// ConfigError; relative paths resolve against base_dir. Dataset files are not
// touched here.
RunConfig parse_run_config(std::string_view yaml, const std::filesystem::path& base_dir);

// Reads and parses a config file (IoError when unreadable) and checks that
// every referenced dataset file exists (IoError naming the path).
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace revsent::cli
