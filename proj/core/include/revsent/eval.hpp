#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "revsent/corpus.hpp"
#include "revsent/features.hpp"
#include "revsent/labeler.hpp"
#include "revsent/metrics.hpp"
#include "revsent/model.hpp"

namespace revsent {

// Report tag for a featurizer key: "bow" -> "BoW", "urslm-roberta" ->
// "URSLM-RoBERTa", "albert-base-v2" -> "ALBERT". Unknown keys pass through.
std::string featurizer_display_name(std::string_view key);
// "escs" -> "ESCS", "mock" -> "MOCK".
std::string labeler_display_name(std::string_view key);

// Bootstrapped pipeline ids join stages with '+' ("ESCS+URSLM-RoBERTa+LR");
// the table label puts a space before the classifier ("ESCS+URSLM-RoBERTa +LR").
// Baselines (no labeler) use "TFIDF-SVM" for both.
std::string pipeline_id(std::string_view labeler_key, std::string_view featurizer_key, ClassifierKind kind);
std::string pipeline_label(std::string_view labeler_key, std::string_view featurizer_key, ClassifierKind kind);

struct StageTimings {
  double labeling_s = 0.0;
  double vectorization_s = 0.0;  // fit + train transform + test transform
  double training_s = 0.0;
  double prediction_s = 0.0;
};

struct RunRecord {
  std::string pipeline;  // id
  std::string label;     // table row label
  std::string dataset;
  std::size_t fold = 0;
  std::size_t repeat = 0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  ConfusionMatrix cm;
  Metrics metrics;
  StageTimings timings;
  std::optional<std::size_t> peak_memory_bytes;
  std::size_t predicted_positive = 0;
  // Agreement of bootstrap labels with gold labels (bootstrapped runs only).
  std::optional<double> bootstrap_label_accuracy;
  std::vector<std::string> flags;
};

struct FoldFailure {
  std::string pipeline;
  std::string dataset;
  std::size_t fold = 0;
  std::string message;
};

struct EvalReport {
  std::vector<RunRecord> records;
  std::vector<FoldFailure> failures;
  std::size_t training_runs = 0;

  bool ok() const { return failures.empty(); }
  void append(const EvalReport& other);
};

// Id sets seen at every training-stage boundary, per fold. The harness checks
// each against the held-out fold itself; the audit keeps them for inspection.
struct StageAudit {
  struct Fold {
    std::string pipeline;
    std::size_t fold = 0;
    std::size_t repeat = 0;
    std::unordered_set<std::string> held_out;
    std::unordered_set<std::string> labeler_input;
    std::unordered_set<std::string> featurizer_fit;
    std::unordered_set<std::string> classifier_train;
  };

  void add(Fold fold);
  std::vector<Fold> folds() const;

 private:
  mutable std::mutex mutex_;
  std::vector<Fold> folds_;
};

using FeaturizerFactory = std::function<std::unique_ptr<Featurizer>()>;

struct Pipeline {
  std::string labeler_key = "mock";  // ignored by baseline_run
  std::shared_ptr<Labeler> labeler;
  std::string featurizer_key = "bow";
  FeaturizerFactory make_featurizer;
  ClassifierSpec classifier;
  std::size_t bootstrap_n = 100;
};

struct RunOptions {
  std::string dataset_name = "dataset";
  std::uint64_t seed = 0;
  StageAudit* audit = nullptr;
};

// Per fold: strip labels from the training folds, bootstrap a training set
// with the labeler, fit the featurizer on it, train, and score the held-out
// fold against gold labels. The first failing fold ends the run; records of
// completed folds are kept.
EvalReport cross_validate(std::span<const LabeledReview> dataset, const FoldPlan& plan, const Pipeline& pipeline,
                          const RunOptions& options);

struct BaselineOptions {
  std::size_t sample_n = 100;
  std::size_t repeats = 10;
};

// Per fold, `repeats` random gold-labeled samples of sample_n training-fold
// reviews replace the labeler.
EvalReport baseline_run(std::span<const LabeledReview> dataset, const FoldPlan& plan, const Pipeline& pipeline,
                        const BaselineOptions& baseline, const RunOptions& options);

// Runs tasks on up to `jobs` threads; results keep task order.
std::vector<EvalReport> run_tasks(std::vector<std::function<EvalReport()>> tasks, std::size_t jobs);

// Process peak resident set size, when the OS exposes it.
std::optional<std::size_t> peak_resident_bytes();

// ---------------------------------------------------------------------------
// Summaries

struct SummaryRow {
  std::string pipeline;
  std::string label;
  std::string dataset;
  std::size_t folds = 0;
  Aggregate accuracy;
  Aggregate f1;
  Aggregate recall;
  double vectorization_s = 0.0;
  double training_s = 0.0;
  double prediction_s = 0.0;

  bool operator==(const SummaryRow& other) const;
};

// Groups records by (pipeline, dataset) in first-appearance order. Repeats
// within a fold are averaged first; mean / sample std are then taken over folds.
std::vector<SummaryRow> summarize(const EvalReport& report);

std::string records_to_jsonl(const EvalReport& report);
EvalReport records_from_jsonl(std::string_view content);

}  // namespace revsent
