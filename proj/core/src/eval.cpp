#include "revsent/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <map>
#include <thread>
#include <unordered_map>

#include "revsent/error.hpp"
#include "revsent/io.hpp"
#include "revsent/random.hpp"

namespace revsent {

std::string featurizer_display_name(std::string_view key) {
  static const std::map<std::string, std::string, std::less<>> kNames = {
      {"bow", "BoW"},
      {"tfidf", "TFIDF"},
      {"urslm-roberta", "URSLM-RoBERTa"},
      {"urslm-albert", "URSLM-ALBERT"},
      {"roberta", "RoBERTa"},
      {"roberta-base", "RoBERTa"},
      {"albert", "ALBERT"},
      {"albert-base-v2", "ALBERT"},
  };
  if (const auto it = kNames.find(key); it != kNames.end()) return it->second;
  return std::string(key);
}

std::string labeler_display_name(std::string_view key) {
  if (key == "escs") return "ESCS";
  if (key == "mock") return "MOCK";
  return std::string(key);
}

std::string pipeline_id(std::string_view labeler_key, std::string_view featurizer_key, ClassifierKind kind) {
  if (labeler_key.empty()) {
    return featurizer_display_name(featurizer_key) + "-" + std::string(display_name(kind));
  }
  return labeler_display_name(labeler_key) + "+" + featurizer_display_name(featurizer_key) + "+" +
         std::string(display_name(kind));
}

std::string pipeline_label(std::string_view labeler_key, std::string_view featurizer_key, ClassifierKind kind) {
  if (labeler_key.empty()) return pipeline_id(labeler_key, featurizer_key, kind);
  return labeler_display_name(labeler_key) + "+" + featurizer_display_name(featurizer_key) + " +" +
         std::string(display_name(kind));
}

void EvalReport::append(const EvalReport& other) {
  records.insert(records.end(), other.records.begin(), other.records.end());
  failures.insert(failures.end(), other.failures.begin(), other.failures.end());
  training_runs += other.training_runs;
}

void StageAudit::add(Fold fold) {
  std::lock_guard lock(mutex_);
  folds_.push_back(std::move(fold));
}

std::vector<StageAudit::Fold> StageAudit::folds() const {
  std::lock_guard lock(mutex_);
  return folds_;
}

std::optional<std::size_t> peak_resident_bytes() {
  std::ifstream status("/proc/self/status");
  std::string line;
  while (std::getline(status, line)) {
    if (line.rfind("VmHWM:", 0) == 0) {
      std::size_t kib = 0;
      for (const char c : line) {
        if (c >= '0' && c <= '9') kib = kib * 10 + static_cast<std::size_t>(c - '0');
      }
      return kib * 1024;
    }
  }
  return std::nullopt;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_disjoint(const std::unordered_set<std::string>& stage_ids,
                    const std::unordered_set<std::string>& held_out, const char* stage) {
  for (const auto& id : stage_ids) {
    if (held_out.contains(id)) {
      throw LeakageError(std::string("held-out review ") + id + " reached " + stage);
    }
  }
}

struct FoldData {
  std::vector<const LabeledReview*> train;
  std::vector<const LabeledReview*> test;
  std::unordered_set<std::string> held_out;
};

FoldData split_fold(std::span<const LabeledReview> dataset, const FoldPlan& plan, std::size_t fold) {
  FoldData data;
  for (const auto& review : dataset) {
    if (plan.fold_of(review.id) == fold) {
      data.test.push_back(&review);
      data.held_out.insert(review.id);
    } else {
      data.train.push_back(&review);
    }
  }
  return data;
}

void check_plan(std::span<const LabeledReview> dataset, const FoldPlan& plan) {
  if (plan.k < 2) throw std::invalid_argument("cross-validation requires k >= 2");
  if (plan.assignments.size() != dataset.size()) {
    throw std::invalid_argument("fold plan does not cover the dataset");
  }
  for (const auto& review : dataset) {
    if (!plan.assignments.contains(review.id)) {
      throw std::invalid_argument("fold plan lacks review " + review.id);
    }
  }
}

struct Scored {
  ConfusionMatrix cm;
  std::size_t predicted_positive = 0;
};

// Fit featurizer on the training texts, train, predict the test texts.
// Fills the vectorization / training / prediction timings.
Scored train_and_score(const Pipeline& pipeline, const std::vector<std::string>& train_texts,
                       const std::vector<int>& train_labels, const std::vector<const LabeledReview*>& test,
                       std::uint64_t seed, StageTimings& timings, std::vector<std::string>& flags) {
  std::vector<std::string> test_texts;
  std::vector<int> gold;
  test_texts.reserve(test.size());
  gold.reserve(test.size());
  for (const auto* review : test) {
    test_texts.push_back(review->text);
    gold.push_back(review->polarity);
  }

  auto start = Clock::now();
  auto featurizer = pipeline.make_featurizer();
  featurizer->fit(train_texts);
  const auto train_vectors = featurizer->transform(train_texts);
  const auto test_vectors = featurizer->transform(test_texts);
  const FeatureMatrix X_train = FeatureMatrix::from_vectors(train_vectors);
  const FeatureMatrix X_test = FeatureMatrix::from_vectors(test_vectors);
  timings.vectorization_s = seconds_since(start);

  start = Clock::now();
  const TrainedModel model = train_classifier(pipeline.classifier, X_train, train_labels, seed);
  timings.training_s = seconds_since(start);
  if (const auto* svm = std::get_if<SvmModel>(&model); svm && !svm->converged) {
    flags.push_back(svm->degenerate ? "svm_degenerate" : "svm_not_converged");
  }

  start = Clock::now();
  std::vector<int> predicted(X_test.rows());
  for (std::size_t i = 0; i < X_test.rows(); ++i) predicted[i] = predict(model, X_test.row(i));
  timings.prediction_s = seconds_since(start);

  Scored scored;
  scored.cm = confusion(gold, predicted);
  scored.predicted_positive = static_cast<std::size_t>(std::count(predicted.begin(), predicted.end(), 1));
  return scored;
}

void finish_record(RunRecord& record, const Scored& scored) {
  record.cm = scored.cm;
  record.metrics = compute_metrics(scored.cm);
  record.predicted_positive = scored.predicted_positive;
  if (record.metrics.recall_undefined) record.flags.push_back("recall_undefined");
  if (record.metrics.f1_undefined) record.flags.push_back("f1_undefined");
  record.peak_memory_bytes = peak_resident_bytes();
}

}  // namespace

EvalReport cross_validate(std::span<const LabeledReview> dataset, const FoldPlan& plan, const Pipeline& pipeline,
                          const RunOptions& options) {
  check_plan(dataset, plan);
  if (!pipeline.labeler) throw std::invalid_argument("cross_validate: pipeline has no labeler");
  if (!pipeline.make_featurizer) throw std::invalid_argument("cross_validate: pipeline has no featurizer");

  const std::string id = pipeline_id(pipeline.labeler_key, pipeline.featurizer_key, pipeline.classifier.kind);
  const std::string label = pipeline_label(pipeline.labeler_key, pipeline.featurizer_key, pipeline.classifier.kind);
  EvalReport report;
  for (std::size_t fold = 0; fold < plan.k; ++fold) {
    try {
      const FoldData data = split_fold(dataset, plan, fold);
      StageAudit::Fold audit{id, fold, 0, data.held_out, {}, {}, {}};

      // Labels are dropped here: the labeler only ever sees PoolItems.
      std::vector<PoolItem> pool;
      pool.reserve(data.train.size());
      std::unordered_map<std::string, int> gold_by_id;
      for (const auto* review : data.train) {
        pool.push_back({review->id, review->text});
        audit.labeler_input.insert(review->id);
        gold_by_id.emplace(review->id, review->polarity);
      }
      check_disjoint(audit.labeler_input, data.held_out, "the labeler");

      RunRecord record;
      record.pipeline = id;
      record.label = label;
      record.dataset = options.dataset_name;
      record.fold = fold;
      record.test_size = data.test.size();

      auto start = Clock::now();
      const BootstrapSet bootstrap = pipeline.labeler->label(pool, pipeline.bootstrap_n, mix_seed(options.seed, fold, 1));
      record.timings.labeling_s = seconds_since(start);
      if (bootstrap.items.size() != pipeline.bootstrap_n) {
        throw StageError("labeler returned " + std::to_string(bootstrap.items.size()) + " items, expected " +
                         std::to_string(pipeline.bootstrap_n));
      }
      if (bootstrap.imbalanced) record.flags.push_back("bootstrap_imbalanced");

      std::vector<std::string> train_texts;
      std::vector<int> train_labels;
      std::size_t agree = 0;
      for (const auto& item : bootstrap.items) {
        if (data.held_out.contains(item.id)) throw LeakageError("labeler returned held-out review " + item.id);
        const auto gold = gold_by_id.find(item.id);
        if (gold == gold_by_id.end()) throw StageError("labeler returned id outside its pool: " + item.id);
        agree += gold->second == item.polarity ? 1 : 0;
        train_texts.push_back(item.text);
        train_labels.push_back(item.polarity);
        audit.featurizer_fit.insert(item.id);
        audit.classifier_train.insert(item.id);
      }
      check_disjoint(audit.featurizer_fit, data.held_out, "featurizer fitting");
      check_disjoint(audit.classifier_train, data.held_out, "classifier training");
      record.train_size = train_texts.size();
      record.bootstrap_label_accuracy = static_cast<double>(agree) / static_cast<double>(bootstrap.items.size());

      const Scored scored = train_and_score(pipeline, train_texts, train_labels, data.test,
                                            mix_seed(options.seed, fold, 2), record.timings, record.flags);
      ++report.training_runs;
      finish_record(record, scored);
      report.records.push_back(std::move(record));
      if (options.audit) options.audit->add(std::move(audit));
    } catch (const LeakageError&) {
      throw;
    } catch (const std::exception& e) {
      report.failures.push_back({id, options.dataset_name, fold, e.what()});
      break;
    }
  }
  return report;
}

EvalReport baseline_run(std::span<const LabeledReview> dataset, const FoldPlan& plan, const Pipeline& pipeline,
                        const BaselineOptions& baseline, const RunOptions& options) {
  check_plan(dataset, plan);
  if (!pipeline.make_featurizer) throw std::invalid_argument("baseline_run: pipeline has no featurizer");
  if (baseline.repeats < 1) throw std::invalid_argument("baseline_run: repeats must be >= 1");
  if (baseline.sample_n < 1) throw std::invalid_argument("baseline_run: sample_n must be >= 1");

  const std::string id = pipeline_id("", pipeline.featurizer_key, pipeline.classifier.kind);
  EvalReport report;
  for (std::size_t fold = 0; fold < plan.k; ++fold) {
    try {
      const FoldData data = split_fold(dataset, plan, fold);
      if (baseline.sample_n > data.train.size()) {
        throw std::invalid_argument("sample_n " + std::to_string(baseline.sample_n) + " exceeds the " +
                                    std::to_string(data.train.size()) + " training-fold reviews");
      }
      for (std::size_t repeat = 0; repeat < baseline.repeats; ++repeat) {
        StageAudit::Fold audit{id, fold, repeat, data.held_out, {}, {}, {}};
        auto order = shuffled_indices(data.train.size(), mix_seed(options.seed, fold, 100 + repeat));
        order.resize(baseline.sample_n);
        std::sort(order.begin(), order.end());

        std::vector<std::string> train_texts;
        std::vector<int> train_labels;
        for (const auto i : order) {
          train_texts.push_back(data.train[i]->text);
          train_labels.push_back(data.train[i]->polarity);
          audit.featurizer_fit.insert(data.train[i]->id);
          audit.classifier_train.insert(data.train[i]->id);
        }
        check_disjoint(audit.featurizer_fit, data.held_out, "featurizer fitting");
        check_disjoint(audit.classifier_train, data.held_out, "classifier training");

        RunRecord record;
        record.pipeline = id;
        record.label = id;
        record.dataset = options.dataset_name;
        record.fold = fold;
        record.repeat = repeat;
        record.train_size = train_texts.size();
        record.test_size = data.test.size();
        const Scored scored = train_and_score(pipeline, train_texts, train_labels, data.test,
                                              mix_seed(options.seed, fold, 200 + repeat), record.timings,
                                              record.flags);
        ++report.training_runs;
        finish_record(record, scored);
        report.records.push_back(std::move(record));
        if (options.audit) options.audit->add(std::move(audit));
      }
    } catch (const LeakageError&) {
      throw;
    } catch (const std::exception& e) {
      report.failures.push_back({id, options.dataset_name, fold, e.what()});
      break;
    }
  }
  return report;
}

std::vector<EvalReport> run_tasks(std::vector<std::function<EvalReport()>> tasks, std::size_t jobs) {
  std::vector<EvalReport> results(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        results[i] = tasks[i]();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(tasks.size(), 1));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    for (std::size_t t = 0; t < jobs; ++t) threads.emplace_back(worker);
  }
  for (const auto& error : errors) {
    if (error) std::rethrow_exception(error);
  }
  return results;
}

// ---------------------------------------------------------------------------

bool SummaryRow::operator==(const SummaryRow& o) const {
  return pipeline == o.pipeline && label == o.label && dataset == o.dataset && folds == o.folds &&
         accuracy.mean == o.accuracy.mean && accuracy.std == o.accuracy.std && f1.mean == o.f1.mean &&
         f1.std == o.f1.std && recall.mean == o.recall.mean && recall.std == o.recall.std &&
         vectorization_s == o.vectorization_s && training_s == o.training_s && prediction_s == o.prediction_s;
}

std::vector<SummaryRow> summarize(const EvalReport& report) {
  struct FoldAccumulator {
    double accuracy = 0, f1 = 0, recall = 0;
    std::size_t runs = 0;
  };
  struct Group {
    std::string pipeline, label, dataset;
    std::map<std::size_t, FoldAccumulator> folds;
    double vectorization = 0, training = 0, prediction = 0;
    std::size_t runs = 0;
  };
  std::vector<Group> groups;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  for (const auto& record : report.records) {
    const auto key = std::make_pair(record.pipeline, record.dataset);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, groups.size()).first;
      groups.push_back({record.pipeline, record.label, record.dataset, {}, 0, 0, 0, 0});
    }
    auto& group = groups[it->second];
    auto& fold = group.folds[record.fold];
    fold.accuracy += record.metrics.accuracy;
    fold.f1 += record.metrics.f1;
    fold.recall += record.metrics.recall;
    ++fold.runs;
    group.vectorization += record.timings.vectorization_s;
    group.training += record.timings.training_s;
    group.prediction += record.timings.prediction_s;
    ++group.runs;
  }

  std::vector<SummaryRow> rows;
  rows.reserve(groups.size());
  for (const auto& group : groups) {
    std::vector<double> acc, f1s, rec;
    for (const auto& [fold, a] : group.folds) {
      const double runs = static_cast<double>(a.runs);
      acc.push_back(a.accuracy / runs);
      f1s.push_back(a.f1 / runs);
      rec.push_back(a.recall / runs);
    }
    const double runs = static_cast<double>(group.runs);
    rows.push_back({group.pipeline, group.label, group.dataset, group.folds.size(), aggregate(acc),
                    aggregate(f1s), aggregate(rec), group.vectorization / runs, group.training / runs,
                    group.prediction / runs});
  }
  return rows;
}

std::string records_to_jsonl(const EvalReport& report) {
  std::vector<Json> lines;
  for (const auto& r : report.records) {
    Json line = {{"pipeline", r.pipeline},
                 {"label", r.label},
                 {"dataset", r.dataset},
                 {"fold", r.fold},
                 {"repeat", r.repeat},
                 {"train_size", r.train_size},
                 {"test_size", r.test_size},
                 {"confusion", {{"tp", r.cm.tp}, {"fn", r.cm.fn}, {"fp", r.cm.fp}, {"tn", r.cm.tn}}},
                 {"accuracy", r.metrics.accuracy},
                 {"recall", r.metrics.recall},
                 {"f1", r.metrics.f1},
                 {"recall_undefined", r.metrics.recall_undefined},
                 {"f1_undefined", r.metrics.f1_undefined},
                 {"timings",
                  {{"labeling_s", r.timings.labeling_s},
                   {"vectorization_s", r.timings.vectorization_s},
                   {"training_s", r.timings.training_s},
                   {"prediction_s", r.timings.prediction_s}}},
                 {"predicted_positive", r.predicted_positive},
                 {"flags", r.flags}};
    if (r.peak_memory_bytes) line["peak_memory_bytes"] = *r.peak_memory_bytes;
    if (r.bootstrap_label_accuracy) line["bootstrap_label_accuracy"] = *r.bootstrap_label_accuracy;
    lines.push_back(std::move(line));
  }
  for (const auto& f : report.failures) {
    lines.push_back({{"failure", true}, {"pipeline", f.pipeline}, {"dataset", f.dataset}, {"fold", f.fold},
                     {"message", f.message}});
  }
  return to_jsonl(lines);
}

EvalReport records_from_jsonl(std::string_view content) {
  EvalReport report;
  try {
    for (const auto& line : parse_jsonl(content)) {
      if (line.value("failure", false)) {
        report.failures.push_back({line.at("pipeline").get<std::string>(), line.at("dataset").get<std::string>(),
                                   line.at("fold").get<std::size_t>(), line.at("message").get<std::string>()});
        continue;
      }
      RunRecord r;
      r.pipeline = line.at("pipeline").get<std::string>();
      r.label = line.at("label").get<std::string>();
      r.dataset = line.at("dataset").get<std::string>();
      r.fold = line.at("fold").get<std::size_t>();
      r.repeat = line.at("repeat").get<std::size_t>();
      r.train_size = line.at("train_size").get<std::size_t>();
      r.test_size = line.at("test_size").get<std::size_t>();
      const auto& cm = line.at("confusion");
      r.cm = {cm.at("tp").get<std::size_t>(), cm.at("fn").get<std::size_t>(), cm.at("fp").get<std::size_t>(),
              cm.at("tn").get<std::size_t>()};
      r.metrics = {line.at("accuracy").get<double>(), line.at("recall").get<double>(), line.at("f1").get<double>(),
                   line.at("recall_undefined").get<bool>(), line.at("f1_undefined").get<bool>()};
      const auto& t = line.at("timings");
      r.timings = {t.at("labeling_s").get<double>(), t.at("vectorization_s").get<double>(),
                   t.at("training_s").get<double>(), t.at("prediction_s").get<double>()};
      r.predicted_positive = line.at("predicted_positive").get<std::size_t>();
      r.flags = line.at("flags").get<std::vector<std::string>>();
      if (line.contains("peak_memory_bytes")) r.peak_memory_bytes = line.at("peak_memory_bytes").get<std::size_t>();
      if (line.contains("bootstrap_label_accuracy")) {
        r.bootstrap_label_accuracy = line.at("bootstrap_label_accuracy").get<double>();
      }
      report.records.push_back(std::move(r));
      ++report.training_runs;
    }
  } catch (const Json::exception& e) {
    throw IoError(std::string("invalid run record: ") + e.what());
  }
  return report;
}

}  // namespace revsent
