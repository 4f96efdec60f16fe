// One PASS/FAIL line per acceptance criterion. Every tolerance and budget is
// pinned below; the process exits nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "datasets.hpp"
#include "revsent/corpus.hpp"
#include "revsent/eval.hpp"
#include "revsent/features.hpp"
#include "revsent/io.hpp"
#include "revsent/labeler.hpp"
#include "revsent/logistic.hpp"
#include "revsent/metrics.hpp"
#include "revsent/model.hpp"
#include "revsent/random.hpp"
#include "revsent/report.hpp"
#include "revsent/svm.hpp"
#include "revsent/text.hpp"
#include "revsent/tree.hpp"
#include "revsent_cli/app.hpp"
#include "synthetic.hpp"

namespace {

using namespace revsent;
using Clock = std::chrono::steady_clock;

constexpr double kMetricTolerance = 1e-12;
constexpr double kMetricBudgetS = 5.0;
constexpr double kSpotTolerance = 1e-4;
constexpr double kGradientRelTolerance = 1e-4;
constexpr double kKktTolerance = 1e-3;
constexpr double kDualSumTolerance = 1e-9;
constexpr double kClassifierBudgetS = 60.0;
constexpr double kDeskAccuracyFloor = 0.90;
constexpr double kDeskBudgetS = 120.0;
constexpr double kSweepBudgetS = 15.0 * 60.0;
constexpr double kSweepMemoryBytes = 2.5 * 1024 * 1024 * 1024;

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string num(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

// ---------------------------------------------------------------------------

Outcome metric_oracle() {
  Outcome o;
  const auto start = Clock::now();
  Rng rng(20240601);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(500);
    std::vector<int> truth(n), pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = static_cast<int>(rng.uniform_index(2));
      pred[i] = static_cast<int>(rng.uniform_index(2));
    }
    // Oracle: classify each pair, count, form integer ratios.
    long long tp = 0, fn = 0, fp = 0, tn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (truth[i] == 1 && pred[i] == 1) ++tp;
      else if (truth[i] == 1) ++fn;
      else if (pred[i] == 1) ++fp;
      else ++tn;
    }
    const double acc = static_cast<double>(tp + tn) / static_cast<double>(n);
    const double rec = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    const double f1v = 2 * tp + fp + fn == 0 ? 0.0 : static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn);
    const Metrics m = compute_metrics(confusion(truth, pred));
    if (std::abs(m.accuracy - acc) > kMetricTolerance || std::abs(m.recall - rec) > kMetricTolerance ||
        std::abs(m.f1 - f1v) > kMetricTolerance || m.recall_undefined != (tp + fn == 0) ||
        m.f1_undefined != (2 * tp + fp + fn == 0)) {
      o.check(false, "mismatch at trial " + std::to_string(trial));
      break;
    }
  }
  const double elapsed = seconds_since(start);
  o.check(elapsed < kMetricBudgetS, "runtime " + num(elapsed) + " s");
  if (o.pass) o.detail = "1000 trials in " + num(elapsed) + " s";
  return o;
}

Outcome metric_spot_values() {
  Outcome o;
  const ConfusionMatrix cm{3, 1, 2, 4};
  const Metrics m = compute_metrics(cm);
  o.check(std::abs(m.accuracy - 0.7) <= kSpotTolerance, "accuracy " + num(m.accuracy));
  o.check(std::abs(m.recall - 0.75) <= kSpotTolerance, "recall " + num(m.recall));
  o.check(std::abs(m.f1 - 0.6667) <= kSpotTolerance, "f1 " + num(m.f1));
  if (o.pass) o.detail = "accuracy 0.7, recall 0.75, f1 " + num(m.f1);
  return o;
}

Outcome preprocessing_contract() {
  Outcome o;
  std::vector<RawReview> reviews;
  for (std::size_t len = 1; len <= 100; ++len) {
    reviews.push_back({"r" + std::to_string(len), testing::filler_text(len, len), 5, std::nullopt, Source::kOther});
  }
  Rng rng(3);
  rng.shuffle(reviews);
  const auto kept = trim_length_extremes<RawReview>(reviews, 0.05);
  std::size_t lo = SIZE_MAX, hi = 0;
  for (const auto& r : kept) {
    lo = std::min(lo, token_count(r.text));
    hi = std::max(hi, token_count(r.text));
  }
  o.check(kept.size() == 90, "kept " + std::to_string(kept.size()));
  o.check(lo == 6 && hi == 95, "lengths " + std::to_string(lo) + ".." + std::to_string(hi));

  const std::optional<int> expected[] = {0, 0, std::nullopt, 1, 1};
  for (int rating = 1; rating <= 5; ++rating) {
    const auto got = standardize_labels({"x", "text", rating, std::nullopt, Source::kOther});
    const bool same = got.has_value() == expected[rating - 1].has_value() &&
                      (!got || got->polarity == *expected[rating - 1]);
    o.check(same, "rating " + std::to_string(rating));
  }
  if (o.pass) o.detail = "90 kept, lengths 6..95, ratings 1-5 mapped";
  return o;
}

Outcome classifier_suite() {
  Outcome o;
  const auto start = Clock::now();

  // LR on separable blobs.
  {
    const auto data = testing::blobs(200, 2, 2, 3.0, 0.5, 0.0, 11);
    const auto model = train_logreg(data.X, data.y);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.X.rows(); ++i) correct += predict_logreg(model, data.X.row(i)).label == data.y[i];
    o.check(correct == data.X.rows(), "LR train accuracy " + std::to_string(correct) + "/200");
  }
  // LR gradient vs central differences.
  {
    const auto data = testing::blobs(40, 3, 2, 1.0, 1.0, 0.2, 12);
    const std::vector<double> w = {0.3, -0.7, 0.2};
    const double b = 0.1, l2 = 0.05, h = 1e-6;
    const auto analytic = logistic_loss(data.X, data.y, w, b, l2);
    double worst = 0.0;
    for (std::size_t j = 0; j <= w.size(); ++j) {
      auto wp = w, wm = w;
      double bp = b, bm = b;
      if (j < w.size()) {
        wp[j] += h;
        wm[j] -= h;
      } else {
        bp += h;
        bm -= h;
      }
      const double numeric =
          (logistic_loss(data.X, data.y, wp, bp, l2).loss - logistic_loss(data.X, data.y, wm, bm, l2).loss) / (2 * h);
      const double a = j < w.size() ? analytic.weight_gradient[j] : analytic.bias_gradient;
      worst = std::max(worst, std::abs(a - numeric) / std::max(std::abs(numeric), 1e-8));
    }
    o.check(worst <= kGradientRelTolerance, "LR gradient rel error " + num(worst));
  }
  // SVM on XOR.
  {
    const auto data = testing::xor4();
    SvmConfig cfg;
    cfg.gamma = 1.0;
    cfg.C = 10.0;
    const auto model = train_svm(data.X, data.y, cfg);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < 4; ++i) correct += predict_svm(model, data.X.row(i)) == data.y[i];
    o.check(correct == 4, "SVM XOR accuracy " + std::to_string(correct) + "/4");
    std::vector<double> alpha(4, 0.0);
    double sum_alpha_y = 0.0;
    for (std::size_t s = 0; s < model.support_indices.size(); ++s) {
      const double yi = data.y[model.support_indices[s]] == 1 ? 1.0 : -1.0;
      alpha[model.support_indices[s]] = model.dual_coefficients[s] * yi;
      sum_alpha_y += model.dual_coefficients[s];
    }
    o.check(std::abs(sum_alpha_y) <= kDualSumTolerance, "sum alpha*y " + num(sum_alpha_y));
    for (std::size_t i = 0; i < 4; ++i) {
      const double yi = data.y[i] == 1 ? 1.0 : -1.0;
      const double margin = yi * svm_decision_value(model, data.X.row(i));
      const bool kkt = alpha[i] < -kKktTolerance || alpha[i] > cfg.C + kKktTolerance ? false
                       : alpha[i] <= 1e-8                                            ? margin >= 1.0 - kKktTolerance
                       : alpha[i] >= cfg.C - 1e-8                                    ? margin <= 1.0 + kKktTolerance
                                                       : std::abs(margin - 1.0) <= kKktTolerance;
      o.check(kkt, "KKT violated at point " + std::to_string(i));
    }
  }
  // DT depth on adversarial (random-label) data.
  {
    const auto data = testing::blobs(500, 4, 0, 0.0, 1.0, 0.5, 13);
    const auto tree = train_tree(data.X, data.y);
    o.check(tree.depth() <= 10, "DT depth " + std::to_string(tree.depth()));
  }
  // RF(1 tree, no bootstrap, all features) == DT.
  {
    const auto train = testing::blobs(150, 4, 2, 0.8, 1.0, 0.1, 14);
    const auto test = testing::blobs(300, 4, 2, 0.8, 1.0, 0.1, 15);
    const auto tree = train_tree(train.X, train.y);
    ForestConfig fc;
    fc.n_trees = 1;
    fc.bootstrap = false;
    fc.feature_subsample = 4;
    const auto forest = train_forest(train.X, train.y, fc);
    std::size_t differ = 0;
    for (std::size_t i = 0; i < test.X.rows(); ++i) {
      differ += predict_tree(tree, test.X.row(i)).label != predict_forest(forest, test.X.row(i));
    }
    o.check(differ == 0, "RF(1) differs from DT on " + std::to_string(differ) + " points");
  }
  // RF(100) vs DT on noisy blobs over 10 seeds.
  {
    double rf_total = 0.0, dt_total = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto train = testing::blobs(200, 5, 2, 0.7, 1.0, 0.1, 100 + seed);
      const auto test = testing::blobs(500, 5, 2, 0.7, 1.0, 0.1, 200 + seed);
      const auto tree = train_tree(train.X, train.y);
      ForestConfig fc;
      fc.seed = seed;
      const auto forest = train_forest(train.X, train.y, fc);
      for (std::size_t i = 0; i < test.X.rows(); ++i) {
        dt_total += predict_tree(tree, test.X.row(i)).label == test.y[i];
        rf_total += predict_forest(forest, test.X.row(i)) == test.y[i];
      }
    }
    const double rf = rf_total / 5000.0, dt = dt_total / 5000.0;
    o.check(rf >= dt, "RF " + num(rf) + " < DT " + num(dt));
    if (o.pass) o.detail = "RF " + num(rf) + " >= DT " + num(dt);
  }
  const double elapsed = seconds_since(start);
  o.check(elapsed < kClassifierBudgetS, "runtime " + num(elapsed) + " s");
  if (o.pass) o.detail += ", " + num(elapsed) + " s";
  return o;
}

Pipeline mock_pipeline(std::string featurizer, ClassifierKind kind) {
  Pipeline p;
  p.labeler_key = "mock";
  p.labeler = std::make_shared<MockLabeler>();
  p.featurizer_key = featurizer;
  if (featurizer == "tfidf") {
    p.make_featurizer = [] { return std::make_unique<TfidfFeaturizer>(); };
  } else {
    p.make_featurizer = [] { return std::make_unique<BowFeaturizer>(); };
  }
  p.classifier.kind = kind;
  p.bootstrap_n = 100;
  return p;
}

Outcome leakage_guard() {
  Outcome o;
  const auto corpus = testing::synthetic_corpus({.n = 2000, .seed = 31});
  const auto plan = make_folds(corpus, {5, 31, false});
  StageAudit audit;
  const auto report = cross_validate(corpus, plan, mock_pipeline("bow", ClassifierKind::kLogistic), {"synthetic", 31, &audit});
  const auto folds = audit.folds();
  o.check(report.ok() && report.records.size() == 5, "run incomplete");
  o.check(folds.size() == 5, "audited " + std::to_string(folds.size()) + " folds");
  std::size_t checked = 0;
  for (const auto& f : folds) {
    o.check(f.held_out.size() == plan.fold_sizes()[f.fold], "held-out set incomplete");
    for (const auto* stage : {&f.labeler_input, &f.featurizer_fit, &f.classifier_train}) {
      o.check(!stage->empty(), "empty stage set");
      for (const auto& id : *stage) {
        ++checked;
        o.check(!f.held_out.contains(id), "held-out id " + id + " leaked in fold " + std::to_string(f.fold));
      }
    }
  }
  if (o.pass) o.detail = std::to_string(checked) + " stage ids checked against 5 held-out folds";
  return o;
}

Outcome desk_experiment() {
  Outcome o;
  const auto start = Clock::now();
  const auto corpus = testing::synthetic_corpus({.n = 5000, .seed = 2024});
  const auto plan = make_folds(corpus, {5, 2024, false});
  const auto pipeline = mock_pipeline("bow", ClassifierKind::kLogistic);
  const auto first = cross_validate(corpus, plan, pipeline, {"synthetic", 2024, nullptr});
  const auto second = cross_validate(corpus, plan, pipeline, {"synthetic", 2024, nullptr});
  o.check(first.ok() && first.records.size() == 5, "run incomplete");
  const auto rows = summarize(first);
  const double mean = rows.empty() ? 0.0 : rows.front().accuracy.mean;
  o.check(mean >= kDeskAccuracyFloor, "mean accuracy " + num(mean));
  o.check(emit_report(first, ReportFormat::kCsv, false) == emit_report(second, ReportFormat::kCsv, false),
          "reports differ across identical runs");
  bool identical = first.records.size() == second.records.size();
  for (std::size_t i = 0; identical && i < first.records.size(); ++i) {
    const auto &a = first.records[i], &b = second.records[i];
    identical = a.cm == b.cm && a.metrics.accuracy == b.metrics.accuracy && a.metrics.f1 == b.metrics.f1 &&
                a.metrics.recall == b.metrics.recall && a.bootstrap_label_accuracy == b.bootstrap_label_accuracy;
  }
  o.check(identical, "records differ across identical runs");
  const double elapsed = seconds_since(start);
  o.check(elapsed < kDeskBudgetS, "runtime " + num(elapsed) + " s");
  if (o.pass) {
    o.detail = "mean accuracy " + num(mean) + " ± " + num(rows.front().accuracy.std) + ", bit-identical, " +
               num(elapsed) + " s";
  }
  return o;
}

Outcome baseline_shape() {
  Outcome o;
  const auto corpus = testing::synthetic_corpus({.n = 1000, .seed = 41});
  const auto plan = make_folds(corpus, {5, 41, false});
  const auto report = baseline_run(corpus, plan, mock_pipeline("tfidf", ClassifierKind::kLogistic), {100, 10},
                                   {"synthetic", 41, nullptr});
  o.check(report.ok(), "baseline failed");
  o.check(report.training_runs == 50, "training runs " + std::to_string(report.training_runs));
  o.check(report.records.size() == 50, "records " + std::to_string(report.records.size()));
  std::set<std::pair<std::size_t, std::size_t>> cells;
  for (const auto& r : report.records) cells.insert({r.fold, r.repeat});
  o.check(cells.size() == 50, "distinct (fold, repeat) cells " + std::to_string(cells.size()));
  if (o.pass) o.detail = "50 training runs (5 folds x 10 samples)";
  return o;
}

Outcome report_fidelity() {
  Outcome o;
  EvalReport report;
  Rng rng(5);
  std::vector<std::string> labels;
  for (const char* feat : {"urslm-roberta", "urslm-albert"}) {
    for (const auto kind : {ClassifierKind::kSvm, ClassifierKind::kTree, ClassifierKind::kForest, ClassifierKind::kLogistic}) {
      labels.push_back(pipeline_label("escs", feat, kind));
      for (std::size_t fold = 0; fold < 5; ++fold) {
        RunRecord r;
        r.pipeline = pipeline_id("escs", feat, kind);
        r.label = labels.back();
        r.dataset = "Movie";
        r.fold = fold;
        r.cm = {rng.uniform_index(500), rng.uniform_index(100), rng.uniform_index(100), rng.uniform_index(500)};
        r.metrics = compute_metrics(r.cm);
        r.timings = {0.0, rng.uniform01() * 10, rng.uniform01(), rng.uniform01() * 0.1};
        report.records.push_back(r);
      }
    }
  }
  const std::string md = emit_report(report, ReportFormat::kMarkdown);
  o.check(std::find(labels.begin(), labels.end(), "ESCS+URSLM-RoBERTa +LR") != labels.end(), "label format");
  for (const auto& label : labels) o.check(md.find("| " + label + " |") != std::string::npos, "missing row " + label);
  o.check(md.find("| Model | Accuracy | F1 Score | Recall |") != std::string::npos, "metric header");
  o.check(md.find("| Average Vectorization Time | Average Training Time | Average Prediction Time |") !=
              std::string::npos,
          "timing header");
  const auto rows = summarize(report);
  const auto reloaded = parse_report_csv(emit_report(report, ReportFormat::kCsv));
  o.check(rows == reloaded, "CSV does not round-trip");
  o.check(emit_report(report, ReportFormat::kMarkdown) == md, "markdown not deterministic");
  if (o.pass) o.detail = "8 pipeline rows, timing columns, exact CSV round-trip";
  return o;
}

Outcome resource_envelope() {
  Outcome o;
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("revsent_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  write_file_atomic(dir / "reviews.csv", testing::synthetic_ratings_csv({.n = 20000, .seed = 77}, 0));
  write_file_atomic(dir / "config.yaml",
                    "seed: 77\n"
                    "output_dir: out\n"
                    "datasets:\n"
                    "  - name: synthetic\n"
                    "    path: reviews.csv\n"
                    "    schema: {id: review_id, text: review_text, rating: rating}\n"
                    "preprocess: {tail_fraction: 0.05, domain_corpus_n: 10000, experimental_n: 5000}\n"
                    "labeler: {mode: mock, bootstrap_size: 100}\n"
                    "eval: {k: 5, featurizers: [bow, tfidf]}\n");
  const auto start = Clock::now();
  std::ostringstream out, err;
  const std::string config = (dir / "config.yaml").string();
  int code = cli::run_cli({"--config", config, "--jobs", "2", "prepare"}, out, err);
  if (code == 0) code = cli::run_cli({"--config", config, "--jobs", "2", "evaluate"}, out, err);
  const double elapsed = seconds_since(start);
  o.check(code == 0, "exit code " + std::to_string(code) + ": " + err.str());
  std::size_t records = 0;
  if (code == 0) {
    const auto report = records_from_jsonl(read_file(dir / "out" / "evaluation" / "records.jsonl"));
    records = report.records.size();
    o.check(records == 40, "records " + std::to_string(records));
  }
  const auto peak = peak_resident_bytes();
  o.check(elapsed < kSweepBudgetS, "runtime " + num(elapsed) + " s");
  o.check(peak.has_value() && static_cast<double>(*peak) < kSweepMemoryBytes,
          "peak memory " + (peak ? num(static_cast<double>(*peak) / (1 << 20)) + " MiB" : std::string("unknown")));
  if (o.pass) {
    o.detail = "8 pipelines x 5 folds in " + num(elapsed) + " s, peak RSS " +
               num(static_cast<double>(*peak) / (1 << 20)) + " MiB";
  }
  fs::remove_all(dir);
  return o;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"metric-oracle-equivalence", metric_oracle},
      {"metric-spot-values", metric_spot_values},
      {"preprocessing-contract", preprocessing_contract},
      {"classifier-sanity-suite", classifier_suite},
      {"leakage-guard", leakage_guard},
      {"end-to-end-desk-experiment", desk_experiment},
      {"baseline-protocol-shape", baseline_shape},
      {"report-fidelity", report_fidelity},
      {"resource-envelope", resource_envelope},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome outcome;
    try {
      outcome = run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", outcome.pass ? "PASS" : "FAIL", name, outcome.detail.c_str());
    std::fflush(stdout);
    failures += outcome.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
