#include "revsent_cli/app.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <map>
#include <memory>
#include <optional>

#include "revsent/corpus.hpp"
#include "revsent/embedding.hpp"
#include "revsent/error.hpp"
#include "revsent/eval.hpp"
#include "revsent/io.hpp"
#include "revsent/lexicon.hpp"
#include "revsent/random.hpp"
#include "revsent/report.hpp"
#include "revsent_cli/config.hpp"

#ifndef REVSENT_VERSION
#define REVSENT_VERSION "unknown"
#endif

namespace revsent::cli {

namespace fs = std::filesystem;

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<std::string> output_dir;
  bool mock = false;
};

class Session {
 public:
  Session(std::string command, RunConfig cfg, std::string config_text, std::ostream& out, std::ostream& err,
          EnvLookup env)
      : command_(std::move(command)),
        cfg_(std::move(cfg)),
        config_text_(std::move(config_text)),
        out_(out),
        err_(err),
        env_(std::move(env)) {}

  const RunConfig& cfg() const { return cfg_; }
  std::ostream& out() { return out_; }
  void log(std::string_view message) { err_ << "[revsent] " << message << '\n'; }

  fs::path dataset_dir(const DatasetConfig& d) const { return cfg_.output_dir / d.name; }
  fs::path experimental_path(const DatasetConfig& d) const { return dataset_dir(d) / "experimental.jsonl"; }
  fs::path domain_corpus_path(const DatasetConfig& d) const { return dataset_dir(d) / "domain_corpus.jsonl"; }

  std::vector<LabeledReview> read_prepared(const fs::path& path) const {
    if (!fs::exists(path)) throw IoError("prepared file not found: " + path.string() + " (run 'prepare' first)");
    return read_canonical_dataset(path);
  }

  // Builds the labeler up front so a missing API key fails before any work.
  std::shared_ptr<Labeler> make_labeler() {
    if (labeler_) return labeler_;
    if (cfg_.labeler.mode == "mock") {
      Lexicon lexicon = cfg_.labeler.lexicon ? load_lexicon(*cfg_.labeler.lexicon) : default_lexicon();
      labeler_ = std::make_shared<MockLabeler>(std::move(lexicon), cfg_.labeler.chat.balance_tolerance);
    } else {
      std::shared_ptr<ChatClient> client = make_http_chat_client(cfg_.labeler.chat, env_);
      labeler_ = std::make_shared<ChatLabeler>(cfg_.labeler.chat, std::move(client));
    }
    return labeler_;
  }

  std::shared_ptr<EmbeddingClient> embedding_client(const std::string& key) {
    if (const auto it = embedders_.find(key); it != embedders_.end()) return it->second;
    const EmbedderConfig* ec = cfg_.find_embedder(key);
    if (!ec) throw ConfigError("unknown featurizer '" + key + "'");
    auto cache = ec->backend.cache_path.empty() ? std::make_shared<EmbeddingCache>()
                                                : std::make_shared<EmbeddingCache>(ec->backend.cache_path);
    std::shared_ptr<EmbeddingTransport> transport =
        make_http_embedding_transport(ec->backend.base_url, ec->backend.timeout);
    auto client = std::make_shared<EmbeddingClient>(ec->backend, std::move(transport), std::move(cache));
    const EmbeddingHealth health = client->health();
    log("embedding service '" + key + "': model " + health.model + ", dim " + std::to_string(health.dim));
    embedders_.emplace(key, client);
    return client;
  }

  FeaturizerFactory featurizer_factory(const std::string& key) {
    const auto max_features = cfg_.features.max_features;
    if (key == "bow") return [max_features] { return std::make_unique<BowFeaturizer>(max_features); };
    if (key == "tfidf") return [max_features] { return std::make_unique<TfidfFeaturizer>(max_features); };
    auto client = embedding_client(key);
    const std::string name = featurizer_display_name(key);
    return [client, name] { return std::make_unique<EmbeddingFeaturizer>(name, client); };
  }

  Json manifest(const fs::path& dir) const {
    Json datasets = Json::array();
    for (const auto& d : cfg_.datasets) {
      Json entry = {{"name", d.name}, {"path", d.path.string()}, {"sha256", sha256_hex(read_file(d.path))}};
      if (fs::exists(experimental_path(d))) {
        entry["experimental_sha256"] = sha256_hex(read_file(experimental_path(d)));
      }
      datasets.push_back(std::move(entry));
    }
    return {{"tool", "revsent"},
            {"version", REVSENT_VERSION},
            {"command", command_},
            {"seed", cfg_.seed},
            {"labeler", cfg_.labeler.mode},
            {"config_sha256", sha256_hex(config_text_)},
            {"output_dir", dir.string()},
            {"datasets", std::move(datasets)},
            {"eval",
             {{"k", cfg_.eval.k},
              {"stratified", cfg_.eval.stratified},
              {"repeats", cfg_.eval.repeats},
              {"sample_n", cfg_.eval.sample_n},
              {"bootstrap_n", cfg_.labeler.chat.bootstrap_size}}},
            {"components",
             {{"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                    std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                    std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
              {"compiler", __VERSION__}}}};
  }

 private:
  std::string command_;
  RunConfig cfg_;
  std::string config_text_;
  std::ostream& out_;
  std::ostream& err_;
  EnvLookup env_;
  std::shared_ptr<Labeler> labeler_;
  std::map<std::string, std::shared_ptr<EmbeddingClient>> embedders_;
};

void write_json(const fs::path& path, const Json& doc) { write_file_atomic(path, doc.dump(2) + "\n"); }

std::string percent(double fraction) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, 100.0 * fraction, std::chars_format::fixed, 1);
  return std::string(buf, r.ptr);
}

// ---------------------------------------------------------------------------
// stats

Json write_stats(Session& s, const DatasetConfig& d, const std::vector<LabeledReview>& domain,
                 const std::vector<LabeledReview>& experimental) {
  const fs::path dir = s.dataset_dir(d) / "stats";
  Json summary = Json::object();
  const std::pair<const char*, const std::vector<LabeledReview>*> splits[] = {{"domain_corpus", &domain},
                                                                               {"experimental", &experimental}};
  for (const auto& [name, reviews] : splits) {
    const CorpusStats stats = compute_stats(*reviews);
    write_file_atomic(dir / (std::string(name) + "_length_histogram.csv"), length_histogram_csv(stats));
    write_file_atomic(dir / (std::string(name) + "_label_distribution.csv"), label_distribution_csv(stats));
    Json entry = {{"count", stats.count}};
    if (stats.label_distribution) {
      entry["positive_fraction"] = stats.label_distribution->positive_fraction;
      entry["negative_fraction"] = stats.label_distribution->negative_fraction;
    }
    summary[name] = std::move(entry);
  }
  return summary;
}

int cmd_stats(Session& s) {
  std::string table = "dataset,split,count,positive_fraction,negative_fraction\n";
  for (const auto& d : s.cfg().datasets) {
    const auto domain = s.read_prepared(s.domain_corpus_path(d));
    const auto experimental = s.read_prepared(s.experimental_path(d));
    const Json summary = write_stats(s, d, domain, experimental);
    for (const char* split : {"domain_corpus", "experimental"}) {
      const auto& e = summary.at(split);
      const double pos = e.value("positive_fraction", 0.0);
      const double neg = e.value("negative_fraction", 0.0);
      table += csv_escape(d.name) + "," + split + "," + std::to_string(e.at("count").get<std::size_t>()) + "," +
               format_double(pos) + "," + format_double(neg) + "\n";
      s.out() << d.name << " " << split << ": " << e.at("count").get<std::size_t>() << " reviews, " << percent(pos)
              << "% positive / " << percent(neg) << "% negative\n";
    }
  }
  write_file_atomic(s.cfg().output_dir / "corpus_stats.csv", table);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// prepare

int cmd_prepare(Session& s) {
  const auto& cfg = s.cfg();
  for (const auto& d : cfg.datasets) {
    s.log("prepare " + d.name + ": loading " + d.path.string());
    const LoadResult loaded = load_dataset(d.path, d.load);
    for (const auto& w : loaded.warnings) s.log(d.name + ": " + w);

    EnglishHeuristic heuristic;
    heuristic.min_ascii_letter_fraction = cfg.preprocess.english_threshold;
    const FilterResult english = filter_non_english(loaded.reviews, heuristic);
    const auto trimmed = trim_length_extremes<RawReview>(english.kept, cfg.preprocess.tail_fraction);
    std::size_t excluded = 0;
    const auto labeled = standardize_all(trimmed, &excluded);
    const auto split =
        sample_split<LabeledReview>(labeled, cfg.preprocess.domain_corpus_n, cfg.preprocess.experimental_n, cfg.seed);

    write_file_atomic(s.domain_corpus_path(d), to_canonical_jsonl(split.domain_corpus));
    write_file_atomic(s.experimental_path(d), to_canonical_jsonl(split.experimental));
    Json summary = {{"dataset", d.name},
                    {"loaded", loaded.reviews.size()},
                    {"dropped_empty", loaded.dropped_empty},
                    {"malformed", loaded.malformed},
                    {"non_english_removed", english.removed},
                    {"length_trimmed", english.kept.size() - trimmed.size()},
                    {"rating_excluded", excluded},
                    {"domain_corpus", split.domain_corpus.size()},
                    {"experimental", split.experimental.size()},
                    {"seed", cfg.seed},
                    {"warnings", loaded.warnings}};
    summary["stats"] = write_stats(s, d, split.domain_corpus, split.experimental);
    write_json(s.dataset_dir(d) / "prepare.json", summary);
    s.out() << d.name << ": " << loaded.reviews.size() << " loaded, " << english.removed << " non-English, "
            << english.kept.size() - trimmed.size() << " length-trimmed, " << excluded << " neutral; "
            << split.domain_corpus.size() << " domain corpus, " << split.experimental.size() << " experimental\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// bootstrap

int cmd_bootstrap(Session& s) {
  const auto labeler = s.make_labeler();
  for (const auto& d : s.cfg().datasets) {
    const auto experimental = s.read_prepared(s.experimental_path(d));
    const std::vector<PoolItem> pool = strip_labels(experimental);
    s.log("bootstrap " + d.name + ": " + labeler->name() + " selecting " +
          std::to_string(s.cfg().labeler.chat.bootstrap_size) + " of " + std::to_string(pool.size()));
    const BootstrapSet set = labeler->label(pool, s.cfg().labeler.chat.bootstrap_size, s.cfg().seed);
    write_file_atomic(s.dataset_dir(d) / "bootstrap.jsonl", to_jsonl(set));
    write_file_atomic(s.dataset_dir(d) / "bootstrap.transcript.jsonl", set.transcript.to_jsonl());
    if (set.imbalanced) s.log("warning: " + d.name + " bootstrap set is imbalanced");
    s.out() << d.name << ": " << set.items.size() << " bootstrap reviews (" << set.positives() << " positive, "
            << set.negatives() << " negative)\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate / baselines

struct PreparedDataset {
  const DatasetConfig* config;
  std::vector<LabeledReview> reviews;
  FoldPlan plan;
};

std::vector<std::unique_ptr<PreparedDataset>> load_prepared(Session& s) {
  std::vector<std::unique_ptr<PreparedDataset>> out;
  for (const auto& d : s.cfg().datasets) {
    auto p = std::make_unique<PreparedDataset>();
    p->config = &d;
    p->reviews = s.read_prepared(s.experimental_path(d));
    if (p->reviews.size() < s.cfg().eval.k) {
      throw StageError(d.name + ": " + std::to_string(p->reviews.size()) + " reviews cannot fill " +
                       std::to_string(s.cfg().eval.k) + " folds");
    }
    p->plan = make_folds(p->reviews, {s.cfg().eval.k, s.cfg().seed, s.cfg().eval.stratified});
    out.push_back(std::move(p));
  }
  return out;
}

int write_report(Session& s, const fs::path& dir, const EvalReport& report) {
  write_file_atomic(dir / "records.jsonl", records_to_jsonl(report));
  write_file_atomic(dir / "report.md", emit_report(report, ReportFormat::kMarkdown));
  write_file_atomic(dir / "report.csv", emit_report(report, ReportFormat::kCsv));
  write_file_atomic(dir / "performance.md", emit_report(report, ReportFormat::kMarkdown, false));
  write_file_atomic(dir / "performance.csv", emit_report(report, ReportFormat::kCsv, false));
  write_json(dir / "manifest.json", s.manifest(dir));
  s.out() << emit_report(report, ReportFormat::kMarkdown);
  for (const auto& f : report.failures) {
    s.log("failure: " + f.pipeline + " on " + f.dataset + " fold " + std::to_string(f.fold) + ": " + f.message);
  }
  s.log(std::to_string(report.training_runs) + " training runs; reports in " + dir.string());
  return report.ok() ? kExitOk : kExitStage;
}

EvalReport run_all(Session& s, std::vector<std::function<EvalReport()>> tasks) {
  EvalReport total;
  for (const auto& part : run_tasks(std::move(tasks), s.cfg().jobs)) total.append(part);
  return total;
}

int cmd_evaluate(Session& s) {
  const auto& cfg = s.cfg();
  const auto labeler = s.make_labeler();
  const auto datasets = load_prepared(s);
  const fs::path dir = cfg.output_dir / "evaluation";
  std::vector<FeaturizerFactory> factories;
  for (const auto& key : cfg.eval.featurizers) factories.push_back(s.featurizer_factory(key));

  std::vector<std::function<EvalReport()>> tasks;
  std::vector<std::shared_ptr<MemoizingLabeler>> memos;
  for (const auto& data : datasets) {
    // One bootstrap set per fold, shared by every pipeline on this dataset.
    std::map<std::uint64_t, std::size_t> fold_of_seed;
    for (std::size_t f = 0; f < cfg.eval.k; ++f) fold_of_seed[mix_seed(cfg.seed, f, 1)] = f;
    const fs::path bootstrap_dir = dir / "bootstrap" / data->config->name;
    auto memo = std::make_shared<MemoizingLabeler>(
        labeler, [bootstrap_dir, fold_of_seed](const BootstrapSet& set, std::uint64_t seed) {
          const auto it = fold_of_seed.find(seed);
          const std::string stem = it == fold_of_seed.end() ? "seed" + std::to_string(seed)
                                                            : "fold" + std::to_string(it->second);
          write_file_atomic(bootstrap_dir / (stem + ".jsonl"), to_jsonl(set));
          write_file_atomic(bootstrap_dir / (stem + ".transcript.jsonl"), set.transcript.to_jsonl());
        });
    memos.push_back(memo);
    for (std::size_t fi = 0; fi < cfg.eval.featurizers.size(); ++fi) {
      for (const auto kind : cfg.classifiers) {
        Pipeline pipeline;
        pipeline.labeler_key = cfg.labeler.mode;
        pipeline.labeler = memo;
        pipeline.featurizer_key = cfg.eval.featurizers[fi];
        pipeline.make_featurizer = factories[fi];
        pipeline.classifier = cfg.classifier_params;
        pipeline.classifier.kind = kind;
        pipeline.bootstrap_n = cfg.labeler.chat.bootstrap_size;
        const PreparedDataset* p = data.get();
        const RunOptions options{p->config->name, cfg.seed, nullptr};
        tasks.push_back([p, pipeline, options] { return cross_validate(p->reviews, p->plan, pipeline, options); });
      }
    }
  }
  s.log("evaluate: " + std::to_string(tasks.size()) + " pipelines x " + std::to_string(cfg.eval.k) + " folds");
  return write_report(s, dir, run_all(s, std::move(tasks)));
}

int cmd_baselines(Session& s) {
  const auto& cfg = s.cfg();
  const auto datasets = load_prepared(s);
  const fs::path dir = cfg.output_dir / "baselines";
  std::vector<FeaturizerFactory> factories;
  for (const auto& key : cfg.eval.baseline_featurizers) factories.push_back(s.featurizer_factory(key));

  std::vector<std::function<EvalReport()>> tasks;
  for (const auto& data : datasets) {
    for (std::size_t fi = 0; fi < cfg.eval.baseline_featurizers.size(); ++fi) {
      for (const auto kind : cfg.classifiers) {
        Pipeline pipeline;
        pipeline.labeler_key.clear();
        pipeline.featurizer_key = cfg.eval.baseline_featurizers[fi];
        pipeline.make_featurizer = factories[fi];
        pipeline.classifier = cfg.classifier_params;
        pipeline.classifier.kind = kind;
        const PreparedDataset* p = data.get();
        const RunOptions options{p->config->name, cfg.seed, nullptr};
        const BaselineOptions baseline{cfg.eval.sample_n, cfg.eval.repeats};
        tasks.push_back(
            [p, pipeline, options, baseline] { return baseline_run(p->reviews, p->plan, pipeline, baseline, options); });
      }
    }
  }
  s.log("baselines: " + std::to_string(tasks.size()) + " pipelines x " + std::to_string(cfg.eval.k) + " folds x " +
        std::to_string(cfg.eval.repeats) + " samples");
  return write_report(s, dir, run_all(s, std::move(tasks)));
}

int cmd_full_run(Session& s) {
  s.make_labeler();
  int code = cmd_prepare(s);
  if (code == kExitOk) code = cmd_stats(s);
  if (code == kExitOk) code = cmd_bootstrap(s);
  if (code == kExitOk) code = cmd_evaluate(s);
  const int baseline_code = code == kExitOk || code == kExitStage ? cmd_baselines(s) : code;
  return std::max(code, baseline_code);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const EnvLookup& env) {
  CLI::App app{"Review sentiment classification with LLM-bootstrapped training sets", "revsent"};
  std::string config_path;
  Overrides overrides;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::string output_dir;
  app.add_option("--config", config_path, "YAML run configuration")->required();
  auto* seed_opt = app.add_option("--seed", seed, "Seed for every randomized step (overrides config)");
  auto* jobs_opt = app.add_option("--jobs", jobs, "Worker threads for folds/pipelines")->check(CLI::PositiveNumber);
  auto* out_opt = app.add_option("--output-dir", output_dir, "Output directory (overrides config)");
  app.add_flag("--mock", overrides.mock, "Use the offline lexicon labeler instead of the chat endpoint");
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", REVSENT_VERSION);

  const std::pair<const char*, const char*> commands[] = {
      {"prepare", "Load, filter, trim, standardize and split each dataset"},
      {"stats", "Corpus statistics of the prepared datasets"},
      {"bootstrap", "Select and label a bootstrap training set per dataset"},
      {"evaluate", "Cross-validate labeler + featurizer + classifier pipelines"},
      {"baselines", "Repeated random-sample baselines on gold labels"},
      {"full-run", "prepare, stats, bootstrap, evaluate and baselines in sequence"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }
  if (seed_opt->count()) overrides.seed = seed;
  if (jobs_opt->count()) overrides.jobs = jobs;
  if (out_opt->count()) overrides.output_dir = output_dir;
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    const fs::path path(config_path);
    RunConfig cfg = load_run_config(path);
    if (overrides.seed) cfg.seed = *overrides.seed;
    if (overrides.jobs) cfg.jobs = *overrides.jobs;
    if (overrides.output_dir) cfg.output_dir = *overrides.output_dir;
    if (overrides.mock) cfg.labeler.mode = "mock";
    cfg.validate();
    Session session(command, std::move(cfg), read_file(path), out, err, env);
    if (command == "prepare") return cmd_prepare(session);
    if (command == "stats") return cmd_stats(session);
    if (command == "bootstrap") return cmd_bootstrap(session);
    if (command == "evaluate") return cmd_evaluate(session);
    if (command == "baselines") return cmd_baselines(session);
    return cmd_full_run(session);
  } catch (const Error& e) {
    err << "revsent: " << e.what() << '\n';
    switch (e.kind()) {
      case ErrorKind::kIo:
        return kExitIo;
      case ErrorKind::kConfig:
        return kExitConfig;
      default:
        return kExitStage;
    }
  } catch (const std::exception& e) {
    err << "revsent: " << e.what() << '\n';
    return kExitStage;
  }
}

}  // namespace revsent::cli
