#include "revsent_cli/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <initializer_list>
#include <set>

#include "revsent/error.hpp"
#include "revsent/io.hpp"

namespace revsent::cli {

namespace {

std::string where(const YAML::Node& node, std::string_view path) {
  const auto mark = node.Mark();
  if (mark.line < 0) return std::string(path);
  return std::string(path) + " (line " + std::to_string(mark.line + 1) + ")";
}

void require_map(const YAML::Node& node, std::string_view path) {
  if (!node.IsMap()) throw ConfigError(where(node, path) + ": expected a mapping");
}

void reject_unknown(const YAML::Node& node, std::string_view path, std::initializer_list<std::string_view> allowed) {
  require_map(node, path);
  for (const auto& entry : node) {
    const auto key = entry.first.as<std::string>();
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(where(entry.first, path) + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
T scalar(const YAML::Node& node, std::string_view path) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(where(node, path) + ": invalid value");
  }
}

template <typename T>
void read(const YAML::Node& parent, const char* key, std::string_view path, T& out) {
  if (const auto node = parent[key]) out = scalar<T>(node, std::string(path) + "." + key);
}

std::size_t read_count(const YAML::Node& parent, const char* key, std::string_view path, std::size_t fallback) {
  const auto node = parent[key];
  if (!node) return fallback;
  const auto value = scalar<long long>(node, std::string(path) + "." + key);
  if (value < 0) throw ConfigError(where(node, std::string(path) + "." + key) + ": must be non-negative");
  return static_cast<std::size_t>(value);
}

std::vector<std::string> read_list(const YAML::Node& node, std::string_view path) {
  if (!node.IsSequence()) throw ConfigError(where(node, path) + ": expected a list");
  std::vector<std::string> out;
  for (const auto& item : node) out.push_back(scalar<std::string>(item, path));
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  const std::filesystem::path p(value);
  return p.is_absolute() ? p : base / p;
}

template <typename Fn>
auto translating(std::string_view path, Fn&& fn) {
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string(path) + ": " + e.what());
  }
}

DatasetConfig parse_dataset(const YAML::Node& node, std::string_view path, const std::filesystem::path& base) {
  reject_unknown(node, path, {"name", "path", "format", "source", "schema", "malformed_tolerance"});
  DatasetConfig d;
  if (!node["name"] || !node["path"]) throw ConfigError(where(node, path) + ": name and path are required");
  d.name = scalar<std::string>(node["name"], std::string(path) + ".name");
  d.path = resolve(base, scalar<std::string>(node["path"], std::string(path) + ".path"));
  if (const auto f = node["format"]) {
    d.load.format = translating(path, [&] { return parse_dataset_format(scalar<std::string>(f, path)); });
  } else if (d.path.extension() == ".jsonl") {
    d.load.format = DatasetFormat::kJsonl;
  }
  if (const auto s = node["source"]) {
    d.load.default_source = translating(path, [&] { return parse_source(scalar<std::string>(s, path)); });
  }
  read(node, "malformed_tolerance", path, d.load.malformed_tolerance);
  const auto schema = node["schema"];
  if (!schema) throw ConfigError(where(node, path) + ": schema is required");
  const std::string spath = std::string(path) + ".schema";
  reject_unknown(schema, spath, {"text", "id", "rating", "binary_label", "source"});
  if (!schema["text"]) throw ConfigError(where(schema, spath) + ": text column is required");
  d.load.schema.text = scalar<std::string>(schema["text"], spath);
  auto optional_column = [&](const char* key, std::optional<std::string>& out) {
    if (const auto n = schema[key]) out = scalar<std::string>(n, spath + "." + key);
  };
  optional_column("id", d.load.schema.id);
  optional_column("rating", d.load.schema.rating);
  optional_column("binary_label", d.load.schema.binary_label);
  optional_column("source", d.load.schema.source);
  return d;
}

void parse_labeler(const YAML::Node& node, LabelerSection& out, const std::filesystem::path& base) {
  reject_unknown(node, "labeler",
                 {"mode", "endpoint", "model", "api_key_env", "system_prompt", "bootstrap_size", "temperature",
                  "max_retries", "balance_tolerance", "max_attachment_chars", "timeout_s", "lexicon"});
  read(node, "mode", "labeler", out.mode);
  read(node, "endpoint", "labeler", out.chat.endpoint);
  read(node, "model", "labeler", out.chat.model);
  read(node, "api_key_env", "labeler", out.chat.api_key_env);
  read(node, "system_prompt", "labeler", out.chat.system_prompt);
  out.chat.bootstrap_size = read_count(node, "bootstrap_size", "labeler", out.chat.bootstrap_size);
  read(node, "temperature", "labeler", out.chat.temperature);
  read(node, "max_retries", "labeler", out.chat.max_retries);
  read(node, "balance_tolerance", "labeler", out.chat.balance_tolerance);
  out.chat.max_attachment_chars = read_count(node, "max_attachment_chars", "labeler", out.chat.max_attachment_chars);
  out.chat.timeout = std::chrono::seconds(read_count(node, "timeout_s", "labeler", out.chat.timeout.count()));
  if (const auto lex = node["lexicon"]) out.lexicon = resolve(base, scalar<std::string>(lex, "labeler.lexicon"));
}

void parse_features(const YAML::Node& node, FeaturesConfig& out, const std::filesystem::path& base) {
  reject_unknown(node, "features", {"max_features", "embedders"});
  if (const auto mf = node["max_features"]) {
    const auto value = scalar<long long>(mf, "features.max_features");
    // 0 keeps the full vocabulary.
    if (value < 0) throw ConfigError("features.max_features: must be non-negative");
    out.max_features = value == 0 ? std::nullopt : std::optional<std::size_t>(static_cast<std::size_t>(value));
  }
  if (const auto list = node["embedders"]) {
    if (!list.IsSequence()) throw ConfigError(where(list, "features.embedders") + ": expected a list");
    for (const auto& e : list) {
      const std::string path = "features.embedders";
      reject_unknown(e, path, {"name", "base_url", "model", "batch_size", "timeout_s", "cache_path", "max_in_flight"});
      EmbedderConfig cfg;
      if (!e["name"]) throw ConfigError(where(e, path) + ": name is required");
      cfg.key = scalar<std::string>(e["name"], path);
      read(e, "base_url", path, cfg.backend.base_url);
      read(e, "model", path, cfg.backend.model);
      if (cfg.backend.model.empty()) cfg.backend.model = cfg.key;
      cfg.backend.batch_size = read_count(e, "batch_size", path, cfg.backend.batch_size);
      cfg.backend.timeout = std::chrono::seconds(read_count(e, "timeout_s", path, cfg.backend.timeout.count()));
      cfg.backend.max_in_flight = read_count(e, "max_in_flight", path, cfg.backend.max_in_flight);
      if (const auto c = e["cache_path"]) cfg.backend.cache_path = resolve(base, scalar<std::string>(c, path));
      out.embedders.push_back(std::move(cfg));
    }
  }
}

void parse_classifier_params(const YAML::Node& node, ClassifierSpec& spec) {
  reject_unknown(node, "classifier_params", {"svm", "lr", "dt", "rf"});
  if (const auto n = node["svm"]) {
    reject_unknown(n, "classifier_params.svm", {"C", "gamma", "tolerance", "max_passes"});
    read(n, "C", "classifier_params.svm", spec.svm.C);
    if (const auto g = n["gamma"]) {
      const auto text = scalar<std::string>(g, "classifier_params.svm.gamma");
      if (text != "scale") spec.svm.gamma = scalar<double>(g, "classifier_params.svm.gamma");
    }
    read(n, "tolerance", "classifier_params.svm", spec.svm.tolerance);
    spec.svm.max_passes = read_count(n, "max_passes", "classifier_params.svm", spec.svm.max_passes);
  }
  if (const auto n = node["lr"]) {
    reject_unknown(n, "classifier_params.lr",
                   {"C", "l2_strength", "learning_rate", "max_epochs", "tolerance", "normalize_rows"});
    read(n, "C", "classifier_params.lr", spec.logistic.inverse_regularization);
    if (const auto l2 = n["l2_strength"]) spec.logistic.l2_strength = scalar<double>(l2, "classifier_params.lr");
    read(n, "learning_rate", "classifier_params.lr", spec.logistic.learning_rate);
    spec.logistic.max_epochs = read_count(n, "max_epochs", "classifier_params.lr", spec.logistic.max_epochs);
    read(n, "tolerance", "classifier_params.lr", spec.logistic.tolerance);
    read(n, "normalize_rows", "classifier_params.lr", spec.logistic.normalize_rows);
  }
  if (const auto n = node["dt"]) {
    reject_unknown(n, "classifier_params.dt", {"max_depth", "min_samples_split", "max_features"});
    spec.tree.max_depth = read_count(n, "max_depth", "classifier_params.dt", spec.tree.max_depth);
    spec.tree.min_samples_split =
        read_count(n, "min_samples_split", "classifier_params.dt", spec.tree.min_samples_split);
    spec.tree.max_features = read_count(n, "max_features", "classifier_params.dt", spec.tree.max_features);
  }
  if (const auto n = node["rf"]) {
    reject_unknown(n, "classifier_params.rf",
                   {"n_trees", "max_depth", "min_samples_split", "feature_subsample", "bootstrap"});
    spec.forest.n_trees = read_count(n, "n_trees", "classifier_params.rf", spec.forest.n_trees);
    spec.forest.max_depth = read_count(n, "max_depth", "classifier_params.rf", spec.forest.max_depth);
    spec.forest.min_samples_split =
        read_count(n, "min_samples_split", "classifier_params.rf", spec.forest.min_samples_split);
    spec.forest.feature_subsample =
        read_count(n, "feature_subsample", "classifier_params.rf", spec.forest.feature_subsample);
    read(n, "bootstrap", "classifier_params.rf", spec.forest.bootstrap);
  }
}

void parse_eval(const YAML::Node& node, EvalConfig& out) {
  reject_unknown(node, "eval", {"k", "stratified", "repeats", "sample_n", "featurizers", "baseline_featurizers"});
  out.k = read_count(node, "k", "eval", out.k);
  read(node, "stratified", "eval", out.stratified);
  out.repeats = read_count(node, "repeats", "eval", out.repeats);
  out.sample_n = read_count(node, "sample_n", "eval", out.sample_n);
  if (const auto f = node["featurizers"]) out.featurizers = read_list(f, "eval.featurizers");
  if (const auto f = node["baseline_featurizers"]) out.baseline_featurizers = read_list(f, "eval.baseline_featurizers");
}

}  // namespace

const EmbedderConfig* RunConfig::find_embedder(std::string_view key) const {
  for (const auto& e : features.embedders) {
    if (e.key == key) return &e;
  }
  return nullptr;
}

void RunConfig::validate() const {
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
  std::set<std::string> names;
  for (const auto& d : datasets) {
    if (d.name.empty() || d.name.find_first_of("/\\") != std::string::npos || d.name == "." || d.name == "..") {
      throw ConfigError("dataset name '" + d.name + "' is not a valid directory name");
    }
    if (!names.insert(d.name).second) throw ConfigError("duplicate dataset name '" + d.name + "'");
    if (d.load.malformed_tolerance < 0.0 || d.load.malformed_tolerance > 1.0) {
      throw ConfigError("dataset '" + d.name + "': malformed_tolerance must lie in [0, 1]");
    }
  }
  if (!(preprocess.english_threshold > 0.0 && preprocess.english_threshold <= 1.0)) {
    throw ConfigError("preprocess.english_threshold must lie in (0, 1]");
  }
  if (!(preprocess.tail_fraction >= 0.0 && preprocess.tail_fraction < 0.5)) {
    throw ConfigError("preprocess.tail_fraction must lie in [0, 0.5)");
  }
  if (preprocess.experimental_n < 1) throw ConfigError("preprocess.experimental_n must be >= 1");
  if (labeler.mode != "escs" && labeler.mode != "mock") {
    throw ConfigError("labeler.mode must be 'escs' or 'mock'");
  }
  try {
    labeler.chat.validate();
    for (const auto& e : features.embedders) e.backend.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (eval.k < 2) throw ConfigError("eval.k must be >= 2 (cross-validation needs a held-out fold)");
  if (eval.repeats < 1) throw ConfigError("eval.repeats must be >= 1");
  if (eval.sample_n < 1) throw ConfigError("eval.sample_n must be >= 1");
  if (eval.k > preprocess.experimental_n) throw ConfigError("eval.k exceeds preprocess.experimental_n");
  if (classifiers.empty()) throw ConfigError("classifiers must not be empty");
  auto check_featurizers = [&](const std::vector<std::string>& keys, const char* what) {
    if (keys.empty()) throw ConfigError(std::string(what) + " must not be empty");
    for (const auto& key : keys) {
      if (key != "bow" && key != "tfidf" && !find_embedder(key)) {
        throw ConfigError(std::string(what) + ": unknown featurizer '" + key + "' (declare it under features.embedders)");
      }
    }
  };
  check_featurizers(eval.featurizers, "eval.featurizers");
  check_featurizers(eval.baseline_featurizers, "eval.baseline_featurizers");
  std::set<std::string> embedder_keys;
  for (const auto& e : features.embedders) {
    if (e.key == "bow" || e.key == "tfidf") throw ConfigError("embedder name '" + e.key + "' is reserved");
    if (!embedder_keys.insert(e.key).second) throw ConfigError("duplicate embedder '" + e.key + "'");
  }
}

RunConfig parse_run_config(std::string_view yaml, const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config is not valid YAML: ") + e.what());
  }
  RunConfig cfg;
  if (root.IsNull()) throw ConfigError("config is empty");
  reject_unknown(root, "config",
                 {"seed", "output_dir", "jobs", "datasets", "preprocess", "labeler", "features", "classifiers",
                  "classifier_params", "eval"});
  if (const auto s = root["seed"]) cfg.seed = scalar<std::uint64_t>(s, "seed");
  cfg.output_dir = root["output_dir"] ? resolve(base_dir, scalar<std::string>(root["output_dir"], "output_dir"))
                                      : resolve(base_dir, cfg.output_dir.string());
  cfg.jobs = read_count(root, "jobs", "config", cfg.jobs);

  const auto datasets = root["datasets"];
  if (!datasets || !datasets.IsSequence() || datasets.size() == 0) {
    throw ConfigError("datasets: at least one dataset is required");
  }
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    cfg.datasets.push_back(parse_dataset(datasets[i], "datasets[" + std::to_string(i) + "]", base_dir));
  }
  if (const auto p = root["preprocess"]) {
    reject_unknown(p, "preprocess", {"english_threshold", "tail_fraction", "domain_corpus_n", "experimental_n"});
    read(p, "english_threshold", "preprocess", cfg.preprocess.english_threshold);
    read(p, "tail_fraction", "preprocess", cfg.preprocess.tail_fraction);
    cfg.preprocess.domain_corpus_n = read_count(p, "domain_corpus_n", "preprocess", cfg.preprocess.domain_corpus_n);
    cfg.preprocess.experimental_n = read_count(p, "experimental_n", "preprocess", cfg.preprocess.experimental_n);
  }
  if (const auto l = root["labeler"]) parse_labeler(l, cfg.labeler, base_dir);
  if (const auto f = root["features"]) parse_features(f, cfg.features, base_dir);
  if (const auto c = root["classifiers"]) {
    cfg.classifiers.clear();
    for (const auto& name : read_list(c, "classifiers")) {
      cfg.classifiers.push_back(translating("classifiers", [&] { return parse_classifier_kind(name); }));
    }
  }
  if (const auto c = root["classifier_params"]) parse_classifier_params(c, cfg.classifier_params);
  if (const auto e = root["eval"]) parse_eval(e, cfg.eval);
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("config file not found: " + path.string());
  const std::string text = read_file(path);
  RunConfig cfg = parse_run_config(text, path.parent_path());
  for (const auto& d : cfg.datasets) {
    if (!std::filesystem::exists(d.path)) throw IoError("input file not found: " + d.path.string());
  }
  if (cfg.labeler.lexicon && !std::filesystem::exists(*cfg.labeler.lexicon)) {
    throw IoError("lexicon file not found: " + cfg.labeler.lexicon->string());
  }
  return cfg;
}

}  // namespace revsent::cli
