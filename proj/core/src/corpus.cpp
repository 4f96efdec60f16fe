#include "revsent/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "revsent/error.hpp"
#include "revsent/io.hpp"
#include "revsent/random.hpp"

namespace revsent {

std::string_view to_string(Source source) {
  switch (source) {
    case Source::kRetail: return "retail";
    case Source::kService: return "service";
    case Source::kCultural: return "cultural";
    case Source::kOther: return "other";
  }
  return "other";
}

Source parse_source(std::string_view name) {
  if (name == "retail") return Source::kRetail;
  if (name == "service") return Source::kService;
  if (name == "cultural") return Source::kCultural;
  if (name == "other") return Source::kOther;
  throw ConfigError("unknown review source '" + std::string(name) + "'");
}

DatasetFormat parse_dataset_format(std::string_view name) {
  if (name == "csv") return DatasetFormat::kCsv;
  if (name == "jsonl") return DatasetFormat::kJsonl;
  throw ConfigError("unknown dataset format '" + std::string(name) + "' (expected csv or jsonl)");
}

namespace {

std::optional<int> parse_int_field(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  // Accept "4" and "4.0" style star ratings.
  const auto value = parse_double(text);
  if (!value || std::floor(*value) != *value) throw IoError("not an integer: '" + std::string(text) + "'");
  return static_cast<int>(*value);
}

std::optional<int> json_int_field(const Json& record, const std::string& key) {
  const auto it = record.find(key);
  if (it == record.end() || it->is_null()) return std::nullopt;
  if (it->is_number_integer()) return it->get<int>();
  if (it->is_number()) {
    const double v = it->get<double>();
    if (std::floor(v) != v) throw IoError("non-integer value for '" + key + "'");
    return static_cast<int>(v);
  }
  if (it->is_string()) return parse_int_field(it->get<std::string>());
  if (it->is_boolean()) return it->get<bool>() ? 1 : 0;
  throw IoError("unexpected type for '" + key + "'");
}

void check_label_ranges(const RawReview& review) {
  if (review.rating && (*review.rating < 1 || *review.rating > 5)) {
    throw IoError("rating out of range 1-5: " + std::to_string(*review.rating));
  }
  if (review.binary_label && *review.binary_label != 0 && *review.binary_label != 1) {
    throw IoError("binary label outside {0,1}: " + std::to_string(*review.binary_label));
  }
}

void finish_load(LoadResult& result, std::size_t total, const LoadOptions& options,
                 std::string_view origin) {
  if (total == 0) return;
  const double share = static_cast<double>(result.malformed) / static_cast<double>(total);
  if (share > options.malformed_tolerance) {
    std::string message = std::string(origin) + ": " + std::to_string(result.malformed) + " of " +
                          std::to_string(total) + " records malformed";
    if (!result.warnings.empty()) message += " (first: " + result.warnings.front() + ")";
    throw IoError(message);
  }
}

LoadResult parse_csv_dataset(std::string_view content, const LoadOptions& options,
                             std::string_view origin) {
  const CsvTable table = parse_csv(content);
  auto column = [&](const std::optional<std::string>& name) -> std::optional<std::size_t> {
    if (!name) return std::nullopt;
    const auto it = std::find(table.header.begin(), table.header.end(), *name);
    if (it == table.header.end()) {
      throw IoError(std::string(origin) + ": missing column '" + *name + "'");
    }
    return static_cast<std::size_t>(it - table.header.begin());
  };
  const auto text_col = column(options.schema.text);
  const auto id_col = column(options.schema.id);
  const auto rating_col = column(options.schema.rating);
  const auto label_col = column(options.schema.binary_label);
  const auto source_col = column(options.schema.source);

  LoadResult result;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    try {
      if (row.size() != table.header.size()) {
        throw IoError("expected " + std::to_string(table.header.size()) + " fields, found " +
                      std::to_string(row.size()));
      }
      RawReview review;
      review.id = id_col ? row[*id_col] : std::to_string(r + 1);
      review.text = std::string(trim(row[*text_col]));
      if (rating_col) review.rating = parse_int_field(row[*rating_col]);
      if (label_col) review.binary_label = parse_int_field(row[*label_col]);
      review.source = source_col ? parse_source(trim(row[*source_col])) : options.default_source;
      check_label_ranges(review);
      if (review.text.empty()) {
        ++result.dropped_empty;
        continue;
      }
      result.reviews.push_back(std::move(review));
    } catch (const Error& e) {
      ++result.malformed;
      result.warnings.push_back("line " + std::to_string(table.row_lines[r]) + ": " + e.what());
    }
  }
  finish_load(result, table.rows.size(), options, origin);
  return result;
}

LoadResult parse_jsonl_dataset(std::string_view content, const LoadOptions& options,
                               std::string_view origin) {
  LoadResult result;
  std::size_t total = 0;
  std::size_t line_no = 0;
  bool checked_columns = false;
  std::size_t start = 0;
  while (start < content.size()) {
    auto end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    ++line_no;
    std::string_view line = trim(content.substr(start, end - start));
    start = end + 1;
    if (line.empty()) continue;
    ++total;
    Json record;
    try {
      record = Json::parse(line);
      if (!record.is_object()) throw IoError("record is not a JSON object");
    } catch (const std::exception& e) {
      ++result.malformed;
      result.warnings.push_back("line " + std::to_string(line_no) + ": " + e.what());
      continue;
    }
    if (!checked_columns) {
      // The first well-formed record defines the available keys.
      for (const auto* key : {&options.schema.id, &options.schema.rating,
                               &options.schema.binary_label, &options.schema.source}) {
        if (*key && !record.contains(**key)) {
          throw IoError(std::string(origin) + ": missing column '" + **key + "'");
        }
      }
      if (!record.contains(options.schema.text)) {
        throw IoError(std::string(origin) + ": missing column '" + options.schema.text + "'");
      }
      checked_columns = true;
    }
    try {
      RawReview review;
      if (options.schema.id) {
        const auto& id = record.at(*options.schema.id);
        review.id = id.is_string() ? id.get<std::string>() : id.dump();
      } else {
        review.id = std::to_string(total);
      }
      const auto text_it = record.find(options.schema.text);
      if (text_it == record.end() || text_it->is_null()) {
        review.text.clear();
      } else if (!text_it->is_string()) {
        throw IoError("text field is not a string");
      } else {
        review.text = std::string(trim(text_it->get<std::string>()));
      }
      if (options.schema.rating) review.rating = json_int_field(record, *options.schema.rating);
      if (options.schema.binary_label) {
        review.binary_label = json_int_field(record, *options.schema.binary_label);
      }
      review.source = options.default_source;
      if (options.schema.source) {
        const auto it = record.find(*options.schema.source);
        if (it != record.end() && it->is_string()) review.source = parse_source(it->get<std::string>());
      }
      check_label_ranges(review);
      if (review.text.empty()) {
        ++result.dropped_empty;
        continue;
      }
      result.reviews.push_back(std::move(review));
    } catch (const std::exception& e) {
      ++result.malformed;
      result.warnings.push_back("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  finish_load(result, total, options, origin);
  return result;
}

}  // namespace

LoadResult parse_dataset(std::string_view content, const LoadOptions& options, std::string_view origin) {
  if (options.schema.text.empty()) throw ConfigError("schema map must name the text column");
  switch (options.format) {
    case DatasetFormat::kCsv: return parse_csv_dataset(content, options, origin);
    case DatasetFormat::kJsonl: return parse_jsonl_dataset(content, options, origin);
  }
  throw ConfigError("unsupported dataset format");
}

LoadResult load_dataset(const std::filesystem::path& path, const LoadOptions& options) {
  if (!std::filesystem::exists(path)) throw IoError("input file not found: " + path.string());
  return parse_dataset(read_file(path), options, path.string());
}

// ---------------------------------------------------------------------------

FilterResult filter_non_english(std::span<const RawReview> reviews, const EnglishHeuristic& heuristic) {
  FilterResult result;
  for (const auto& review : reviews) {
    if (looks_english(review.text, heuristic)) {
      result.kept.push_back(review);
    } else {
      ++result.removed;
    }
  }
  return result;
}

std::size_t tail_cut_count(std::size_t n, double tail_fraction) {
  if (!(tail_fraction >= 0.0 && tail_fraction < 0.5)) {
    throw std::invalid_argument("tail_fraction must lie in [0, 0.5)");
  }
  // The epsilon absorbs representation error, e.g. 100 * 0.05.
  return static_cast<std::size_t>(std::floor(static_cast<double>(n) * tail_fraction + 1e-9));
}

template <typename Review>
std::vector<Review> trim_length_extremes(std::span<const Review> reviews, double tail_fraction) {
  const std::size_t cut = tail_cut_count(reviews.size(), tail_fraction);
  if (cut == 0) return {reviews.begin(), reviews.end()};

  std::vector<std::size_t> lengths(reviews.size());
  for (std::size_t i = 0; i < reviews.size(); ++i) lengths[i] = token_count(reviews[i].text);
  std::vector<std::size_t> order(reviews.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return lengths[a] < lengths[b]; });

  std::vector<bool> keep(reviews.size(), false);
  for (std::size_t i = cut; i < order.size() - cut; ++i) keep[order[i]] = true;
  std::vector<Review> kept;
  kept.reserve(order.size() - 2 * cut);
  for (std::size_t i = 0; i < reviews.size(); ++i) {
    if (keep[i]) kept.push_back(reviews[i]);
  }
  return kept;
}

template std::vector<RawReview> trim_length_extremes(std::span<const RawReview>, double);
template std::vector<LabeledReview> trim_length_extremes(std::span<const LabeledReview>, double);

std::optional<LabeledReview> standardize_labels(const RawReview& review) {
  int polarity = 0;
  if (review.binary_label) {
    if (*review.binary_label != 0 && *review.binary_label != 1) {
      throw std::invalid_argument("binary label outside {0,1} for review " + review.id);
    }
    polarity = *review.binary_label;
  } else if (review.rating) {
    const int rating = *review.rating;
    if (rating < 1 || rating > 5) {
      throw std::invalid_argument("rating outside 1-5 for review " + review.id);
    }
    if (rating == 3) return std::nullopt;
    polarity = rating >= 4 ? 1 : 0;
  } else {
    throw std::invalid_argument("review " + review.id + " has neither rating nor binary label");
  }
  return LabeledReview{review.id, review.text, polarity, review.source};
}

std::vector<LabeledReview> standardize_all(std::span<const RawReview> reviews, std::size_t* excluded) {
  std::vector<LabeledReview> out;
  out.reserve(reviews.size());
  std::size_t dropped = 0;
  for (const auto& review : reviews) {
    if (auto labeled = standardize_labels(review)) {
      out.push_back(std::move(*labeled));
    } else {
      ++dropped;
    }
  }
  if (excluded) *excluded = dropped;
  return out;
}

template <typename Review>
SplitResult<Review> sample_split(std::span<const Review> reviews, std::size_t domain_corpus_n,
                                 std::size_t experimental_n, std::uint64_t seed) {
  if (domain_corpus_n + experimental_n > reviews.size()) {
    throw StageError("insufficient data: requested " + std::to_string(domain_corpus_n) + " + " +
                     std::to_string(experimental_n) + " reviews from " +
                     std::to_string(reviews.size()));
  }
  auto order = shuffled_indices(reviews.size(), seed);
  std::vector<std::size_t> domain(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(domain_corpus_n));
  std::vector<std::size_t> experimental(
      order.begin() + static_cast<std::ptrdiff_t>(domain_corpus_n),
      order.begin() + static_cast<std::ptrdiff_t>(domain_corpus_n + experimental_n));
  std::sort(domain.begin(), domain.end());
  std::sort(experimental.begin(), experimental.end());

  SplitResult<Review> result;
  result.domain_corpus.reserve(domain.size());
  result.experimental.reserve(experimental.size());
  for (const auto i : domain) result.domain_corpus.push_back(reviews[i]);
  for (const auto i : experimental) result.experimental.push_back(reviews[i]);
  return result;
}

template SplitResult<RawReview> sample_split(std::span<const RawReview>, std::size_t, std::size_t,
                                             std::uint64_t);
template SplitResult<LabeledReview> sample_split(std::span<const LabeledReview>, std::size_t,
                                                 std::size_t, std::uint64_t);

// ---------------------------------------------------------------------------

namespace {

CorpusStats stats_from(const std::vector<std::size_t>& lengths, std::size_t positives,
                       std::size_t labeled) {
  CorpusStats stats;
  stats.count = lengths.size();
  if (!lengths.empty()) {
    const auto [lo, hi] = std::minmax_element(lengths.begin(), lengths.end());
    const std::size_t first = *lo / kHistogramBucketWidth;
    const std::size_t last = *hi / kHistogramBucketWidth;
    stats.length_histogram.reserve(last - first + 1);
    for (std::size_t b = first; b <= last; ++b) stats.length_histogram.emplace_back(b * kHistogramBucketWidth, 0);
    for (const auto length : lengths) ++stats.length_histogram[length / kHistogramBucketWidth - first].second;
  }
  if (labeled > 0) {
    LabelDistribution dist;
    dist.labeled = labeled;
    dist.positive_fraction = static_cast<double>(positives) / static_cast<double>(labeled);
    dist.negative_fraction = static_cast<double>(labeled - positives) / static_cast<double>(labeled);
    stats.label_distribution = dist;
  }
  return stats;
}

}  // namespace

CorpusStats compute_stats(std::span<const LabeledReview> reviews) {
  std::vector<std::size_t> lengths;
  lengths.reserve(reviews.size());
  std::size_t positives = 0;
  for (const auto& review : reviews) {
    lengths.push_back(token_count(review.text));
    positives += review.polarity == 1 ? 1 : 0;
  }
  return stats_from(lengths, positives, reviews.size());
}

CorpusStats compute_stats(std::span<const RawReview> reviews) {
  std::vector<std::size_t> lengths;
  lengths.reserve(reviews.size());
  std::size_t positives = 0;
  std::size_t labeled = 0;
  for (const auto& review : reviews) {
    lengths.push_back(token_count(review.text));
    if (!review.rating && !review.binary_label) continue;
    if (const auto std_label = standardize_labels(review)) {
      ++labeled;
      positives += std_label->polarity == 1 ? 1 : 0;
    }
  }
  return stats_from(lengths, positives, labeled);
}

std::string length_histogram_csv(const CorpusStats& stats) {
  std::string out = "bucket,count\n";
  for (const auto& [bucket, count] : stats.length_histogram) {
    out += std::to_string(bucket) + "-" + std::to_string(bucket + kHistogramBucketWidth - 1) + "," +
           std::to_string(count) + "\n";
  }
  return out;
}

std::string label_distribution_csv(const CorpusStats& stats) {
  std::string out = "label,fraction\n";
  if (stats.label_distribution) {
    out += "positive," + format_double(stats.label_distribution->positive_fraction) + "\n";
    out += "negative," + format_double(stats.label_distribution->negative_fraction) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------

std::size_t FoldPlan::fold_of(const std::string& id) const {
  const auto it = assignments.find(id);
  if (it == assignments.end()) throw std::out_of_range("id not in fold plan: " + id);
  return it->second;
}

std::vector<std::size_t> FoldPlan::fold_sizes() const {
  std::vector<std::size_t> sizes(k, 0);
  for (const auto& [id, fold] : assignments) ++sizes.at(fold);
  return sizes;
}

FoldPlan make_folds(std::span<const LabeledReview> reviews, const FoldOptions& options) {
  if (options.k < 2) throw std::invalid_argument("cross-validation requires k >= 2");
  if (reviews.size() < options.k) {
    throw std::invalid_argument("k = " + std::to_string(options.k) + " exceeds dataset size " +
                                std::to_string(reviews.size()));
  }
  std::vector<std::size_t> order;
  if (options.stratified) {
    // Shuffle within each class, then deal positives and negatives in turn
    // around the folds so each fold gets a near-equal share of both.
    std::vector<std::size_t> pos;
    std::vector<std::size_t> neg;
    for (std::size_t i = 0; i < reviews.size(); ++i) (reviews[i].polarity == 1 ? pos : neg).push_back(i);
    Rng rng(options.seed);
    rng.shuffle(pos);
    rng.shuffle(neg);
    order = std::move(pos);
    order.insert(order.end(), neg.begin(), neg.end());
  } else {
    order = shuffled_indices(reviews.size(), options.seed);
  }

  FoldPlan plan;
  plan.k = options.k;
  plan.seed = options.seed;
  plan.assignments.reserve(reviews.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const auto [it, inserted] = plan.assignments.emplace(reviews[order[pos]].id, pos % options.k);
    if (!inserted) throw std::invalid_argument("duplicate review id: " + it->first);
  }
  return plan;
}

// ---------------------------------------------------------------------------

std::string to_canonical_jsonl(std::span<const LabeledReview> reviews) {
  std::string out;
  for (const auto& review : reviews) {
    Json record = {{"id", review.id}, {"text", review.text}, {"polarity", review.polarity},
                   {"source", to_string(review.source)}};
    out += record.dump(-1, ' ', false, Json::error_handler_t::replace);
    out += '\n';
  }
  return out;
}

std::string to_canonical_jsonl(std::span<const RawReview> reviews) {
  std::string out;
  for (const auto& review : reviews) {
    Json record = {{"id", review.id}, {"text", review.text}};
    if (review.binary_label) {
      record["polarity"] = *review.binary_label;
    } else if (review.rating && *review.rating != 3) {
      record["polarity"] = *review.rating >= 4 ? 1 : 0;
    }
    record["source"] = to_string(review.source);
    out += record.dump(-1, ' ', false, Json::error_handler_t::replace);
    out += '\n';
  }
  return out;
}

std::vector<LabeledReview> parse_canonical_jsonl(std::string_view content) {
  std::vector<LabeledReview> reviews;
  std::unordered_set<std::string> seen;
  for (const auto& record : parse_jsonl(content)) {
    try {
      LabeledReview review;
      review.id = record.at("id").get<std::string>();
      review.text = record.at("text").get<std::string>();
      const auto& polarity = record.at("polarity");
      review.polarity = polarity.get<int>();
      if (review.polarity != 0 && review.polarity != 1) throw IoError("polarity outside {0,1}");
      if (const auto it = record.find("source"); it != record.end()) {
        review.source = parse_source(it->get<std::string>());
      }
      if (!seen.insert(review.id).second) throw IoError("duplicate id " + review.id);
      reviews.push_back(std::move(review));
    } catch (const Json::exception& e) {
      throw IoError(std::string("canonical dataset record invalid: ") + e.what());
    } catch (const ConfigError& e) {
      throw IoError(e.what());
    }
  }
  return reviews;
}

std::vector<LabeledReview> read_canonical_dataset(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("input file not found: " + path.string());
  return parse_canonical_jsonl(read_file(path));
}

}  // namespace revsent
