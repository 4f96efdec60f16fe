#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "revsent/text.hpp"

namespace revsent {

enum class Source { kRetail, kService, kCultural, kOther };

std::string_view to_string(Source source);
// Throws ConfigError for unknown names.
Source parse_source(std::string_view name);

struct RawReview {
  std::string id;
  std::string text;
  std::optional<int> rating;        // 1..5 star rating
  std::optional<int> binary_label;  // 0 negative, 1 positive
  Source source = Source::kOther;
};

struct LabeledReview {
  std::string id;
  std::string text;
  int polarity = 0;  // 0 negative, 1 positive
  Source source = Source::kOther;
};

// ---------------------------------------------------------------------------
// Loading

enum class DatasetFormat { kCsv, kJsonl };

DatasetFormat parse_dataset_format(std::string_view name);

// Maps RawReview fields to input column / key names. Only `text` is required.
// Without an `id` mapping, ids are "<row index>" in file order (1-based).
struct SchemaMap {
  std::string text;
  std::optional<std::string> id;
  std::optional<std::string> rating;
  std::optional<std::string> binary_label;
  std::optional<std::string> source;  // per-record source column, overrides default
};

struct LoadOptions {
  DatasetFormat format = DatasetFormat::kCsv;
  SchemaMap schema;
  Source default_source = Source::kOther;
  // Largest tolerated share of malformed records before the load fails.
  double malformed_tolerance = 0.0;
};

struct LoadResult {
  std::vector<RawReview> reviews;
  std::size_t dropped_empty = 0;
  std::size_t malformed = 0;
  std::vector<std::string> warnings;
};

LoadResult load_dataset(const std::filesystem::path& path, const LoadOptions& options);
// Same as load_dataset but from in-memory content; `origin` is used in messages.
LoadResult parse_dataset(std::string_view content, const LoadOptions& options,
                         std::string_view origin = "<memory>");

// ---------------------------------------------------------------------------
// Preprocessing

struct FilterResult {
  std::vector<RawReview> kept;
  std::size_t removed = 0;
};

FilterResult filter_non_english(std::span<const RawReview> reviews,
                                const EnglishHeuristic& heuristic = {});

// Drops floor(n * tail_fraction) shortest and as many longest reviews by
// token count. Ties are ordered by input position; survivors keep input order.
template <typename Review>
std::vector<Review> trim_length_extremes(std::span<const Review> reviews, double tail_fraction);

// Number removed from each tail by trim_length_extremes.
std::size_t tail_cut_count(std::size_t n, double tail_fraction);

std::optional<LabeledReview> standardize_labels(const RawReview& review);

// Standardizes every review, dropping the excluded (neutral) ones.
std::vector<LabeledReview> standardize_all(std::span<const RawReview> reviews,
                                           std::size_t* excluded = nullptr);

template <typename Review>
struct SplitResult {
  std::vector<Review> domain_corpus;
  std::vector<Review> experimental;
};

// Draws a random domain corpus, then an experimental set from the remainder.
// Both subsets keep input order.
template <typename Review>
SplitResult<Review> sample_split(std::span<const Review> reviews, std::size_t domain_corpus_n,
                                 std::size_t experimental_n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Statistics

inline constexpr std::size_t kHistogramBucketWidth = 10;

struct LabelDistribution {
  double positive_fraction = 0.0;
  double negative_fraction = 0.0;
  std::size_t labeled = 0;
};

struct CorpusStats {
  std::size_t count = 0;
  // (bucket lower bound, count), contiguous from the lowest to the highest
  // observed bucket. Bucket b covers token counts [b, b + width).
  std::vector<std::pair<std::size_t, std::size_t>> length_histogram;
  std::optional<LabelDistribution> label_distribution;
};

CorpusStats compute_stats(std::span<const LabeledReview> reviews);
// Raw reviews count as labeled when standardize_labels yields a polarity.
CorpusStats compute_stats(std::span<const RawReview> reviews);

// CSV documents: "bucket,count" and "label,fraction".
std::string length_histogram_csv(const CorpusStats& stats);
std::string label_distribution_csv(const CorpusStats& stats);

// ---------------------------------------------------------------------------
// Folds

struct FoldPlan {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::unordered_map<std::string, std::size_t> assignments;

  std::size_t fold_of(const std::string& id) const;
  std::vector<std::size_t> fold_sizes() const;
};

struct FoldOptions {
  std::size_t k = 5;
  std::uint64_t seed = 0;
  bool stratified = false;
};

FoldPlan make_folds(std::span<const LabeledReview> reviews, const FoldOptions& options);

// ---------------------------------------------------------------------------
// Canonical JSON-lines dataset: {id, text, polarity?, source}

std::string to_canonical_jsonl(std::span<const LabeledReview> reviews);
std::string to_canonical_jsonl(std::span<const RawReview> reviews);
std::vector<LabeledReview> parse_canonical_jsonl(std::string_view content);
std::vector<LabeledReview> read_canonical_dataset(const std::filesystem::path& path);

}  // namespace revsent
