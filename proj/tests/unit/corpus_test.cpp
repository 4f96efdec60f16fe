#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "revsent/corpus.hpp"
#include "revsent/error.hpp"
#include "revsent/io.hpp"
#include "synthetic.hpp"

namespace revsent {
namespace {

LoadOptions csv_options(std::string text, std::optional<std::string> rating = std::nullopt) {
  LoadOptions o;
  o.schema.text = std::move(text);
  o.schema.rating = std::move(rating);
  return o;
}

std::vector<RawReview> raw_of_lengths(const std::vector<std::size_t>& lengths) {
  std::vector<RawReview> out;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    out.push_back({"r" + std::to_string(i), testing::filler_text(lengths[i], i + 1), 5, std::nullopt, Source::kOther});
  }
  return out;
}

std::vector<LabeledReview> labeled(std::size_t n, std::size_t positives) {
  std::vector<LabeledReview> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({"id" + std::to_string(i), "text " + std::to_string(i), i < positives ? 1 : 0});
  return out;
}

// --- load ------------------------------------------------------------------

TEST(LoadDataset, CsvMapsColumns) {
  const auto r = parse_dataset("review,stars\ngood,5\nbad,1\nok,3\n", csv_options("review", "stars"));
  ASSERT_EQ(r.reviews.size(), 3u);
  EXPECT_EQ(r.reviews[0].text, "good");
  EXPECT_EQ(r.reviews[1].rating, 1);
  EXPECT_EQ(r.reviews[2].id, "3");  // row number when no id column
}

TEST(LoadDataset, JsonlEmptyTextDroppedAndCounted) {
  LoadOptions o;
  o.format = DatasetFormat::kJsonl;
  o.schema.text = "text";
  o.schema.binary_label = "label";
  const auto r = parse_dataset("{\"text\":\"fine\",\"label\":1}\n{\"text\":\"\",\"label\":0}\n", o);
  EXPECT_EQ(r.reviews.size(), 1u);
  EXPECT_EQ(r.dropped_empty, 1u);
  EXPECT_EQ(r.reviews[0].binary_label, 1);
}

TEST(LoadDataset, MissingMappedColumn) {
  try {
    parse_dataset("review,score\ngood,5\n", csv_options("review", "stars"));
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("missing column 'stars'"), std::string::npos) << e.what();
  }
}

TEST(LoadDataset, MissingFileNamesPath) {
  try {
    load_dataset("/no/such/reviews.csv", csv_options("text"));
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("/no/such/reviews.csv"), std::string::npos);
  }
}

TEST(LoadDataset, MalformedToleranceFraction) {
  const std::string csv = "text,stars\na,5\nb,7\nc,4\nd,x\n";  // 2 of 4 malformed
  EXPECT_THROW(parse_dataset(csv, csv_options("text", "stars")), IoError);
  auto o = csv_options("text", "stars");
  o.malformed_tolerance = 0.5;
  const auto r = parse_dataset(csv, o);
  EXPECT_EQ(r.reviews.size(), 2u);
  EXPECT_EQ(r.malformed, 2u);
  EXPECT_EQ(r.warnings.size(), 2u);
}

TEST(LoadDataset, SourceColumnAndDefault) {
  auto o = csv_options("text");
  o.schema.source = "src";
  o.default_source = Source::kService;
  const auto r = parse_dataset("text,src\na,retail\nb,cultural\n", o);
  EXPECT_EQ(r.reviews[0].source, Source::kRetail);
  EXPECT_EQ(r.reviews[1].source, Source::kCultural);
  EXPECT_EQ(parse_dataset("text\na\n", csv_options("text")).reviews[0].source, Source::kOther);
}

// --- filter / trim / standardize ---------------------------------------------

TEST(FilterNonEnglish, SpecExamples) {
  const std::vector<RawReview> in = {{"1", "great product", 5, {}, {}}, {"2", "很好", 5, {}, {}}};
  const auto r = filter_non_english(in);
  ASSERT_EQ(r.kept.size(), 1u);
  EXPECT_EQ(r.kept[0].text, "great product");
  EXPECT_EQ(r.removed, 1u);
  EXPECT_EQ(filter_non_english(std::vector<RawReview>{}).removed, 0u);
}

TEST(TrimLengthExtremes, DistinctLengthsOneToHundred) {
  std::vector<std::size_t> lengths;
  for (std::size_t i = 1; i <= 100; ++i) lengths.push_back(i);
  const auto in = raw_of_lengths(lengths);
  const auto out = trim_length_extremes<RawReview>(in, 0.05);
  ASSERT_EQ(out.size(), 90u);
  EXPECT_EQ(token_count(out.front().text), 6u);  // input order preserved
  EXPECT_EQ(token_count(out.back().text), 95u);
}

TEST(TrimLengthExtremes, IdentityAndFloorRule) {
  const auto in = raw_of_lengths(std::vector<std::size_t>(10, 7));
  EXPECT_EQ(trim_length_extremes<RawReview>(in, 0.0).size(), 10u);
  EXPECT_EQ(trim_length_extremes<RawReview>(in, 0.05).size(), 10u);
  EXPECT_THROW(trim_length_extremes<RawReview>(in, 0.5), std::invalid_argument);
  EXPECT_THROW(trim_length_extremes<RawReview>(in, -0.1), std::invalid_argument);
}

TEST(TrimLengthExtremes, TiesBrokenByInputOrder) {
  // Lengths 5,5,5,5 and one cut per side: the first 5 is "shortest", the last is "longest".
  const auto in = raw_of_lengths({5, 5, 5, 5});
  const auto out = trim_length_extremes<RawReview>(in, 0.25);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].id, "r1");
  EXPECT_EQ(out[1].id, "r2");
}

TEST(TrimLengthExtremes, OutputSizeProperty) {
  for (std::size_t n : {0u, 1u, 7u, 19u, 20u, 101u, 333u}) {
    std::vector<std::size_t> lengths;
    for (std::size_t i = 0; i < n; ++i) lengths.push_back(1 + (i * 37) % 50);
    const auto in = raw_of_lengths(lengths);
    for (double f : {0.0, 0.01, 0.05, 0.1, 0.25, 0.49}) {
      EXPECT_EQ(trim_length_extremes<RawReview>(in, f).size(), n - 2 * static_cast<std::size_t>(std::floor(n * f + 1e-9)))
          << "n=" << n << " f=" << f;
    }
  }
  EXPECT_EQ(tail_cut_count(100, 0.05), 5u);
}

TEST(StandardizeLabels, RatingMapExhaustive) {
  for (int rating = 1; rating <= 5; ++rating) {
    const auto out = standardize_labels({"x", "t", rating, std::nullopt, Source::kOther});
    if (rating == 3) {
      EXPECT_FALSE(out.has_value());
    } else {
      ASSERT_TRUE(out.has_value());
      EXPECT_EQ(out->polarity, rating >= 4 ? 1 : 0);
    }
  }
}

TEST(StandardizeLabels, BinaryPassthroughAndErrors) {
  EXPECT_EQ(standardize_labels({"x", "t", std::nullopt, 1, Source::kOther})->polarity, 1);
  EXPECT_EQ(standardize_labels({"x", "t", std::nullopt, 0, Source::kOther})->polarity, 0);
  EXPECT_THROW(standardize_labels({"x", "t", std::nullopt, std::nullopt, Source::kOther}), std::invalid_argument);
  EXPECT_THROW(standardize_labels({"x", "t", 6, std::nullopt, Source::kOther}), std::invalid_argument);
  std::size_t excluded = 0;
  const std::vector<RawReview> in = {{"a", "t", 3, {}, {}}, {"b", "t", 4, {}, {}}, {"c", "t", 3, {}, {}}};
  EXPECT_EQ(standardize_all(in, &excluded).size(), 1u);
  EXPECT_EQ(excluded, 2u);
}

// --- split / stats / folds ---------------------------------------------------

TEST(SampleSplit, DisjointSizesAndDeterministic) {
  const auto all = labeled(20000, 10000);
  const auto a = sample_split<LabeledReview>(all, 10000, 5000, 11);
  const auto b = sample_split<LabeledReview>(all, 10000, 5000, 11);
  ASSERT_EQ(a.domain_corpus.size(), 10000u);
  ASSERT_EQ(a.experimental.size(), 5000u);
  std::set<std::string> domain;
  for (const auto& r : a.domain_corpus) domain.insert(r.id);
  for (const auto& r : a.experimental) EXPECT_FALSE(domain.contains(r.id));
  EXPECT_EQ(to_canonical_jsonl(a.experimental), to_canonical_jsonl(b.experimental));
  EXPECT_EQ(to_canonical_jsonl(a.domain_corpus), to_canonical_jsonl(b.domain_corpus));
  const auto c = sample_split<LabeledReview>(all, 10000, 5000, 12);
  EXPECT_NE(to_canonical_jsonl(a.experimental), to_canonical_jsonl(c.experimental));
}

TEST(SampleSplit, InsufficientData) {
  const auto all = labeled(10, 5);
  try {
    sample_split<LabeledReview>(all, 8, 5, 1);
    FAIL();
  } catch (const StageError& e) {
    EXPECT_NE(std::string(e.what()).find("insufficient data"), std::string::npos);
  }
}

TEST(ComputeStats, LabelDistributionTripAdvisorShape) {
  const auto stats = compute_stats(std::span<const LabeledReview>(labeled(100, 83)));
  ASSERT_TRUE(stats.label_distribution.has_value());
  EXPECT_NEAR(stats.label_distribution->positive_fraction, 0.83, 1e-12);
  EXPECT_NEAR(stats.label_distribution->negative_fraction, 0.17, 1e-12);
  EXPECT_NEAR(stats.label_distribution->positive_fraction + stats.label_distribution->negative_fraction, 1.0, 1e-9);
}

TEST(ComputeStats, UnlabeledAndSingleReview) {
  const std::vector<RawReview> unlabeled = {{"a", "one two three four five six seven", {}, {}, {}}};
  const auto stats = compute_stats(std::span<const RawReview>(unlabeled));
  EXPECT_FALSE(stats.label_distribution.has_value());
  ASSERT_EQ(stats.length_histogram.size(), 1u);
  EXPECT_EQ(stats.length_histogram[0], (std::pair<std::size_t, std::size_t>{0, 1}));
  EXPECT_EQ(length_histogram_csv(stats), "bucket,count\n0-9,1\n");
}

TEST(ComputeStats, HistogramTotalsEqualCount) {
  const auto corpus = testing::synthetic_corpus({.n = 777, .seed = 4});
  const auto stats = compute_stats(std::span<const LabeledReview>(corpus));
  std::size_t total = 0;
  std::size_t expected_lower = 0;
  for (const auto& [lower, count] : stats.length_histogram) {
    EXPECT_EQ(lower, expected_lower);  // contiguous buckets
    expected_lower += kHistogramBucketWidth;
    total += count;
  }
  EXPECT_EQ(total, 777u);
  EXPECT_EQ(stats.count, 777u);
}

TEST(MakeFolds, FiveThousandIntoFiveFolds) {
  const auto data = labeled(5000, 2500);
  const auto plan = make_folds(data, {5, 3, false});
  EXPECT_EQ(plan.fold_sizes(), (std::vector<std::size_t>{1000, 1000, 1000, 1000, 1000}));
}

TEST(MakeFolds, SevenIntoFive) {
  const auto plan = make_folds(labeled(7, 3), {5, 3, false});
  auto sizes = plan.fold_sizes();
  std::sort(sizes.rbegin(), sizes.rend());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{2, 2, 1, 1, 1}));
}

TEST(MakeFolds, PartitionDeterminismAndErrors) {
  const auto data = labeled(103, 40);
  const auto a = make_folds(data, {4, 9, false});
  const auto b = make_folds(data, {4, 9, false});
  EXPECT_EQ(a.assignments, b.assignments);
  EXPECT_EQ(a.assignments.size(), data.size());
  for (const auto& r : data) EXPECT_LT(a.fold_of(r.id), 4u);
  const auto sizes = a.fold_sizes();
  EXPECT_LE(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()), 1u);
  EXPECT_NE(make_folds(data, {4, 10, false}).assignments, a.assignments);

  EXPECT_THROW(make_folds(data, {1, 9, false}), std::invalid_argument);
  EXPECT_THROW(make_folds(labeled(3, 1), {5, 9, false}), std::invalid_argument);
  auto dup = labeled(10, 5);
  dup[3].id = dup[2].id;
  EXPECT_THROW(make_folds(dup, {2, 9, false}), std::invalid_argument);
}

TEST(MakeFolds, StratifiedBalancesClasses) {
  const auto data = labeled(100, 20);
  const auto plan = make_folds(data, {5, 1, true});
  std::vector<std::size_t> positives(5, 0);
  for (const auto& r : data) positives[plan.fold_of(r.id)] += r.polarity;
  for (const auto p : positives) EXPECT_EQ(p, 4u);
}

TEST(CanonicalJsonl, RoundTrip) {
  auto data = testing::synthetic_corpus({.n = 50, .seed = 8});
  data[0].text = "quote \" comma , newline \n unicode é";
  data[1].source = Source::kCultural;
  const auto back = parse_canonical_jsonl(to_canonical_jsonl(data));
  ASSERT_EQ(back.size(), data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_EQ(back[i].id, data[i].id);
    EXPECT_EQ(back[i].text, data[i].text);
    EXPECT_EQ(back[i].polarity, data[i].polarity);
    EXPECT_EQ(back[i].source, data[i].source);
  }
}

}  // namespace
}  // namespace revsent
