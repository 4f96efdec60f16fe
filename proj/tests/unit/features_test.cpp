#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "revsent/error.hpp"
#include "revsent/features.hpp"
#include "revsent/matrix.hpp"
#include "synthetic.hpp"

namespace revsent {
namespace {

double norm(const FeatureVector& v) {
  return std::sqrt(std::inner_product(v.values.begin(), v.values.end(), v.values.begin(), 0.0));
}

TEST(Vocabulary, LexicalIndicesAndDocumentFrequency) {
  const std::vector<std::string> corpus = {"b a", "a c a"};
  const auto vocab = fit_vocabulary(corpus);
  ASSERT_EQ(vocab.size(), 3u);
  EXPECT_EQ(vocab.token(0), "a");
  EXPECT_EQ(vocab.token(2), "c");
  EXPECT_EQ(vocab.document_frequency(*vocab.index_of("a")), 2u);
  EXPECT_EQ(vocab.document_count(), 2u);
  EXPECT_FALSE(vocab.index_of("zzz").has_value());
  EXPECT_THROW(fit_vocabulary(std::vector<std::string>{}), std::invalid_argument);
}

TEST(Vocabulary, SmoothedIdf) {
  const std::vector<std::string> corpus = {"a b", "a"};
  const auto vocab = fit_vocabulary(corpus);
  EXPECT_NEAR(vocab.idf(*vocab.index_of("b")), std::log(1.5) + 1.0, 1e-12);
  EXPECT_NEAR(vocab.idf(*vocab.index_of("b")), 1.405465, 1e-6);
  EXPECT_NEAR(vocab.idf(*vocab.index_of("a")), 1.0, 1e-12);
}

TEST(Vocabulary, MaxFeaturesKeepsMostFrequentThenAlphabetical) {
  const std::vector<std::string> corpus = {"x x x y y z", "w z"};
  const auto vocab = fit_vocabulary(corpus, 3);
  ASSERT_EQ(vocab.size(), 3u);  // x:3, y:2, z:2, w:1
  EXPECT_TRUE(vocab.index_of("x"));
  EXPECT_TRUE(vocab.index_of("y"));
  EXPECT_TRUE(vocab.index_of("z"));
  EXPECT_FALSE(vocab.index_of("w"));
  const auto tie = fit_vocabulary(std::vector<std::string>{"d c b a"}, 2);
  EXPECT_EQ(tie.token(0), "a");
  EXPECT_EQ(tie.token(1), "b");
}

TEST(Transform, BowCountsInVocabularyOnly) {
  const std::vector<std::string> corpus = {"good room", "bad room"};
  const auto vocab = fit_vocabulary(corpus);
  const auto v = transform_bow("Room, room and a GOOD view", vocab);
  EXPECT_EQ(v.dim(), 3u);
  EXPECT_EQ(v.values[*vocab.index_of("room")], 2.0);
  EXPECT_EQ(v.values[*vocab.index_of("good")], 1.0);
  EXPECT_EQ(v.values[*vocab.index_of("bad")], 0.0);
  EXPECT_EQ(v.backend, Backend::kBow);
}

TEST(Transform, TfidfUnitNormAndZeroVector) {
  const auto corpus = testing::synthetic_corpus({.n = 200, .seed = 6});
  std::vector<std::string> texts;
  for (const auto& r : corpus) texts.push_back(r.text);
  const auto vocab = fit_vocabulary(texts);
  for (const auto& text : texts) EXPECT_NEAR(norm(transform_tfidf(text, vocab)), 1.0, 1e-12);
  const auto empty = transform_tfidf("qqqq zzzz", vocab);
  EXPECT_EQ(norm(empty), 0.0);
  EXPECT_EQ(empty.dim(), vocab.size());
}

TEST(Transform, TfidfInvariantToRepeatingTheDocument) {
  const std::vector<std::string> corpus = {"a b c", "a d", "b e e"};
  const auto vocab = fit_vocabulary(corpus);
  const auto once = transform_tfidf("a b e", vocab);
  const auto twice = transform_tfidf("a b e a b e", vocab);
  for (std::size_t i = 0; i < once.dim(); ++i) EXPECT_NEAR(once.values[i], twice.values[i], 1e-12);
}

TEST(Transform, TfidfValuesMatchHandComputation) {
  const std::vector<std::string> corpus = {"a b", "a"};
  const auto vocab = fit_vocabulary(corpus);
  const auto v = transform_tfidf("a b b", vocab);
  const double wa = 1.0 * 1.0;
  const double wb = 2.0 * (std::log(1.5) + 1.0);
  const double n = std::hypot(wa, wb);
  EXPECT_NEAR(v.values[*vocab.index_of("a")], wa / n, 1e-12);
  EXPECT_NEAR(v.values[*vocab.index_of("b")], wb / n, 1e-12);
}

TEST(Featurizers, FitOnTrainOnlyAndUseBeforeFit) {
  BowFeaturizer bow(std::nullopt);
  TfidfFeaturizer tfidf(std::nullopt);
  const std::vector<std::string> probe = {"alpha"};
  EXPECT_THROW(bow.transform(probe), StageError);
  EXPECT_THROW(tfidf.transform(probe), StageError);
  const std::vector<std::string> train = {"alpha beta", "beta gamma"};
  bow.fit(train);
  tfidf.fit(train);
  const std::vector<std::string> test = {"delta alpha"};
  EXPECT_EQ(bow.transform(test)[0].values, (std::vector<double>{1, 0, 0}));
  EXPECT_FALSE(bow.vocabulary().index_of("delta"));
  EXPECT_EQ(tfidf.transform(test)[0].dim(), 3u);
  EXPECT_EQ(bow.name(), "BoW");
  EXPECT_EQ(tfidf.name(), "TFIDF");
}

TEST(FeatureMatrix, FromVectorsAndSelectRows) {
  const std::vector<FeatureVector> vectors = {{{1, 2}, Backend::kBow}, {{3, 4}, Backend::kBow}};
  const auto m = FeatureMatrix::from_vectors(vectors);
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m(1, 0), 3.0);
  const std::vector<std::size_t> pick = {1, 1, 0};
  const auto s = m.select_rows(pick);
  EXPECT_EQ(s.rows(), 3u);
  EXPECT_EQ(s(2, 1), 2.0);
  EXPECT_THROW(FeatureMatrix::from_rows({{1, 2}, {3}}), std::invalid_argument);
  const std::vector<FeatureVector> ragged = {{{1}, Backend::kBow}, {{1, 2}, Backend::kBow}};
  EXPECT_THROW(FeatureMatrix::from_vectors(ragged), std::invalid_argument);
}

}  // namespace
}  // namespace revsent
