#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace revsent {

enum class Backend { kBow, kTfidf, kEmbedding };

std::string_view to_string(Backend backend);

struct FeatureVector {
  std::vector<double> values;
  Backend backend = Backend::kBow;

  std::size_t dim() const { return values.size(); }
};

// Token statistics of a fitting corpus. Indices are assigned in lexical
// token order and are dense in [0, size()).
class Vocabulary {
 public:
  std::size_t size() const { return tokens_.size(); }
  std::size_t document_count() const { return document_count_; }
  std::optional<std::size_t> max_features() const { return max_features_; }

  std::optional<std::size_t> index_of(std::string_view token) const;
  const std::string& token(std::size_t index) const { return tokens_.at(index); }
  std::size_t document_frequency(std::size_t index) const { return document_frequency_.at(index); }
  // Smoothed idf: ln((1 + N) / (1 + df)) + 1.
  double idf(std::size_t index) const { return idf_.at(index); }

  friend Vocabulary fit_vocabulary(std::span<const std::string> corpus, std::optional<std::size_t> max_features);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::size_t> document_frequency_;
  std::vector<double> idf_;
  std::size_t document_count_ = 0;
  std::optional<std::size_t> max_features_;
};

// With max_features, keeps the most frequent tokens by total corpus count,
// breaking ties alphabetically. Throws std::invalid_argument on an empty corpus.
Vocabulary fit_vocabulary(std::span<const std::string> corpus,
                          std::optional<std::size_t> max_features = std::nullopt);

// Raw in-vocabulary token counts.
FeatureVector transform_bow(std::string_view text, const Vocabulary& vocab);

// Raw count times smoothed idf, L2-normalized; all-zero vectors stay zero.
FeatureVector transform_tfidf(std::string_view text, const Vocabulary& vocab);

// ---------------------------------------------------------------------------

// A fit-then-transform text featurizer. fit() sees training texts only.
class Featurizer {
 public:
  virtual ~Featurizer() = default;
  virtual void fit(std::span<const std::string> texts) = 0;
  virtual std::vector<FeatureVector> transform(std::span<const std::string> texts) const = 0;
  // Pipeline tag, e.g. "BoW", "TFIDF", "URSLM-RoBERTa".
  virtual std::string name() const = 0;
};

class BowFeaturizer final : public Featurizer {
 public:
  explicit BowFeaturizer(std::optional<std::size_t> max_features = 5000) : max_features_(max_features) {}
  void fit(std::span<const std::string> texts) override;
  std::vector<FeatureVector> transform(std::span<const std::string> texts) const override;
  std::string name() const override { return "BoW"; }
  const Vocabulary& vocabulary() const { return vocab_; }

 private:
  std::optional<std::size_t> max_features_;
  Vocabulary vocab_;
  bool fitted_ = false;
};

class TfidfFeaturizer final : public Featurizer {
 public:
  explicit TfidfFeaturizer(std::optional<std::size_t> max_features = 5000) : max_features_(max_features) {}
  void fit(std::span<const std::string> texts) override;
  std::vector<FeatureVector> transform(std::span<const std::string> texts) const override;
  std::string name() const override { return "TFIDF"; }
  const Vocabulary& vocabulary() const { return vocab_; }

 private:
  std::optional<std::size_t> max_features_;
  Vocabulary vocab_;
  bool fitted_ = false;
};

}  // namespace revsent
