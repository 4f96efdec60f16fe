#include "revsent/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_set>

#include "revsent/error.hpp"
#include "revsent/text.hpp"

namespace revsent {

std::string_view to_string(Backend backend) {
  switch (backend) {
    case Backend::kBow: return "bow";
    case Backend::kTfidf: return "tfidf";
    case Backend::kEmbedding: return "embedding";
  }
  return "bow";
}

std::optional<std::size_t> Vocabulary::index_of(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Vocabulary fit_vocabulary(std::span<const std::string> corpus, std::optional<std::size_t> max_features) {
  if (corpus.empty()) throw std::invalid_argument("fit_vocabulary: empty corpus");
  struct Counts {
    std::size_t total = 0;
    std::size_t documents = 0;
  };
  std::map<std::string, Counts> counts;  // ordered: lexical index assignment
  for (const auto& text : corpus) {
    std::unordered_set<std::string> seen;
    for (auto& token : tokenize(text)) {
      auto& c = counts[token];
      ++c.total;
      if (seen.insert(std::move(token)).second) ++c.documents;
    }
  }

  std::vector<const std::pair<const std::string, Counts>*> kept;
  kept.reserve(counts.size());
  for (const auto& entry : counts) kept.push_back(&entry);
  if (max_features && kept.size() > *max_features) {
    // counts is already alphabetical, so a stable sort by frequency keeps
    // alphabetical order among equal frequencies.
    std::stable_sort(kept.begin(), kept.end(),
                     [](const auto* a, const auto* b) { return a->second.total > b->second.total; });
    kept.resize(*max_features);
    std::sort(kept.begin(), kept.end(), [](const auto* a, const auto* b) { return a->first < b->first; });
  }

  Vocabulary vocab;
  vocab.document_count_ = corpus.size();
  vocab.max_features_ = max_features;
  vocab.tokens_.reserve(kept.size());
  for (const auto* entry : kept) {
    vocab.index_.emplace(entry->first, vocab.tokens_.size());
    vocab.tokens_.push_back(entry->first);
    vocab.document_frequency_.push_back(entry->second.documents);
    vocab.idf_.push_back(std::log((1.0 + static_cast<double>(corpus.size())) /
                                  (1.0 + static_cast<double>(entry->second.documents))) +
                         1.0);
  }
  return vocab;
}

FeatureVector transform_bow(std::string_view text, const Vocabulary& vocab) {
  FeatureVector out{std::vector<double>(vocab.size(), 0.0), Backend::kBow};
  for (const auto& token : tokenize(text)) {
    if (const auto index = vocab.index_of(token)) out.values[*index] += 1.0;
  }
  return out;
}

FeatureVector transform_tfidf(std::string_view text, const Vocabulary& vocab) {
  FeatureVector out = transform_bow(text, vocab);
  out.backend = Backend::kTfidf;
  double norm_sq = 0.0;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    if (out.values[i] == 0.0) continue;
    out.values[i] *= vocab.idf(i);
    norm_sq += out.values[i] * out.values[i];
  }
  if (norm_sq > 0.0) {
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (auto& v : out.values) v *= inv;
  }
  return out;
}

// ---------------------------------------------------------------------------

void BowFeaturizer::fit(std::span<const std::string> texts) {
  vocab_ = fit_vocabulary(texts, max_features_);
  fitted_ = true;
}

std::vector<FeatureVector> BowFeaturizer::transform(std::span<const std::string> texts) const {
  if (!fitted_) throw StageError("BoW featurizer used before fit");
  std::vector<FeatureVector> out;
  out.reserve(texts.size());
  for (const auto& text : texts) out.push_back(transform_bow(text, vocab_));
  return out;
}

void TfidfFeaturizer::fit(std::span<const std::string> texts) {
  vocab_ = fit_vocabulary(texts, max_features_);
  fitted_ = true;
}

std::vector<FeatureVector> TfidfFeaturizer::transform(std::span<const std::string> texts) const {
  if (!fitted_) throw StageError("TF-IDF featurizer used before fit");
  std::vector<FeatureVector> out;
  out.reserve(texts.size());
  for (const auto& text : texts) out.push_back(transform_tfidf(text, vocab_));
  return out;
}

}  // namespace revsent
