#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "revsent/features.hpp"
#include "revsent/io.hpp"

namespace revsent {

// Client side of the embedding service protocol:
//   POST /embed   {"model": str, "texts": [str...]}
//              -> {"model": str, "dim": int, "vectors": [[real...]...]}
//   GET  /health  -> {"status": "ok", "model": str, "dim": int}
struct EmbeddingBackendConfig {
  std::string base_url = "http://127.0.0.1:8000";
  std::string model;
  std::size_t batch_size = 32;
  std::chrono::seconds timeout{60};
  std::filesystem::path cache_path;  // empty: in-memory cache only
  std::size_t max_in_flight = 1;

  void validate() const;
};

class EmbeddingTransport {
 public:
  virtual ~EmbeddingTransport() = default;
  virtual Json post_embed(const Json& request) = 0;
  virtual Json get_health() = 0;
};

std::unique_ptr<EmbeddingTransport> make_http_embedding_transport(const std::string& base_url,
                                                                  std::chrono::seconds timeout);

// (model, content hash) -> vector, backed by an append-only JSON-lines file
// of {hash, model, dim, vector} records. Concurrent readers, serialized writers.
class EmbeddingCache {
 public:
  EmbeddingCache() = default;
  explicit EmbeddingCache(std::filesystem::path path);

  static std::string content_hash(std::string_view text) { return sha256_hex(text); }

  std::optional<std::vector<double>> find(const std::string& model, const std::string& hash) const;
  void insert(const std::string& model, const std::string& hash, const std::vector<double>& vector);
  std::size_t size() const;
  // Dimension of any cached vector for this model.
  std::optional<std::size_t> dim_for(const std::string& model) const;

 private:
  std::filesystem::path path_;
  mutable std::shared_mutex mutex_;
  std::map<std::pair<std::string, std::string>, std::vector<double>> entries_;
};

struct EmbeddingHealth {
  std::string status;
  std::string model;
  std::size_t dim = 0;
};

class EmbeddingClient {
 public:
  EmbeddingClient(EmbeddingBackendConfig config, std::shared_ptr<EmbeddingTransport> transport,
                  std::shared_ptr<EmbeddingCache> cache = nullptr);

  // One request for at most batch_size texts; cached texts are not sent.
  std::vector<FeatureVector> embed_remote(std::span<const std::string> texts);
  // Any number of texts, split into batch_size requests.
  std::vector<FeatureVector> embed(std::span<const std::string> texts);

  EmbeddingHealth health();

  std::optional<std::size_t> dim() const;
  std::size_t network_calls() const { return network_calls_.load(); }
  const EmbeddingBackendConfig& config() const { return config_; }

 private:
  std::vector<double> checked_row(const Json& row, std::size_t dim) const;
  void check_dim(std::size_t dim);

  EmbeddingBackendConfig config_;
  std::shared_ptr<EmbeddingTransport> transport_;
  std::shared_ptr<EmbeddingCache> cache_;
  mutable std::mutex dim_mutex_;
  std::optional<std::size_t> dim_;
  std::atomic<std::size_t> network_calls_{0};
};

// Featurizer over a remote embedding service. fit() is a no-op: the encoder
// is fixed, so nothing is learned from training texts.
class EmbeddingFeaturizer final : public Featurizer {
 public:
  EmbeddingFeaturizer(std::string display_name, std::shared_ptr<EmbeddingClient> client)
      : display_name_(std::move(display_name)), client_(std::move(client)) {}
  void fit(std::span<const std::string>) override {}
  std::vector<FeatureVector> transform(std::span<const std::string> texts) const override;
  std::string name() const override { return display_name_; }

 private:
  std::string display_name_;
  std::shared_ptr<EmbeddingClient> client_;
};

}  // namespace revsent
