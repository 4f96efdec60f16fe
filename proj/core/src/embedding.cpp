#include "revsent/embedding.hpp"

#include <cmath>
#include <fstream>
#include <future>
#include <unordered_map>

#include <httplib.h>

#include "revsent/error.hpp"

namespace revsent {

void EmbeddingBackendConfig::validate() const {
  if (batch_size < 1) throw ConfigError("embedding batch_size must be >= 1");
  if (model.empty()) throw ConfigError("embedding model name must be set");
  if (max_in_flight < 1) throw ConfigError("embedding max_in_flight must be >= 1");
  split_url(base_url);
}

namespace {

class HttpEmbeddingTransport final : public EmbeddingTransport {
 public:
  HttpEmbeddingTransport(UrlParts url, std::chrono::seconds timeout) : url_(std::move(url)), timeout_(timeout) {
    if (url_.path == "/") url_.path.clear();
  }

  Json post_embed(const Json& request) override {
    auto client = connect();
    return parse(client.Post(url_.path + "/embed", request.dump(), "application/json"), "/embed");
  }

  Json get_health() override {
    auto client = connect();
    return parse(client.Get(url_.path + "/health"), "/health");
  }

 private:
  httplib::Client connect() const {
    httplib::Client client(url_.scheme_host_port);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    return client;
  }

  static Json parse(const httplib::Result& result, const char* route) {
    if (!result) {
      const auto error = result.error();
      if (error == httplib::Error::Read || error == httplib::Error::Write ||
          error == httplib::Error::ConnectionTimeout) {
        throw TransportError(std::string("embedding service timeout on ") + route);
      }
      throw TransportError(std::string("embedding service unreachable (") + route +
                           "): " + httplib::to_string(error));
    }
    if (result->status != 200) {
      throw StageError(std::string("embedding service ") + route + " returned HTTP " +
                       std::to_string(result->status) + ": " + result->body);
    }
    try {
      return Json::parse(result->body);
    } catch (const Json::parse_error&) {
      throw StageError(std::string("embedding service ") + route + " returned non-JSON body");
    }
  }

  UrlParts url_;
  std::chrono::seconds timeout_;
};

}  // namespace

std::unique_ptr<EmbeddingTransport> make_http_embedding_transport(const std::string& base_url,
                                                                  std::chrono::seconds timeout) {
  return std::make_unique<HttpEmbeddingTransport>(split_url(base_url), timeout);
}

// ---------------------------------------------------------------------------

EmbeddingCache::EmbeddingCache(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.empty() || !std::filesystem::exists(path_)) return;
  for (const auto& record : parse_jsonl(read_file(path_))) {
    try {
      auto vector = record.at("vector").get<std::vector<double>>();
      if (vector.size() != record.at("dim").get<std::size_t>()) {
        throw IoError("embedding cache record dim does not match vector length");
      }
      entries_[{record.at("model").get<std::string>(), record.at("hash").get<std::string>()}] = std::move(vector);
    } catch (const Json::exception& e) {
      throw IoError(path_.string() + ": invalid cache record: " + e.what());
    }
  }
}

std::optional<std::vector<double>> EmbeddingCache::find(const std::string& model, const std::string& hash) const {
  std::shared_lock lock(mutex_);
  const auto it = entries_.find({model, hash});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void EmbeddingCache::insert(const std::string& model, const std::string& hash, const std::vector<double>& vector) {
  std::unique_lock lock(mutex_);
  const auto [it, inserted] = entries_.try_emplace({model, hash}, vector);
  if (!inserted || path_.empty()) return;
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  if (!out) throw IoError("cannot append to embedding cache " + path_.string());
  const Json record = {{"hash", hash}, {"model", model}, {"dim", vector.size()}, {"vector", vector}};
  out << record.dump() << '\n';
}

std::size_t EmbeddingCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

std::optional<std::size_t> EmbeddingCache::dim_for(const std::string& model) const {
  std::shared_lock lock(mutex_);
  const auto it = entries_.lower_bound({model, std::string()});
  if (it == entries_.end() || it->first.first != model) return std::nullopt;
  return it->second.size();
}

// ---------------------------------------------------------------------------

EmbeddingClient::EmbeddingClient(EmbeddingBackendConfig config, std::shared_ptr<EmbeddingTransport> transport,
                                 std::shared_ptr<EmbeddingCache> cache)
    : config_(std::move(config)), transport_(std::move(transport)), cache_(std::move(cache)) {
  config_.validate();
  if (!cache_) cache_ = std::make_shared<EmbeddingCache>(config_.cache_path);
  dim_ = cache_->dim_for(config_.model);
}

std::optional<std::size_t> EmbeddingClient::dim() const {
  std::lock_guard lock(dim_mutex_);
  return dim_;
}

void EmbeddingClient::check_dim(std::size_t dim) {
  std::lock_guard lock(dim_mutex_);
  if (!dim_) {
    dim_ = dim;
  } else if (*dim_ != dim) {
    throw StageError("embedding dimension mismatch: service reported " + std::to_string(dim) +
                     " after earlier responses of dimension " + std::to_string(*dim_));
  }
}

std::vector<double> EmbeddingClient::checked_row(const Json& row, std::size_t dim) const {
  if (!row.is_array() || row.size() != dim) {
    throw StageError("embedding row length differs from reported dim " + std::to_string(dim));
  }
  std::vector<double> values;
  values.reserve(dim);
  for (const auto& v : row) {
    if (!v.is_number()) throw StageError("embedding row contains a non-number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw StageError("embedding row contains a non-finite value");
    values.push_back(x);
  }
  return values;
}

std::vector<FeatureVector> EmbeddingClient::embed_remote(std::span<const std::string> texts) {
  if (texts.size() > config_.batch_size) {
    throw std::invalid_argument("embed_remote: batch of " + std::to_string(texts.size()) +
                                " exceeds configured batch size " + std::to_string(config_.batch_size));
  }
  std::vector<std::string> hashes;
  hashes.reserve(texts.size());
  std::vector<std::optional<std::vector<double>>> found(texts.size());
  // Unique uncached texts, in first-occurrence order.
  std::vector<std::string> to_send;
  std::unordered_map<std::string, std::size_t> send_index;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    hashes.push_back(EmbeddingCache::content_hash(texts[i]));
    found[i] = cache_->find(config_.model, hashes[i]);
    if (!found[i] && send_index.emplace(hashes[i], to_send.size()).second) to_send.push_back(texts[i]);
  }

  if (!to_send.empty()) {
    const Json request = {{"model", config_.model}, {"texts", to_send}};
    ++network_calls_;
    const Json response = transport_->post_embed(request);
    std::size_t dim = 0;
    try {
      if (const auto it = response.find("model");
          it != response.end() && it->get<std::string>() != config_.model) {
        throw StageError("embedding service answered for model '" + it->get<std::string>() + "', expected '" +
                         config_.model + "'");
      }
      dim = response.at("dim").get<std::size_t>();
      if (response.at("vectors").size() != to_send.size()) {
        throw StageError("embedding service returned " + std::to_string(response.at("vectors").size()) +
                         " vectors for " + std::to_string(to_send.size()) + " texts");
      }
    } catch (const Json::exception& e) {
      throw StageError(std::string("malformed embedding response: ") + e.what());
    }
    check_dim(dim);
    const auto& rows = response.at("vectors");
    for (std::size_t j = 0; j < to_send.size(); ++j) {
      cache_->insert(config_.model, EmbeddingCache::content_hash(to_send[j]), checked_row(rows[j], dim));
    }
    for (std::size_t i = 0; i < texts.size(); ++i) {
      if (!found[i]) found[i] = cache_->find(config_.model, hashes[i]);
    }
  }

  std::vector<FeatureVector> out;
  out.reserve(texts.size());
  for (auto& vector : found) out.push_back({std::move(*vector), Backend::kEmbedding});
  return out;
}

std::vector<FeatureVector> EmbeddingClient::embed(std::span<const std::string> texts) {
  std::vector<FeatureVector> out(texts.size());
  const std::size_t batch = config_.batch_size;
  std::vector<std::pair<std::size_t, std::future<std::vector<FeatureVector>>>> in_flight;
  auto drain = [&](std::size_t keep) {
    while (in_flight.size() > keep) {
      auto [offset, future] = std::move(in_flight.front());
      in_flight.erase(in_flight.begin());
      auto vectors = future.get();
      std::move(vectors.begin(), vectors.end(), out.begin() + static_cast<std::ptrdiff_t>(offset));
    }
  };
  for (std::size_t offset = 0; offset < texts.size(); offset += batch) {
    const auto chunk = texts.subspan(offset, std::min(batch, texts.size() - offset));
    if (config_.max_in_flight == 1) {
      auto vectors = embed_remote(chunk);
      std::move(vectors.begin(), vectors.end(), out.begin() + static_cast<std::ptrdiff_t>(offset));
      continue;
    }
    in_flight.emplace_back(offset, std::async(std::launch::async, [this, chunk] { return embed_remote(chunk); }));
    drain(config_.max_in_flight - 1);
  }
  drain(0);
  return out;
}

EmbeddingHealth EmbeddingClient::health() {
  const Json body = transport_->get_health();
  try {
    return {body.at("status").get<std::string>(), body.at("model").get<std::string>(),
            body.at("dim").get<std::size_t>()};
  } catch (const Json::exception& e) {
    throw StageError(std::string("malformed health response: ") + e.what());
  }
}

std::vector<FeatureVector> EmbeddingFeaturizer::transform(std::span<const std::string> texts) const {
  return client_->embed(texts);
}

}  // namespace revsent
