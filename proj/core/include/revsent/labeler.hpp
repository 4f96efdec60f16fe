#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "revsent/corpus.hpp"
#include "revsent/error.hpp"
#include "revsent/io.hpp"
#include "revsent/lexicon.hpp"

namespace revsent {

// An unlabeled review as handed to a labeler. Deliberately has no label
// field: gold labels cannot reach the labeler through this type.
struct PoolItem {
  std::string id;
  std::string text;
};

std::vector<PoolItem> strip_labels(std::span<const LabeledReview> reviews);

struct LabelerConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4";
  // Name of the environment variable holding the API key. The key itself
  // never appears in configuration.
  std::string api_key_env = "OPENAI_API_KEY";
  std::string system_prompt;  // empty -> default_system_prompt()
  std::size_t bootstrap_size = 100;
  double temperature = 0.0;
  int max_retries = 3;
  double balance_tolerance = 0.2;
  // Attachment size limit per request; larger pools are split into chunks.
  std::size_t max_attachment_chars = 400'000;
  std::chrono::seconds timeout{120};

  void validate() const;
};

// The expert-role configuration prompt, verbatim.
const std::string& default_system_prompt();

// Selection query for n reviews, followed by the inline output-format
// instruction this client requires.
std::string build_query(std::size_t n);

// ---------------------------------------------------------------------------
// Chat transport

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
};

Json to_json(const ChatRequest& request);

struct ChatResponse {
  std::string content;
  Json usage;  // null when the endpoint does not report it
};

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

std::optional<std::string> process_env(const std::string& name);

// Chat-completion client over HTTP(S) with bearer auth. Throws ConfigError
// when the API key variable is unset, before any network activity.
std::unique_ptr<ChatClient> make_http_chat_client(const LabelerConfig& config,
                                                  const EnvLookup& env = process_env);

// ---------------------------------------------------------------------------
// Bootstrap sets

struct TranscriptEntry {
  std::size_t chunk = 0;
  int attempt = 0;
  Json request;
  std::string response;  // verbatim
  std::vector<std::string> warnings;
  std::string timestamp;  // ISO-8601 UTC; empty for the offline mock
  Json usage;
};

struct LabelerTranscript {
  std::vector<TranscriptEntry> entries;

  std::string to_jsonl() const;
};

struct BootstrapSet {
  std::vector<LabeledReview> items;
  LabelerTranscript transcript;
  // Class counts differ by more than balance_tolerance * size.
  bool imbalanced = false;

  std::size_t positives() const;
  std::size_t negatives() const { return items.size() - positives(); }
};

std::string to_jsonl(const BootstrapSet& set);

struct ParseResult {
  std::vector<std::pair<std::string, int>> items;
  std::vector<std::string> warnings;
  std::size_t ignored_lines = 0;
  std::size_t duplicate_ids = 0;
  std::size_t unknown_ids = 0;
  std::size_t invalid_labels = 0;
};

class InsufficientItemsError : public StageError {
 public:
  InsufficientItemsError(const std::string& what, ParseResult partial)
      : StageError(what), partial_(std::move(partial)) {}
  const ParseResult& partial() const { return partial_; }

 private:
  ParseResult partial_;
};

// Extracts "<id>,<0|1>" lines; everything else is ignored. Keeps the first
// occurrence of each id and truncates to n items. Throws
// InsufficientItemsError when fewer than n valid items are found.
ParseResult parse_response(std::string_view raw, const std::unordered_set<std::string>& pool_ids,
                           std::size_t n);

// Submits the pool to a chat endpoint and validates the returned set.
BootstrapSet request_bootstrap(std::span<const PoolItem> pool, const LabelerConfig& config,
                               ChatClient& client);

// Deterministic offline stand-in: lexicon-score every review, label by sign,
// take the most confident half per class.
BootstrapSet mock_bootstrap(std::span<const PoolItem> pool, std::size_t n, std::uint64_t seed,
                            const Lexicon& lexicon, double balance_tolerance = 0.2);

// ---------------------------------------------------------------------------

class Labeler {
 public:
  virtual ~Labeler() = default;
  virtual BootstrapSet label(std::span<const PoolItem> pool, std::size_t n, std::uint64_t seed) = 0;
  // Short pipeline tag, e.g. "ESCS".
  virtual std::string name() const = 0;
};

class MockLabeler final : public Labeler {
 public:
  explicit MockLabeler(Lexicon lexicon = default_lexicon(), double balance_tolerance = 0.2)
      : lexicon_(std::move(lexicon)), balance_tolerance_(balance_tolerance) {}
  BootstrapSet label(std::span<const PoolItem> pool, std::size_t n, std::uint64_t seed) override;
  std::string name() const override { return "MOCK"; }

 private:
  Lexicon lexicon_;
  double balance_tolerance_;
};

class ChatLabeler final : public Labeler {
 public:
  ChatLabeler(LabelerConfig config, std::shared_ptr<ChatClient> client)
      : config_(std::move(config)), client_(std::move(client)) {}
  BootstrapSet label(std::span<const PoolItem> pool, std::size_t n, std::uint64_t seed) override;
  std::string name() const override { return "ESCS"; }

 private:
  LabelerConfig config_;
  std::shared_ptr<ChatClient> client_;
};

// Labels each distinct (pool ids, n, seed) request once and replays the result,
// so pipelines sharing a fold share one bootstrap set. Concurrent requests for
// the same key wait for the first. on_new sees every freshly labeled set.
class MemoizingLabeler final : public Labeler {
 public:
  using Observer = std::function<void(const BootstrapSet&, std::uint64_t seed)>;

  explicit MemoizingLabeler(std::shared_ptr<Labeler> inner, Observer on_new = {})
      : inner_(std::move(inner)), on_new_(std::move(on_new)) {}
  BootstrapSet label(std::span<const PoolItem> pool, std::size_t n, std::uint64_t seed) override;
  std::string name() const override { return inner_->name(); }
  std::size_t inner_calls() const;

 private:
  std::shared_ptr<Labeler> inner_;
  Observer on_new_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_future<BootstrapSet>> cache_;
  std::size_t inner_calls_ = 0;
};

}  // namespace revsent
