#include "revsent/labeler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <regex>
#include <unordered_map>

#include <httplib.h>

#include "revsent/random.hpp"
#include "revsent/text.hpp"

namespace revsent {

std::vector<PoolItem> strip_labels(std::span<const LabeledReview> reviews) {
  std::vector<PoolItem> pool;
  pool.reserve(reviews.size());
  for (const auto& review : reviews) pool.push_back({review.id, review.text});
  return pool;
}

void LabelerConfig::validate() const {
  if (bootstrap_size < 2) throw ConfigError("labeler bootstrap_size must be >= 2");
  if (!(balance_tolerance >= 0.0 && balance_tolerance <= 0.5)) {
    throw ConfigError("labeler balance_tolerance must lie in [0, 0.5]");
  }
  if (max_retries < 0) throw ConfigError("labeler max_retries must be >= 0");
  if (api_key_env.empty()) throw ConfigError("labeler api_key_env must name an environment variable");
  if (max_attachment_chars == 0) throw ConfigError("labeler max_attachment_chars must be > 0");
}

const std::string& default_system_prompt() {
  static const std::string prompt =
      "You are an expert in machine learning and user reviews. "
      "Your task is to select the most valuable comments from "
      "customer-provided user reviews and provide sentiment "
      "labels to form a training set. Choose those comments "
      "that can most improve the performance of a sentiment "
      "classifier based on machine learning. The selected "
      "comments will be used for training downstream segment "
      "classifiers. When choosing comments, you should consider "
      "multiple factors, rather than simply selecting randomly or "
      "based solely on comment length. Also, avoid labeling the "
      "reviews only based on counting emotional words. In "
      "addition, please note the balance between each "
      "category of comments. Please use a simple tool "
      "for sentiment analysis to classify the reviews. "
      "Please comprehensively consider selecting instances "
      "that are most useful for training downstream classifiers, "
      "rather than random sampling.";
  return prompt;
}

namespace {

std::string output_format_instruction(std::size_t n) {
  return "Output format: instead of download links, reply inline. List exactly " + std::to_string(n) +
         " selected reviews, one per line, as <id>,<label> where <id> is the review's id from the "
         "attached file exactly as given and <label> is 1 for positive or 0 for negative. "
         "Do not repeat ids.";
}

}  // namespace

std::string build_query(std::size_t n) {
  if (n < 1) throw std::invalid_argument("build_query: n must be >= 1");
  const std::string count = std::to_string(n);
  return "Please carefully analyze the uploaded file of user reviews. Identify and select the " + count +
         " reviews that are most valuable for training our downstream sentiment classifier. For each "
         "selected review, assign a label of 'Positive' or 'Negative', use 1 for positive use 0 for "
         "negative. Please provide download links for the reviews you selected and annotated.\n\n" +
         output_format_instruction(n);
}

Json to_json(const ChatRequest& request) {
  Json messages = Json::array();
  for (const auto& message : request.messages) {
    messages.push_back({{"role", message.role}, {"content", message.content}});
  }
  return {{"model", request.model}, {"messages", std::move(messages)}, {"temperature", request.temperature}};
}

std::optional<std::string> process_env(const std::string& name) {
  if (const char* value = std::getenv(name.c_str()); value != nullptr && *value != '\0') {
    return std::string(value);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

namespace {

class HttpChatClient final : public ChatClient {
 public:
  HttpChatClient(UrlParts endpoint, std::string api_key, std::chrono::seconds timeout)
      : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)), timeout_(timeout) {}

  ChatResponse complete(const ChatRequest& request) override {
    httplib::Client client(endpoint_.scheme_host_port);
    client.set_bearer_token_auth(api_key_);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    const auto result = client.Post(endpoint_.path, to_json(request).dump(), "application/json");
    if (!result) {
      throw TransportError("chat endpoint unreachable: " + httplib::to_string(result.error()));
    }
    const int status = result->status;
    if (status == 401 || status == 403) {
      throw AuthError("chat endpoint rejected credentials (HTTP " + std::to_string(status) + ")");
    }
    if (status == 429 || status >= 500) {
      throw TransportError("chat endpoint returned HTTP " + std::to_string(status));
    }
    if (status != 200) {
      throw StageError("chat endpoint returned HTTP " + std::to_string(status) + ": " + result->body);
    }
    Json body;
    try {
      body = Json::parse(result->body);
    } catch (const Json::parse_error&) {
      throw TransportError("chat endpoint returned non-JSON body");
    }
    ChatResponse response;
    try {
      response.content = body.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const Json::exception&) {
      throw TransportError("chat response lacks choices[0].message.content");
    }
    if (const auto it = body.find("usage"); it != body.end()) response.usage = *it;
    return response;
  }

 private:
  UrlParts endpoint_;
  std::string api_key_;
  std::chrono::seconds timeout_;
};

}  // namespace

std::unique_ptr<ChatClient> make_http_chat_client(const LabelerConfig& config, const EnvLookup& env) {
  const auto key = env(config.api_key_env);
  if (!key) throw ConfigError("environment variable " + config.api_key_env + " is not set");
  return std::make_unique<HttpChatClient>(split_url(config.endpoint), *key, config.timeout);
}

// ---------------------------------------------------------------------------

std::string LabelerTranscript::to_jsonl() const {
  std::vector<Json> lines;
  lines.reserve(entries.size());
  for (const auto& entry : entries) {
    Json line = {{"chunk", entry.chunk},
                 {"attempt", entry.attempt},
                 {"request", entry.request},
                 {"response", entry.response},
                 {"warnings", entry.warnings}};
    if (!entry.timestamp.empty()) line["timestamp"] = entry.timestamp;
    if (!entry.usage.is_null()) line["usage"] = entry.usage;
    lines.push_back(std::move(line));
  }
  return revsent::to_jsonl(lines);
}

std::size_t BootstrapSet::positives() const {
  return static_cast<std::size_t>(
      std::count_if(items.begin(), items.end(), [](const LabeledReview& r) { return r.polarity == 1; }));
}

std::string to_jsonl(const BootstrapSet& set) { return to_canonical_jsonl(set.items); }

ParseResult parse_response(std::string_view raw, const std::unordered_set<std::string>& pool_ids,
                           std::size_t n) {
  // Optional list marker and backticks around an "<id>,<label>" pair.
  static const std::regex kLine(R"(^\s*(?:[-*]\s+|\d+[.)]\s+)?`?\s*([^,\s`]+)\s*,\s*([+-]?\d+)\s*`?\s*$)");
  ParseResult result;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= raw.size()) {
    auto end = raw.find('\n', start);
    if (end == std::string_view::npos) end = raw.size();
    ++line_no;
    const std::string line(trim(raw.substr(start, end - start)));
    start = end + 1;
    std::smatch match;
    if (line.empty()) {
      // blank
    } else if (!std::regex_match(line, match, kLine)) {
      ++result.ignored_lines;
    } else {
      const std::string id = match[1].str();
      const std::string label = match[2].str();
      if (label != "0" && label != "1") {
        ++result.invalid_labels;
        result.warnings.push_back("line " + std::to_string(line_no) + ": label '" + label +
                                  "' outside {0,1} for id " + id);
      } else if (!pool_ids.contains(id)) {
        ++result.unknown_ids;
        result.warnings.push_back("line " + std::to_string(line_no) + ": unknown id " + id);
      } else if (!seen.insert(id).second) {
        ++result.duplicate_ids;
        result.warnings.push_back("line " + std::to_string(line_no) + ": duplicate id " + id);
      } else {
        result.items.emplace_back(id, label == "1" ? 1 : 0);
      }
    }
    if (end == raw.size()) break;
  }
  if (result.items.size() > n) {
    result.warnings.push_back("response listed " + std::to_string(result.items.size()) +
                              " items; keeping the first " + std::to_string(n));
    result.items.resize(n);
  }
  if (result.items.size() < n) {
    const std::string message = "insufficient items: " + std::to_string(result.items.size()) + " valid of " +
                                std::to_string(n) + " required";
    throw InsufficientItemsError(message, std::move(result));
  }
  return result;
}

// ---------------------------------------------------------------------------

namespace {

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

struct Chunk {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string attachment;
  std::size_t quota = 0;
};

std::vector<Chunk> make_chunks(std::span<const PoolItem> pool, std::size_t n, std::size_t max_chars) {
  std::vector<Chunk> chunks;
  Chunk current;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const std::string line = Json{{"id", pool[i].id}, {"text", pool[i].text}}.dump(
                                 -1, ' ', false, Json::error_handler_t::replace) + "\n";
    if (!current.attachment.empty() && current.attachment.size() + line.size() > max_chars) {
      current.end = i;
      chunks.push_back(std::move(current));
      current = Chunk{};
      current.begin = i;
    }
    current.attachment += line;
  }
  current.end = pool.size();
  chunks.push_back(std::move(current));

  // Largest-remainder apportionment of n by chunk size.
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < chunks.size(); ++c) {
    const std::size_t size = chunks[c].end - chunks[c].begin;
    const double exact = static_cast<double>(n) * static_cast<double>(size) / static_cast<double>(pool.size());
    chunks[c].quota = std::min(size, static_cast<std::size_t>(std::floor(exact)));
    assigned += chunks[c].quota;
    remainders.emplace_back(exact - std::floor(exact), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < n; r = (r + 1) % remainders.size()) {
    auto& chunk = chunks[remainders[r].second];
    if (chunk.quota < chunk.end - chunk.begin) {
      ++chunk.quota;
      ++assigned;
    }
  }
  std::erase_if(chunks, [](const Chunk& c) { return c.quota == 0; });
  return chunks;
}

struct ChunkConversation {
  std::vector<ChatMessage> messages;
  std::unordered_set<std::string> ids;
  std::vector<std::pair<std::string, int>> items;
};

// Runs one chunk's conversation until parse succeeds or retries run out.
void converse(ChunkConversation& conv, std::size_t chunk_index, std::size_t quota,
              const LabelerConfig& config, ChatClient& client, LabelerTranscript& transcript,
              int& attempt_counter) {
  std::string last_error;
  for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
    ChatRequest request{config.model, conv.messages, config.temperature};
    TranscriptEntry entry;
    entry.chunk = chunk_index;
    entry.attempt = attempt_counter++;
    entry.request = to_json(request);
    entry.timestamp = utc_timestamp();
    ChatResponse response;
    try {
      response = client.complete(request);
    } catch (const TransportError& e) {
      entry.warnings.push_back(std::string("transport: ") + e.what());
      transcript.entries.push_back(std::move(entry));
      last_error = e.what();
      continue;
    }
    entry.response = response.content;
    entry.usage = response.usage;
    try {
      ParseResult parsed = parse_response(response.content, conv.ids, quota);
      entry.warnings = parsed.warnings;
      transcript.entries.push_back(std::move(entry));
      conv.messages.push_back({"assistant", response.content});
      conv.items = std::move(parsed.items);
      return;
    } catch (const InsufficientItemsError& e) {
      entry.warnings = e.partial().warnings;
      entry.warnings.push_back(e.what());
      transcript.entries.push_back(std::move(entry));
      last_error = e.what();
      conv.messages.push_back({"assistant", response.content});
      conv.messages.push_back(
          {"user", "Your previous reply could not be used (" + last_error + "). " +
                       output_format_instruction(quota) +
                       " Only use ids that appear in the attached file and only the labels 0 and 1."});
    }
  }
  throw StageError("labeler response unusable after " + std::to_string(config.max_retries + 1) +
                   " attempts: " + last_error);
}

bool within_balance(std::size_t positives, std::size_t total, double tolerance) {
  const auto negatives = total - positives;
  const auto diff = positives > negatives ? positives - negatives : negatives - positives;
  return static_cast<double>(diff) <= tolerance * static_cast<double>(total) + 1e-12;
}

std::size_t count_positive(const std::vector<ChunkConversation>& convs) {
  std::size_t positives = 0;
  for (const auto& conv : convs) {
    for (const auto& [id, label] : conv.items) positives += label == 1 ? 1 : 0;
  }
  return positives;
}

}  // namespace

BootstrapSet request_bootstrap(std::span<const PoolItem> pool, const LabelerConfig& config,
                               ChatClient& client) {
  config.validate();
  const std::size_t n = config.bootstrap_size;
  if (pool.size() < n) {
    throw StageError("labeler pool has " + std::to_string(pool.size()) + " reviews; " + std::to_string(n) +
                     " requested");
  }
  std::unordered_map<std::string, std::size_t> index_of;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (!index_of.emplace(pool[i].id, i).second) throw StageError("duplicate id in labeler pool: " + pool[i].id);
  }

  const std::string& system_prompt = config.system_prompt.empty() ? default_system_prompt() : config.system_prompt;
  const auto chunks = make_chunks(pool, n, config.max_attachment_chars);

  BootstrapSet set;
  std::vector<ChunkConversation> convs(chunks.size());
  int attempt_counter = 0;
  for (std::size_t c = 0; c < chunks.size(); ++c) {
    auto& conv = convs[c];
    for (std::size_t i = chunks[c].begin; i < chunks[c].end; ++i) conv.ids.insert(pool[i].id);
    conv.messages = {{"system", system_prompt},
                     {"user", build_query(chunks[c].quota) + "\n\nAttached file (reviews.jsonl):\n" +
                                  chunks[c].attachment}};
    converse(conv, c, chunks[c].quota, config, client, set.transcript, attempt_counter);
  }

  if (!within_balance(count_positive(convs), n, config.balance_tolerance)) {
    // One corrective round, then accept and flag.
    const auto before = convs;
    for (std::size_t c = 0; c < chunks.size(); ++c) {
      auto& conv = convs[c];
      conv.messages.push_back(
          {"user", "The selection is unbalanced between positive and negative reviews. Please reselect so "
                   "both categories are represented about equally. " +
                       output_format_instruction(chunks[c].quota)});
      try {
        converse(conv, c, chunks[c].quota, config, client, set.transcript, attempt_counter);
      } catch (const AuthError&) {
        throw;
      } catch (const StageError&) {
        convs = before;
        break;
      }
    }
    set.imbalanced = !within_balance(count_positive(convs), n, config.balance_tolerance);
  }

  std::vector<std::pair<std::size_t, int>> chosen;
  chosen.reserve(n);
  for (const auto& conv : convs) {
    for (const auto& [id, label] : conv.items) chosen.emplace_back(index_of.at(id), label);
  }
  std::sort(chosen.begin(), chosen.end());
  for (const auto& [index, label] : chosen) {
    set.items.push_back({pool[index].id, pool[index].text, label, Source::kOther});
  }
  return set;
}

// ---------------------------------------------------------------------------

BootstrapSet mock_bootstrap(std::span<const PoolItem> pool, std::size_t n, std::uint64_t seed,
                            const Lexicon& lexicon, double balance_tolerance) {
  if (n == 0) throw std::invalid_argument("mock_bootstrap: n must be >= 1");
  if (pool.size() < n) {
    throw StageError("labeler pool has " + std::to_string(pool.size()) + " reviews; " + std::to_string(n) +
                     " requested");
  }
  struct Scored {
    std::size_t index;
    double score;
    std::uint64_t tiebreak;
  };
  std::vector<Scored> positive;
  std::vector<Scored> negative;
  std::vector<Scored> neutral;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const double score = lexicon_score(pool[i].text, lexicon);
    const Scored s{i, score, mix_seed(seed, i)};
    (score > 0 ? positive : score < 0 ? negative : neutral).push_back(s);
  }
  // Most confident first; the seed only orders equal scores.
  auto by_confidence = [](const Scored& a, const Scored& b) {
    const double ca = std::abs(a.score);
    const double cb = std::abs(b.score);
    if (ca != cb) return ca > cb;
    if (a.tiebreak != b.tiebreak) return a.tiebreak < b.tiebreak;
    return a.index < b.index;
  };
  std::sort(positive.begin(), positive.end(), by_confidence);
  std::sort(negative.begin(), negative.end(), by_confidence);
  std::sort(neutral.begin(), neutral.end(), by_confidence);

  std::size_t take_pos = std::min(positive.size(), n - n / 2);
  std::size_t take_neg = std::min(negative.size(), n / 2);
  // Pad a short class from the other class's runner-ups.
  take_pos += std::min(positive.size() - take_pos, n - take_pos - take_neg);
  take_neg += std::min(negative.size() - take_neg, n - take_pos - take_neg);
  const std::size_t take_neutral = n - take_pos - take_neg;

  std::vector<std::pair<std::size_t, int>> chosen;
  for (std::size_t i = 0; i < take_pos; ++i) chosen.emplace_back(positive[i].index, 1);
  for (std::size_t i = 0; i < take_neg; ++i) chosen.emplace_back(negative[i].index, 0);
  // Zero-score reviews fall on the positive side of the sign rule.
  for (std::size_t i = 0; i < take_neutral; ++i) chosen.emplace_back(neutral[i].index, 1);
  std::sort(chosen.begin(), chosen.end());

  BootstrapSet set;
  set.items.reserve(n);
  for (const auto& [index, label] : chosen) {
    set.items.push_back({pool[index].id, pool[index].text, label, Source::kOther});
  }
  set.imbalanced = !within_balance(set.positives(), n, balance_tolerance);

  TranscriptEntry entry;
  entry.request = {{"mode", "mock"}, {"n", n}, {"seed", seed}, {"pool_size", pool.size()}};
  std::string summary;
  for (const auto& item : set.items) summary += item.id + "," + std::to_string(item.polarity) + "\n";
  entry.response = std::move(summary);
  if (set.imbalanced) entry.warnings.push_back("bootstrap set is imbalanced");
  set.transcript.entries.push_back(std::move(entry));
  return set;
}

BootstrapSet MockLabeler::label(std::span<const PoolItem> pool, std::size_t n, std::uint64_t seed) {
  return mock_bootstrap(pool, n, seed, lexicon_, balance_tolerance_);
}

BootstrapSet ChatLabeler::label(std::span<const PoolItem> pool, std::size_t n, std::uint64_t /*seed*/) {
  LabelerConfig config = config_;
  config.bootstrap_size = n;
  return request_bootstrap(pool, config, *client_);
}

BootstrapSet MemoizingLabeler::label(std::span<const PoolItem> pool, std::size_t n, std::uint64_t seed) {
  std::string key = std::to_string(n) + ':' + std::to_string(seed);
  for (const auto& item : pool) {
    key += '\n';
    key += item.id;
  }
  key = sha256_hex(key);

  std::promise<BootstrapSet> promise;
  std::shared_future<BootstrapSet> future;
  bool owner = false;
  {
    std::lock_guard lock(mutex_);
    auto it = cache_.find(key);
    if (it == cache_.end()) {
      future = promise.get_future().share();
      cache_.emplace(key, future);
      ++inner_calls_;
      owner = true;
    } else {
      future = it->second;
    }
  }
  if (owner) {
    try {
      BootstrapSet set = inner_->label(pool, n, seed);
      if (on_new_) on_new_(set, seed);
      promise.set_value(std::move(set));
    } catch (...) {
      promise.set_exception(std::current_exception());
    }
  }
  return future.get();
}

std::size_t MemoizingLabeler::inner_calls() const {
  std::lock_guard lock(mutex_);
  return inner_calls_;
}

}  // namespace revsent
