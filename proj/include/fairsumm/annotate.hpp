#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairsumm/metrics.hpp"
#include "fairsumm/transport.hpp"
#include "fairsumm/types.hpp"

namespace fairsumm {

enum class Capability {
  kSentenceSentiment,
  kTargetSentiment,
  kPoliticalSentence,
  kPoliticalDocument,
  kEntities
};

std::string_view capability_name(Capability c) noexcept;
std::optional<Capability> parse_capability(std::string_view name) noexcept;

/// NER types dropped client-side whatever the server returns.
bool is_excluded_entity_type(std::string_view type) noexcept;

struct AnnotatorEndpoint {
  std::string base_url;
  int timeout_ms = 30000;
  int max_retries = 2;
  int max_parallel = 4;
  /// Part of every cache key; bump it when the served models change.
  std::string model_version = "unversioned";
  std::string bearer_token;

  void validate() const;
};

struct AnnotationRecord {
  std::string content_hash;
  Capability capability = Capability::kSentenceSentiment;
  std::string model_version;
  nlohmann::json payload;
};

/// Content-addressed store of annotator responses.
///
/// Backed by an append-only JSON-lines file (one AnnotationRecord per line) with an
/// in-memory index; without a path the cache lives in memory only. Reads may run
/// concurrently; writes are serialised.
class AnnotationCache {
 public:
  AnnotationCache() = default;
  explicit AnnotationCache(std::filesystem::path file);

  AnnotationCache(const AnnotationCache&) = delete;
  AnnotationCache& operator=(const AnnotationCache&) = delete;

  /// Exact payload bytes stored under `content_hash`.
  std::optional<std::string> find_raw(const std::string& content_hash) const;
  std::optional<nlohmann::json> find(const std::string& content_hash) const;

  /// Stores the record unless its hash is already present. Returns true if appended.
  bool put(const AnnotationRecord& record);

  std::size_t size() const;

  /// sha256(capability \n canonical request JSON \n model_version).
  static std::string content_hash(Capability capability, const nlohmann::json& request,
                                  std::string_view model_version);

 private:
  std::filesystem::path file_;
  std::ofstream out_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::string, std::less<>> payloads_;
};

/// Client for the four classifier capabilities, consulting the cache before the transport.
class AnnotatorClient {
 public:
  AnnotatorClient(AnnotatorEndpoint endpoint, std::shared_ptr<Transport> transport,
                  AnnotationCache* cache = nullptr);

  /// Whole-sentence sentiment (target = null) and sentence-level political label,
  /// one annotation per input sentence.
  std::vector<metrics::SentenceAnnotation> annotate_sentences(std::span<const std::string> sentences);

  /// Document-level confidence triple renormalised over (Left, Center, Right).
  Distribution3 classify_document_leaning(std::string_view text);

  /// Mentions with date/time/numeric types removed and keys normalised.
  std::vector<metrics::EntityMention> extract_entities(std::string_view text);

  /// Sentiment toward `entity_key` in `sentence`; the key must occur in the
  /// normalised sentence.
  Sentiment target_sentiment(std::string_view sentence, std::string_view entity_key);

  /// Batched target_sentiment over (sentence, entity_key) pairs.
  std::vector<Sentiment> target_sentiments(
      std::span<const std::pair<std::string, std::string>> sentence_key_pairs);

  /// GET /healthz succeeded with {"status": "ok"}.
  bool healthy();

  /// Requests that reached the transport (cache misses, counting retries).
  std::size_t transport_calls() const noexcept { return transport_calls_.load(); }
  std::size_t cache_hits() const noexcept { return cache_hits_.load(); }

  const AnnotatorEndpoint& endpoint() const noexcept { return endpoint_; }

 private:
  struct Request {
    Capability capability;
    std::string path;
    nlohmann::json body;
  };

  std::vector<nlohmann::json> fetch_all(std::span<const Request> requests);
  nlohmann::json fetch_one(const Request& request);

  AnnotatorEndpoint endpoint_;
  std::shared_ptr<Transport> transport_;
  AnnotationCache* cache_;
  std::atomic<std::size_t> transport_calls_{0};
  std::atomic<std::size_t> cache_hits_{0};
};

/// Wire-schema checks; throw ProtocolViolation.
void validate_sentiment_response(const nlohmann::json& response);
void validate_political_response(const nlohmann::json& response);
void validate_entities_response(const nlohmann::json& response);

}  // namespace fairsumm
