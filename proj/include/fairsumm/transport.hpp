#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "fairsumm/types.hpp"

namespace fairsumm {

/// JSON request/response channel to an annotator or generation service.
///
/// Implementations must be safe to call from several threads at once.
/// Failures that are worth retrying raise TransportError; malformed replies and
/// 4xx statuses raise ProtocolViolation.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual nlohmann::json post(const std::string& path, const nlohmann::json& body) = 0;
  virtual nlohmann::json get(const std::string& path) = 0;
};

/// HTTP/1.1 JSON client (cpp-httplib). A fresh connection is opened per request.
class HttpTransport final : public Transport {
 public:
  HttpTransport(std::string base_url, int timeout_ms, std::string bearer_token = {});

  nlohmann::json post(const std::string& path, const nlohmann::json& body) override;
  nlohmann::json get(const std::string& path) override;

 private:
  std::string base_url_;
  int timeout_ms_;
  std::string bearer_token_;
};

/// Deterministic in-process annotator implementing the annotation wire protocol.
///
/// kConstant answers every request with the configured labels. kHashPartition
/// derives each label from fnv1a64 of the request (see the .cpp for the exact rule),
/// which is stable and cheap to recompute in tests.
class StubAnnotatorTransport final : public Transport {
 public:
  enum class Mode { kConstant, kHashPartition };

  struct Options {
    Mode mode = Mode::kConstant;
    Sentiment sentiment = Sentiment::kNeutral;
    Leaning political = Leaning::kCenter;
    std::array<double, 3> document_confidence = {1.0, 1.0, 1.0};
    /// Type reported for every entity in constant mode.
    std::string entity_type = "PERSON";
  };

  explicit StubAnnotatorTransport(Options options);

  nlohmann::json post(const std::string& path, const nlohmann::json& body) override;
  nlohmann::json get(const std::string& path) override;

  std::string model_version() const;

  /// The hash-partition rules, exposed so tests can state them independently.
  static std::size_t hash_sentiment_index(std::string_view text, std::string_view target);
  static std::array<double, 3> hash_political_weights(std::string_view text,
                                                      std::string_view granularity);
  static std::string hash_entity_type(std::string_view surface);

  struct RawEntity {
    std::string text;
    std::size_t start = 0;
    std::size_t end = 0;
    bool numeric = false;
  };
  /// Capitalised-word runs and digit tokens, in text order.
  static std::vector<RawEntity> find_entity_spans(std::string_view text);

 private:
  Options options_;
};

/// Answers requests from a recorded JSON-lines fixture of
/// {"path": ..., "request": {...}, "response": {...}} records.
class ReplayTransport final : public Transport {
 public:
  explicit ReplayTransport(const std::filesystem::path& fixture);

  nlohmann::json post(const std::string& path, const nlohmann::json& body) override;
  nlohmann::json get(const std::string& path) override;

  std::size_t size() const noexcept { return responses_.size(); }

 private:
  std::map<std::string, nlohmann::json> responses_;
};

/// Forwards to another transport and appends every exchange to a fixture file
/// readable by ReplayTransport.
class RecordingTransport final : public Transport {
 public:
  RecordingTransport(std::shared_ptr<Transport> inner, std::filesystem::path fixture);

  nlohmann::json post(const std::string& path, const nlohmann::json& body) override;
  nlohmann::json get(const std::string& path) override;

 private:
  std::shared_ptr<Transport> inner_;
  std::filesystem::path fixture_;
  std::mutex mutex_;
};

}  // namespace fairsumm
