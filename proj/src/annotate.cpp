#include "fairsumm/annotate.hpp"

#include <cmath>
#include <exception>
#include <future>
#include <mutex>
#include <set>

#include "fairsumm/error.hpp"
#include "fairsumm/text.hpp"

namespace fairsumm {

using nlohmann::json;

std::string_view capability_name(Capability c) noexcept {
  switch (c) {
    case Capability::kSentenceSentiment:
      return "sentence_sentiment";
    case Capability::kTargetSentiment:
      return "target_sentiment";
    case Capability::kPoliticalSentence:
      return "political_sentence";
    case Capability::kPoliticalDocument:
      return "political_document";
    case Capability::kEntities:
      return "entities";
  }
  return "";
}

std::optional<Capability> parse_capability(std::string_view name) noexcept {
  for (Capability c : {Capability::kSentenceSentiment, Capability::kTargetSentiment,
                       Capability::kPoliticalSentence, Capability::kPoliticalDocument,
                       Capability::kEntities}) {
    if (capability_name(c) == name) return c;
  }
  return std::nullopt;
}

bool is_excluded_entity_type(std::string_view type) noexcept {
  static constexpr std::array<std::string_view, 7> kExcluded = {
      "DATE", "TIME", "CARDINAL", "ORDINAL", "QUANTITY", "PERCENT", "MONEY"};
  for (auto t : kExcluded) {
    if (t == type) return true;
  }
  return false;
}

void AnnotatorEndpoint::validate() const {
  if (timeout_ms <= 0) throw ValidationError("annotator timeout_ms must be positive");
  if (max_parallel < 1) throw ValidationError("annotator max_parallel must be at least 1");
  if (max_retries < 0) throw ValidationError("annotator max_retries must be non-negative");
}

// ---------------------------------------------------------------------------
// Wire schema

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ProtocolViolation(what);
}

bool finite_non_negative(const json& v) {
  return v.is_number() && std::isfinite(v.get<double>()) && v.get<double>() >= 0.0;
}

}  // namespace

void validate_sentiment_response(const json& r) {
  require(r.is_object(), "sentiment response is not an object");
  require(r.contains("label") && r["label"].is_string() &&
              parse_sentiment(r["label"].get<std::string>()).has_value(),
          "sentiment label must be negative|neutral|positive");
  require(r.contains("scores") && r["scores"].is_array() && r["scores"].size() == 3,
          "sentiment scores must be an array of three numbers");
  for (const auto& s : r["scores"]) require(s.is_number() && std::isfinite(s.get<double>()), "non-finite sentiment score");
  require(r.contains("model_version") && r["model_version"].is_string(), "missing model_version");
}

void validate_political_response(const json& r) {
  require(r.is_object(), "political response is not an object");
  require(r.contains("label") && r["label"].is_string() &&
              parse_leaning(r["label"].get<std::string>()).has_value(),
          "political label must be left|center|right");
  require(r.contains("confidence") && r["confidence"].is_object() && r["confidence"].size() == 3,
          "confidence must have exactly the keys left, center, right");
  double total = 0.0;
  for (const char* key : {"left", "center", "right"}) {
    require(r["confidence"].contains(key), std::string("confidence missing '") + key + "'");
    require(finite_non_negative(r["confidence"][key]), "confidence values must be finite and non-negative");
    total += r["confidence"][key].get<double>();
  }
  require(total > 0.0, "confidence values are all zero");
  require(r.contains("model_version") && r["model_version"].is_string(), "missing model_version");
}

void validate_entities_response(const json& r) {
  require(r.is_object(), "entities response is not an object");
  require(r.contains("entities") && r["entities"].is_array(), "entities must be an array");
  for (const auto& e : r["entities"]) {
    require(e.is_object() && e.contains("text") && e["text"].is_string() && e.contains("type") &&
                e["type"].is_string() && e.contains("start") && e["start"].is_number_integer() &&
                e.contains("end") && e["end"].is_number_integer(),
            "entity records need text, type, start, end");
  }
  require(r.contains("model_version") && r["model_version"].is_string(), "missing model_version");
}

namespace {

void validate_for(Capability c, const json& r) {
  switch (c) {
    case Capability::kSentenceSentiment:
    case Capability::kTargetSentiment:
      validate_sentiment_response(r);
      break;
    case Capability::kPoliticalSentence:
    case Capability::kPoliticalDocument:
      validate_political_response(r);
      break;
    case Capability::kEntities:
      validate_entities_response(r);
      break;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Cache

AnnotationCache::AnnotationCache(std::filesystem::path file) : file_(std::move(file)) {
  if (file_.has_parent_path()) std::filesystem::create_directories(file_.parent_path());
  if (std::ifstream in(file_); in) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json rec;
      try {
        rec = json::parse(line);
      } catch (const json::exception&) {
        // A torn final line from an interrupted writer is ignored; anything else is corruption.
        if (in.peek() == std::char_traits<char>::eof()) break;
        throw Error("annotation cache " + file_.string() + " is corrupt at line " +
                    std::to_string(lineno));
      }
      payloads_.emplace(rec.at("content_hash").get<std::string>(), rec.at("payload").dump());
    }
  }
  out_.open(file_, std::ios::app);
  if (!out_) throw Error("cannot open annotation cache " + file_.string() + " for appending");
}

std::optional<std::string> AnnotationCache::find_raw(const std::string& content_hash) const {
  std::shared_lock lock(mutex_);
  auto it = payloads_.find(content_hash);
  if (it == payloads_.end()) return std::nullopt;
  return it->second;
}

std::optional<json> AnnotationCache::find(const std::string& content_hash) const {
  auto raw = find_raw(content_hash);
  if (!raw) return std::nullopt;
  return json::parse(*raw);
}

bool AnnotationCache::put(const AnnotationRecord& record) {
  std::unique_lock lock(mutex_);
  if (payloads_.contains(record.content_hash)) return false;
  std::string payload = record.payload.dump();
  if (out_.is_open()) {
    json line = {{"capability", capability_name(record.capability)},
                 {"content_hash", record.content_hash},
                 {"model_version", record.model_version},
                 {"payload", record.payload}};
    out_ << line.dump() << '\n';
    out_.flush();
  }
  payloads_.emplace(record.content_hash, std::move(payload));
  return true;
}

std::size_t AnnotationCache::size() const {
  std::shared_lock lock(mutex_);
  return payloads_.size();
}

std::string AnnotationCache::content_hash(Capability capability, const json& request,
                                          std::string_view model_version) {
  std::string material(capability_name(capability));
  material += '\n';
  material += request.dump();
  material += '\n';
  material += model_version;
  return text::sha256_hex(material);
}

// ---------------------------------------------------------------------------
// Client

AnnotatorClient::AnnotatorClient(AnnotatorEndpoint endpoint, std::shared_ptr<Transport> transport,
                                 AnnotationCache* cache)
    : endpoint_(std::move(endpoint)), transport_(std::move(transport)), cache_(cache) {
  endpoint_.validate();
}

json AnnotatorClient::fetch_one(const Request& request) {
  for (int attempt = 0;; ++attempt) {
    try {
      ++transport_calls_;
      json response = transport_->post(request.path, request.body);
      validate_for(request.capability, response);
      return response;
    } catch (const TransportError&) {
      if (attempt >= endpoint_.max_retries) throw;
    }
  }
}

std::vector<json> AnnotatorClient::fetch_all(std::span<const Request> requests) {
  std::vector<std::string> hashes;
  hashes.reserve(requests.size());
  for (const auto& r : requests) {
    hashes.push_back(AnnotationCache::content_hash(r.capability, r.body, endpoint_.model_version));
  }

  std::vector<json> results(requests.size());
  std::vector<bool> have(requests.size(), false);
  std::map<std::string, std::size_t> pending;  // hash -> first request index
  std::vector<std::size_t> to_fetch;
  for (std::size_t i = 0; i < requests.size(); ++i) {
    if (cache_ != nullptr) {
      if (auto hit = cache_->find(hashes[i])) {
        validate_for(requests[i].capability, *hit);
        results[i] = std::move(*hit);
        have[i] = true;
        ++cache_hits_;
        continue;
      }
    }
    if (pending.emplace(hashes[i], i).second) to_fetch.push_back(i);
  }

  std::vector<json> fetched(to_fetch.size());
  std::vector<std::exception_ptr> errors(to_fetch.size());
  const std::size_t width = static_cast<std::size_t>(endpoint_.max_parallel);
  for (std::size_t start = 0; start < to_fetch.size(); start += width) {
    const std::size_t stop = std::min(to_fetch.size(), start + width);
    std::vector<std::future<json>> inflight;
    for (std::size_t k = start; k < stop; ++k) {
      const Request& req = requests[to_fetch[k]];
      inflight.push_back(std::async(std::launch::async, [this, &req] { return fetch_one(req); }));
    }
    for (std::size_t k = start; k < stop; ++k) {
      try {
        fetched[k] = inflight[k - start].get();
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  }

  // Appends happen in request order so repeated runs write identical cache files.
  std::set<std::string> failed_hashes;
  std::exception_ptr protocol_error;
  for (std::size_t k = 0; k < to_fetch.size(); ++k) {
    const Request& req = requests[to_fetch[k]];
    if (errors[k]) {
      failed_hashes.insert(hashes[to_fetch[k]]);
      try {
        std::rethrow_exception(errors[k]);
      } catch (const TransportError&) {
      } catch (...) {
        if (!protocol_error) protocol_error = std::current_exception();
      }
      continue;
    }
    if (cache_ != nullptr) {
      cache_->put({hashes[to_fetch[k]], req.capability, endpoint_.model_version, fetched[k]});
    }
  }
  if (protocol_error) std::rethrow_exception(protocol_error);

  std::vector<std::size_t> failed_indices;
  std::map<std::string, std::size_t> slot;
  for (std::size_t k = 0; k < to_fetch.size(); ++k) slot.emplace(hashes[to_fetch[k]], k);
  for (std::size_t i = 0; i < requests.size(); ++i) {
    if (have[i]) continue;
    if (failed_hashes.contains(hashes[i])) {
      failed_indices.push_back(i);
      continue;
    }
    results[i] = fetched[slot.at(hashes[i])];
  }
  if (!failed_indices.empty()) {
    std::string list;
    for (std::size_t i : failed_indices) list += (list.empty() ? "" : ",") + std::to_string(i);
    throw AnnotationFailure("annotation failed after " + std::to_string(endpoint_.max_retries) +
                                " retries for request indices [" + list + "]",
                            std::move(failed_indices));
  }
  return results;
}

std::vector<metrics::SentenceAnnotation> AnnotatorClient::annotate_sentences(
    std::span<const std::string> sentences) {
  std::vector<Request> requests;
  requests.reserve(sentences.size() * 2);
  for (const auto& s : sentences) {
    requests.push_back({Capability::kSentenceSentiment, "/v1/sentiment", json{{"text", s}, {"target", nullptr}}});
    requests.push_back({Capability::kPoliticalSentence, "/v1/political",
                        json{{"text", s}, {"granularity", "sentence"}}});
  }

  std::vector<json> responses;
  try {
    responses = fetch_all(requests);
  } catch (const AnnotationFailure& failure) {
    std::vector<std::size_t> sentence_indices;
    for (std::size_t i : failure.failed_indices()) {
      if (sentence_indices.empty() || sentence_indices.back() != i / 2) sentence_indices.push_back(i / 2);
    }
    std::string list;
    for (std::size_t i : sentence_indices) list += (list.empty() ? "" : ",") + std::to_string(i);
    throw AnnotationFailure("sentence annotation failed for sentences [" + list + "]",
                            std::move(sentence_indices));
  }

  std::vector<metrics::SentenceAnnotation> out;
  out.reserve(sentences.size());
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    metrics::SentenceAnnotation a;
    a.text = sentences[i];
    a.sentiment = *parse_sentiment(responses[2 * i]["label"].get<std::string>());
    a.political = *parse_leaning(responses[2 * i + 1]["label"].get<std::string>());
    out.push_back(std::move(a));
  }
  return out;
}

Distribution3 AnnotatorClient::classify_document_leaning(std::string_view text) {
  const Request req{Capability::kPoliticalDocument, "/v1/political",
                    json{{"text", std::string(text)}, {"granularity", "document"}}};
  const json r = fetch_all(std::span(&req, 1)).front();
  const auto& c = r["confidence"];
  return Distribution3::from_weights(
      {c["left"].get<double>(), c["center"].get<double>(), c["right"].get<double>()});
}

std::vector<metrics::EntityMention> AnnotatorClient::extract_entities(std::string_view text) {
  if (text.empty()) return {};
  const Request req{Capability::kEntities, "/v1/entities", json{{"text", std::string(text)}}};
  const json r = fetch_all(std::span(&req, 1)).front();
  std::vector<metrics::EntityMention> out;
  for (const auto& e : r["entities"]) {
    std::string type = e["type"];
    if (is_excluded_entity_type(type)) continue;
    std::string surface = e["text"];
    std::string key = text::normalise_key(surface);
    if (key.empty()) continue;
    out.push_back({std::move(surface), std::move(type), std::move(key)});
  }
  return out;
}

Sentiment AnnotatorClient::target_sentiment(std::string_view sentence, std::string_view entity_key) {
  const std::pair<std::string, std::string> pair{std::string(sentence), std::string(entity_key)};
  return target_sentiments(std::span(&pair, 1)).front();
}

std::vector<Sentiment> AnnotatorClient::target_sentiments(
    std::span<const std::pair<std::string, std::string>> sentence_key_pairs) {
  std::vector<Request> requests;
  requests.reserve(sentence_key_pairs.size());
  for (const auto& [sentence, key] : sentence_key_pairs) {
    if (!text::contains_normalised(sentence, key)) {
      throw InvalidArgument("target not in sentence: '" + key + "'");
    }
    requests.push_back({Capability::kTargetSentiment, "/v1/sentiment",
                        json{{"text", sentence}, {"target", key}}});
  }
  const auto responses = fetch_all(requests);
  std::vector<Sentiment> out;
  out.reserve(responses.size());
  for (const auto& r : responses) out.push_back(*parse_sentiment(r["label"].get<std::string>()));
  return out;
}

bool AnnotatorClient::healthy() {
  try {
    const json r = transport_->get("/healthz");
    return r.is_object() && r.value("status", std::string()) == "ok";
  } catch (const Error&) {
    return false;
  }
}

}  // namespace fairsumm
