#include "fairsumm/transport.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>

#include <httplib.h>

#include "fairsumm/error.hpp"
#include "fairsumm/text.hpp"

namespace fairsumm {

using nlohmann::json;

namespace {

json parse_body(const std::string& body, const std::string& path) {
  try {
    return json::parse(body);
  } catch (const json::exception&) {
    throw ProtocolViolation("response from " + path + " is not valid JSON");
  }
}

std::string error_message(const std::string& body) {
  try {
    const auto j = json::parse(body);
    if (j.is_object() && j.contains("error") && j["error"].is_string()) return j["error"];
  } catch (const json::exception&) {
  }
  return body;
}

json check_status(const httplib::Result& res, const std::string& path) {
  if (!res) throw TransportError("request to " + path + " failed: " + httplib::to_string(res.error()));
  const int status = res->status;
  if (status == 200) return parse_body(res->body, path);
  const std::string detail = path + " returned HTTP " + std::to_string(status) + ": " +
                             error_message(res->body);
  if (status >= 500) throw TransportError(detail);
  throw ProtocolViolation(detail);
}

std::string replay_key(const std::string& method, const std::string& path, const json& body) {
  return method + " " + path + "\n" + body.dump();
}

}  // namespace

HttpTransport::HttpTransport(std::string base_url, int timeout_ms, std::string bearer_token)
    : base_url_(std::move(base_url)), timeout_ms_(timeout_ms), bearer_token_(std::move(bearer_token)) {
  if (base_url_.empty()) throw InvalidArgument("endpoint base_url is empty");
  if (timeout_ms_ <= 0) throw InvalidArgument("timeout_ms must be positive");
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

json HttpTransport::post(const std::string& path, const json& body) {
  httplib::Client client(base_url_);
  const auto sec = timeout_ms_ / 1000;
  const auto usec = (timeout_ms_ % 1000) * 1000;
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);
  if (!bearer_token_.empty()) client.set_bearer_token_auth(bearer_token_);
  return check_status(client.Post(path, body.dump(), "application/json"), path);
}

json HttpTransport::get(const std::string& path) {
  httplib::Client client(base_url_);
  const auto sec = timeout_ms_ / 1000;
  const auto usec = (timeout_ms_ % 1000) * 1000;
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  if (!bearer_token_.empty()) client.set_bearer_token_auth(bearer_token_);
  return check_status(client.Get(path), path);
}

// ---------------------------------------------------------------------------
// Stub annotator

StubAnnotatorTransport::StubAnnotatorTransport(Options options) : options_(std::move(options)) {}

std::string StubAnnotatorTransport::model_version() const {
  return options_.mode == Mode::kConstant ? "stub-constant-1" : "stub-hash-1";
}

std::size_t StubAnnotatorTransport::hash_sentiment_index(std::string_view text,
                                                         std::string_view target) {
  std::string key = "sentiment|";
  key += target;
  key += '|';
  key += text;
  return static_cast<std::size_t>(text::fnv1a64(key) % 3);
}

std::array<double, 3> StubAnnotatorTransport::hash_political_weights(std::string_view text,
                                                                     std::string_view granularity) {
  std::string key = "political|";
  key += granularity;
  key += '|';
  key += text;
  const std::uint64_t h = text::fnv1a64(key);
  return {1.0 + static_cast<double>(h & 0xff), 1.0 + static_cast<double>((h >> 8) & 0xff),
          1.0 + static_cast<double>((h >> 16) & 0xff)};
}

std::string StubAnnotatorTransport::hash_entity_type(std::string_view surface) {
  static const std::array<const char*, 5> kTypes = {"PERSON", "ORG", "GPE", "NORP", "DATE"};
  return kTypes[text::fnv1a64(std::string("entity|") + std::string(surface)) % kTypes.size()];
}

std::vector<StubAnnotatorTransport::RawEntity> StubAnnotatorTransport::find_entity_spans(
    std::string_view s) {
  static const std::set<std::string, std::less<>> kStop = {
      "The",  "A",     "An",    "In",   "On",    "At",     "But",       "And",   "Or",
      "He",   "She",   "It",    "They", "We",    "I",      "This",      "That",  "These",
      "Those", "His",  "Her",   "Their", "Its",  "Our",    "After",     "Before", "While",
      "When", "If",    "As",    "For",  "With",  "From",   "By",        "To",    "Of",
      "Meanwhile", "However", "Yesterday", "Today", "Critics", "Officials", "Some", "Many"};

  auto is_alnum = [](char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
  };
  auto is_ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };

  std::vector<RawEntity> out;
  std::optional<RawEntity> run;
  bool run_open = false;  // previous word was capitalised and not followed by punctuation
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_ws(s[i])) ++i;
    if (i >= s.size()) break;
    const std::size_t wb = i;
    while (i < s.size() && !is_ws(s[i])) ++i;
    const std::size_t we = i;

    std::size_t cb = wb;
    std::size_t ce = we;
    while (cb < ce && !is_alnum(s[cb])) ++cb;
    while (ce > cb && !is_alnum(s[ce - 1])) --ce;
    const bool leading_punct = cb > wb;
    const bool trailing_punct = ce < we;
    if (cb == ce) {
      if (run) out.push_back(*run);
      run.reset();
      run_open = false;
      continue;
    }
    const std::string_view core = s.substr(cb, ce - cb);
    const bool numeric = std::all_of(core.begin(), core.end(), [](char c) {
      return (c >= '0' && c <= '9') || c == ',' || c == '.';
    });
    const bool capital = core[0] >= 'A' && core[0] <= 'Z' && !kStop.contains(core);

    if (capital) {
      if (run && run_open && !leading_punct) {
        run->end = ce;
        run->text = std::string(s.substr(run->start, run->end - run->start));
      } else {
        if (run) out.push_back(*run);
        run = RawEntity{std::string(core), cb, ce, false};
      }
      run_open = !trailing_punct;
      continue;
    }
    if (run) out.push_back(*run);
    run.reset();
    run_open = false;
    if (numeric) out.push_back(RawEntity{std::string(core), cb, ce, true});
  }
  if (run) out.push_back(*run);
  return out;
}

json StubAnnotatorTransport::post(const std::string& path, const json& body) {
  if (!body.is_object() || !body.contains("text") || !body["text"].is_string()) {
    throw ProtocolViolation("HTTP 422: request body must carry a string 'text'");
  }
  const std::string text = body["text"];
  static constexpr std::array<const char*, 3> kLeaning = {"left", "center", "right"};
  static constexpr std::array<const char*, 3> kSentiment = {"negative", "neutral", "positive"};

  if (path == "/v1/sentiment") {
    const std::string target =
        body.contains("target") && body["target"].is_string() ? body["target"].get<std::string>() : "";
    const std::size_t label = options_.mode == Mode::kConstant
                                  ? index_of(options_.sentiment)
                                  : hash_sentiment_index(text, target);
    std::array<double, 3> scores = {0.1, 0.1, 0.1};
    scores[label] = 0.8;
    return json{{"label", kSentiment[label]}, {"scores", scores}, {"model_version", model_version()}};
  }

  if (path == "/v1/political") {
    const std::string granularity = body.value("granularity", std::string("sentence"));
    if (granularity != "sentence" && granularity != "document") {
      throw ProtocolViolation("HTTP 422: granularity must be 'sentence' or 'document'");
    }
    std::array<double, 3> weights{};
    if (options_.mode == Mode::kHashPartition) {
      weights = hash_political_weights(text, granularity);
    } else if (granularity == "document") {
      weights = options_.document_confidence;
    } else {
      weights = {0.1, 0.1, 0.1};
      weights[index_of(options_.political)] = 0.8;
    }
    const auto label = static_cast<std::size_t>(
        std::max_element(weights.begin(), weights.end()) - weights.begin());
    return json{{"label", kLeaning[label]},
                {"confidence", {{"left", weights[0]}, {"center", weights[1]}, {"right", weights[2]}}},
                {"model_version", model_version()}};
  }

  if (path == "/v1/entities") {
    json entities = json::array();
    for (const auto& e : find_entity_spans(text)) {
      std::string type;
      if (e.numeric) {
        type = "CARDINAL";
      } else if (options_.mode == Mode::kConstant) {
        type = options_.entity_type;
      } else {
        type = hash_entity_type(e.text);
      }
      entities.push_back({{"text", e.text}, {"type", type}, {"start", e.start}, {"end", e.end}});
    }
    return json{{"entities", entities}, {"model_version", model_version()}};
  }

  throw ProtocolViolation("HTTP 404: unknown path " + path);
}

json StubAnnotatorTransport::get(const std::string& path) {
  if (path == "/healthz") return json{{"status", "ok"}};
  throw ProtocolViolation("HTTP 404: unknown path " + path);
}

// ---------------------------------------------------------------------------
// Fixture replay / recording

ReplayTransport::ReplayTransport(const std::filesystem::path& fixture) {
  std::ifstream in(fixture);
  if (!in) throw InvalidArgument("cannot open replay fixture " + fixture.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json rec = json::parse(line);
    const std::string method = rec.value("method", std::string("POST"));
    responses_[replay_key(method, rec.at("path").get<std::string>(), rec.value("request", json()))] =
        rec.at("response");
  }
}

json ReplayTransport::post(const std::string& path, const json& body) {
  auto it = responses_.find(replay_key("POST", path, body));
  if (it == responses_.end()) throw TransportError("no recorded response for POST " + path);
  return it->second;
}

json ReplayTransport::get(const std::string& path) {
  auto it = responses_.find(replay_key("GET", path, json()));
  if (it == responses_.end()) throw TransportError("no recorded response for GET " + path);
  return it->second;
}

RecordingTransport::RecordingTransport(std::shared_ptr<Transport> inner, std::filesystem::path fixture)
    : inner_(std::move(inner)), fixture_(std::move(fixture)) {}

json RecordingTransport::post(const std::string& path, const json& body) {
  json response = inner_->post(path, body);
  std::lock_guard lock(mutex_);
  std::ofstream out(fixture_, std::ios::app);
  out << json{{"method", "POST"}, {"path", path}, {"request", body}, {"response", response}}.dump()
      << '\n';
  return response;
}

json RecordingTransport::get(const std::string& path) {
  json response = inner_->get(path);
  std::lock_guard lock(mutex_);
  std::ofstream out(fixture_, std::ios::app);
  out << json{{"method", "GET"}, {"path", path}, {"request", json()}, {"response", response}}.dump()
      << '\n';
  return response;
}

}  // namespace fairsumm
