#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "fairsumm/annotate.hpp"
#include "fairsumm/error.hpp"
#include "fairsumm/sentences.hpp"
#include "fairsumm/text.hpp"
#include "fairsumm/transport.hpp"

namespace fairsumm {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("fairsumm_annotate_" + name + "_" +
                                                    std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

AnnotatorEndpoint endpoint(int retries = 2) {
  AnnotatorEndpoint e;
  e.base_url = "stub://";
  e.max_retries = retries;
  e.max_parallel = 3;
  return e;
}

std::shared_ptr<Transport> constant_stub(Sentiment s = Sentiment::kNeutral, Leaning p = Leaning::kCenter) {
  StubAnnotatorTransport::Options o;
  o.sentiment = s;
  o.political = p;
  return std::make_shared<StubAnnotatorTransport>(o);
}

std::shared_ptr<Transport> hash_stub() {
  StubAnnotatorTransport::Options o;
  o.mode = StubAnnotatorTransport::Mode::kHashPartition;
  return std::make_shared<StubAnnotatorTransport>(o);
}

// Canned answers per path, plus counters.
class ScriptedTransport : public Transport {
 public:
  std::map<std::string, json> answers;
  std::atomic<int> calls{0};
  int fail_first = 0;

  json post(const std::string& path, const json&) override {
    if (++calls <= fail_first) throw TransportError("scripted outage");
    return answers.at(path);
  }
  json get(const std::string&) override { return json{{"status", "ok"}}; }
};

class DownTransport : public Transport {
 public:
  std::atomic<int> calls{0};
  json post(const std::string&, const json&) override {
    ++calls;
    throw TransportError("connection refused");
  }
  json get(const std::string&) override { throw TransportError("connection refused"); }
};

TEST(Capability, Names) {
  for (auto c : {Capability::kSentenceSentiment, Capability::kTargetSentiment, Capability::kPoliticalSentence,
                 Capability::kPoliticalDocument, Capability::kEntities}) {
    EXPECT_EQ(parse_capability(capability_name(c)), c);
  }
  for (auto t : {"DATE", "TIME", "CARDINAL", "ORDINAL", "QUANTITY", "PERCENT", "MONEY"}) {
    EXPECT_TRUE(is_excluded_entity_type(t));
  }
  EXPECT_FALSE(is_excluded_entity_type("PERSON"));
}

TEST(Endpoint, Validation) {
  auto e = endpoint();
  e.timeout_ms = 0;
  EXPECT_THROW(e.validate(), ValidationError);
  e = endpoint();
  e.max_parallel = 0;
  EXPECT_THROW(AnnotatorClient(e, constant_stub()), ValidationError);
}

TEST(AnnotateSentences, ConstantStub) {
  AnnotatorClient client(endpoint(), constant_stub());
  const std::vector<std::string> s = {"One.", "Two.", "Three."};
  const auto out = client.annotate_sentences(s);
  ASSERT_EQ(out.size(), 3u);
  for (const auto& a : out) {
    EXPECT_EQ(a.sentiment, Sentiment::kNeutral);
    EXPECT_EQ(a.political, Leaning::kCenter);
  }
  EXPECT_EQ(out[1].text, "Two.");
}

TEST(AnnotateSentences, HashStubMatchesRecomputedRule) {
  AnnotatorClient client(endpoint(), hash_stub());
  std::vector<std::string> s;
  for (int i = 0; i < 60; ++i) s.push_back("Sentence number " + std::to_string(i) + " says something.");
  const auto out = client.annotate_sentences(s);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto sent = text::fnv1a64("sentiment||" + s[i]) % 3;
    const auto h = text::fnv1a64("political|sentence|" + s[i]);
    const std::array<double, 3> w = {1.0 + (h & 0xff), 1.0 + ((h >> 8) & 0xff), 1.0 + ((h >> 16) & 0xff)};
    const auto lean = std::max_element(w.begin(), w.end()) - w.begin();
    ASSERT_EQ(index_of(out[i].sentiment), sent);
    ASSERT_EQ(static_cast<long>(index_of(out[i].political)), lean);
  }
}

TEST(AnnotateSentences, WarmCacheServesWithEndpointDown) {
  AnnotationCache cache;
  const std::vector<std::string> s = {"Alpha.", "Beta.", "Alpha."};
  AnnotatorClient warm(endpoint(), hash_stub(), &cache);
  const auto first = warm.annotate_sentences(s);
  EXPECT_EQ(warm.transport_calls(), 4u);  // duplicates collapse onto one request

  auto down = std::make_shared<DownTransport>();
  AnnotatorClient cold(endpoint(), down, &cache);
  const auto second = cold.annotate_sentences(s);
  EXPECT_EQ(down->calls, 0);
  EXPECT_EQ(cold.cache_hits(), 6u);
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(first[i].sentiment, second[i].sentiment);
    EXPECT_EQ(first[i].political, second[i].political);
  }
}

TEST(AnnotateSentences, FailureCarriesSentenceIndices) {
  AnnotationCache cache;
  const std::vector<std::string> warm_part = {"Known."};
  AnnotatorClient(endpoint(), constant_stub(), &cache).annotate_sentences(warm_part);

  auto down = std::make_shared<DownTransport>();
  AnnotatorClient client(endpoint(2), down, &cache);
  const std::vector<std::string> s = {"New one.", "Known.", "New two."};
  try {
    client.annotate_sentences(s);
    FAIL();
  } catch (const AnnotationFailure& e) {
    EXPECT_EQ(e.failed_indices(), (std::vector<std::size_t>{0, 2}));
  }
  EXPECT_EQ(down->calls, 4 * 3);  // four distinct requests, three attempts each
}

TEST(AnnotateSentences, RetriesTransientFailures) {
  auto t = std::make_shared<ScriptedTransport>();
  t->answers["/v1/sentiment"] = {{"label", "positive"}, {"scores", {0.1, 0.1, 0.8}}, {"model_version", "x"}};
  t->answers["/v1/political"] = {
      {"label", "left"}, {"confidence", {{"left", 0.8}, {"center", 0.1}, {"right", 0.1}}}, {"model_version", "x"}};
  t->fail_first = 2;
  auto e = endpoint(2);
  e.max_parallel = 1;
  AnnotatorClient client(e, t);
  const std::vector<std::string> s = {"Only."};
  const auto out = client.annotate_sentences(s);
  EXPECT_EQ(out[0].sentiment, Sentiment::kPositive);
  EXPECT_EQ(out[0].political, Leaning::kLeft);
}

TEST(AnnotateSentences, SchemaViolationIsProtocolError) {
  auto t = std::make_shared<ScriptedTransport>();
  t->answers["/v1/sentiment"] = {{"label", "happy"}, {"scores", {0.1, 0.1, 0.8}}, {"model_version", "x"}};
  t->answers["/v1/political"] = {
      {"label", "left"}, {"confidence", {{"left", 0.8}, {"center", 0.1}, {"right", 0.1}}}, {"model_version", "x"}};
  AnnotatorClient client(endpoint(), t);
  const std::vector<std::string> s = {"Only."};
  try {
    client.annotate_sentences(s);
    FAIL();
  } catch (const ProtocolViolation& e) {
    EXPECT_NE(std::string(e.what()).find("protocol violation"), std::string::npos);
  }
}

TEST(ClassifyDocument, RenormalisesConfidence) {
  StubAnnotatorTransport::Options o;
  o.document_confidence = {0.2, 0.2, 0.6};
  AnnotatorClient a(endpoint(), std::make_shared<StubAnnotatorTransport>(o));
  auto d = a.classify_document_leaning("Some text.");
  EXPECT_DOUBLE_EQ(d[2], 0.6);
  o.document_confidence = {2, 2, 6};
  AnnotatorClient b(endpoint(), std::make_shared<StubAnnotatorTransport>(o));
  d = b.classify_document_leaning("Some text.");
  EXPECT_DOUBLE_EQ(d[0], 0.2);
  EXPECT_DOUBLE_EQ(d[1], 0.2);
  EXPECT_DOUBLE_EQ(d[2], 0.6);
}

TEST(ClassifyDocument, RejectsBadConfidence) {
  auto t = std::make_shared<ScriptedTransport>();
  t->answers["/v1/political"] = {
      {"label", "left"}, {"confidence", {{"left", -1.0}, {"center", 0.1}, {"right", 0.1}}}, {"model_version", "x"}};
  AnnotatorClient client(endpoint(), t);
  EXPECT_THROW(client.classify_document_leaning("x"), ProtocolViolation);
  t->answers["/v1/political"] = {
      {"label", "left"}, {"confidence", {{"left", 1.0}, {"centre", 0.1}, {"right", 0.1}}}, {"model_version", "x"}};
  EXPECT_THROW(client.classify_document_leaning("y"), ProtocolViolation);
}

TEST(ClassifyDocument, CacheRoundTripIsByteIdentical) {
  const auto dir = temp_dir("doc");
  const auto file = dir / "cache.jsonl";
  StubAnnotatorTransport::Options o;
  o.document_confidence = {0.123456789012345, 0.3, 0.576543210987655};
  std::string raw;
  {
    AnnotationCache cache(file);
    AnnotatorClient(endpoint(), std::make_shared<StubAnnotatorTransport>(o), &cache)
        .classify_document_leaning("Doc.");
    ASSERT_EQ(cache.size(), 1u);
  }
  AnnotationCache reopened(file);
  const auto hash = AnnotationCache::content_hash(Capability::kPoliticalDocument,
                                                  json{{"text", "Doc."}, {"granularity", "document"}},
                                                  "unversioned");
  const auto payload = reopened.find_raw(hash);
  ASSERT_TRUE(payload);
  const json fresh = StubAnnotatorTransport(o).post("/v1/political",
                                                   json{{"text", "Doc."}, {"granularity", "document"}});
  EXPECT_EQ(*payload, fresh.dump());
  fs::remove_all(dir);
}

TEST(ExtractEntities, FiltersExcludedTypes) {
  auto t = std::make_shared<ScriptedTransport>();
  t->answers["/v1/entities"] = {{"entities",
                                 {{{"text", "3 May"}, {"type", "DATE"}, {"start", 0}, {"end", 5}},
                                  {{"text", "Ada Lovelace"}, {"type", "PERSON"}, {"start", 9}, {"end", 21}}}},
                                {"model_version", "x"}};
  AnnotatorClient client(endpoint(), t);
  const auto e = client.extract_entities("3 May at Ada Lovelace");
  ASSERT_EQ(e.size(), 1u);
  EXPECT_EQ(e[0].kind, "PERSON");
  EXPECT_EQ(e[0].key, "ada lovelace");
  EXPECT_TRUE(client.extract_entities("").empty());
}

TEST(ExtractEntities, DuplicateSurfacesKeepBothMentions) {
  AnnotatorClient client(endpoint(), constant_stub());
  const auto e = client.extract_entities("Harbor Council met and then Harbor Council voted.");
  ASSERT_EQ(e.size(), 2u);
  EXPECT_EQ(e[0].key, e[1].key);
  EXPECT_EQ(e[0].key, text::normalise_key("Harbor Council"));
}

TEST(ExtractEntities, FilterHoldsForAnyServerOutputProperty) {
  AnnotatorClient client(endpoint(), hash_stub());
  std::mt19937_64 rng(40);
  const std::vector<std::string> words = {"Mayor", "Ellis", "said", "42", "the", "Port", "Authority",
                                          "on", "Monday", "1,200", "Marlow", "workers"};
  for (int i = 0; i < 100; ++i) {
    std::string s;
    for (int k = 0; k < 12; ++k) s += words[rng() % words.size()] + " ";
    for (const auto& m : client.extract_entities(s)) {
      ASSERT_FALSE(is_excluded_entity_type(m.kind));
      ASSERT_EQ(m.key, text::normalise_key(m.surface));
    }
  }
}

TEST(StubEntities, SpansPointIntoText) {
  const std::string s = "On Monday, Mayor Dana Ellis met \"Port Authority\" staff about 1,200 jobs.";
  for (const auto& e : StubAnnotatorTransport::find_entity_spans(s)) {
    EXPECT_EQ(s.substr(e.start, e.end - e.start), e.text);
  }
  const auto spans = StubAnnotatorTransport::find_entity_spans(s);
  std::vector<std::string> names;
  for (const auto& e : spans) names.push_back(e.text);
  EXPECT_EQ(names, (std::vector<std::string>{"Monday", "Mayor Dana Ellis", "Port Authority", "1,200"}));
}

TEST(TargetSentiment, ConstantAndAbsentTarget) {
  AnnotatorClient client(endpoint(), constant_stub());
  EXPECT_EQ(client.target_sentiment("Ada Lovelace spoke.", "ada lovelace"), Sentiment::kNeutral);
  try {
    client.target_sentiment("Nobody spoke.", "ada lovelace");
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("target not in sentence"), std::string::npos);
  }
}

TEST(TargetSentiment, HashStubMatchesRecomputedRule) {
  AnnotatorClient client(endpoint(), hash_stub());
  std::vector<std::pair<std::string, std::string>> pairs;
  for (int i = 0; i < 50; ++i) {
    const std::string key = "entity" + std::to_string(i % 7);
    pairs.emplace_back("Report " + std::to_string(i) + " about Entity" + std::to_string(i % 7) + ".", key);
  }
  const auto out = client.target_sentiments(pairs);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto want = text::fnv1a64("sentiment|" + pairs[i].second + "|" + pairs[i].first) % 3;
    ASSERT_EQ(index_of(out[i]), want);
  }
}

TEST(Cache, DeterministicStoreAcrossRuns) {
  const auto dir = temp_dir("det");
  std::vector<std::string> s;
  for (int i = 0; i < 40; ++i) s.push_back("Line " + std::to_string(i) + " of text.");
  for (const char* name : {"a.jsonl", "b.jsonl"}) {
    AnnotationCache cache(dir / name);
    AnnotatorClient client(endpoint(), hash_stub(), &cache);
    client.annotate_sentences(s);
    client.classify_document_leaning("Whole document.");
    client.extract_entities("Mayor Dana Ellis spoke.");
  }
  const auto a = slurp(dir / "a.jsonl");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(dir / "b.jsonl"));
  fs::remove_all(dir);
}

TEST(Cache, PutIsIdempotentAndTornTailIgnored) {
  const auto dir = temp_dir("torn");
  const auto file = dir / "c.jsonl";
  {
    AnnotationCache cache(file);
    const AnnotationRecord r{"h1", Capability::kEntities, "v", json{{"entities", json::array()}}};
    EXPECT_TRUE(cache.put(r));
    EXPECT_FALSE(cache.put(r));
  }
  std::ofstream(file, std::ios::app) << "{\"content_hash\": \"h2\", \"pay";
  AnnotationCache reopened(file);
  EXPECT_EQ(reopened.size(), 1u);
  EXPECT_TRUE(reopened.find("h1"));
  fs::remove_all(dir);
}

TEST(Cache, ContentHashSeparatesCapabilityAndVersion) {
  const json req = {{"text", "x"}};
  const auto h = AnnotationCache::content_hash(Capability::kEntities, req, "v1");
  EXPECT_EQ(h.size(), 64u);
  EXPECT_NE(h, AnnotationCache::content_hash(Capability::kEntities, req, "v2"));
  EXPECT_NE(h, AnnotationCache::content_hash(Capability::kSentenceSentiment, req, "v1"));
  EXPECT_EQ(h, AnnotationCache::content_hash(Capability::kEntities, req, "v1"));
}

TEST(Wire, GoldenFixturesValidateAndFilter) {
  const fs::path fixture = fs::path(FAIRSUMM_SOURCE_DIR) / "tests/fixtures/annotator_exchanges.jsonl";
  auto replay = std::make_shared<ReplayTransport>(fixture);
  EXPECT_EQ(replay->size(), 5u);
  AnnotatorClient client(endpoint(), replay);
  EXPECT_TRUE(client.healthy());
  const std::vector<std::string> s = {"The bill passed."};
  const auto a = client.annotate_sentences(s);
  EXPECT_EQ(a[0].sentiment, Sentiment::kNeutral);
  EXPECT_EQ(a[0].political, Leaning::kCenter);
  const auto entities = client.extract_entities("Paris on 3 May");
  ASSERT_EQ(entities.size(), 1u);
  EXPECT_EQ(entities[0].surface, "Paris");
  EXPECT_DOUBLE_EQ(client.classify_document_leaning("The bill passed.")[2], 0.6);
  EXPECT_THROW(client.extract_entities("unrecorded"), AnnotationFailure);
}

TEST(Wire, StubAnswersValidateAndRepeat) {
  for (auto stub : {constant_stub(), hash_stub()}) {
    const json s = stub->post("/v1/sentiment", {{"text", "The bill passed."}, {"target", nullptr}});
    validate_sentiment_response(s);
    const json p = stub->post("/v1/political", {{"text", "The bill passed."}, {"granularity", "sentence"}});
    validate_political_response(p);
    EXPECT_EQ(p["confidence"].size(), 3u);
    const json e = stub->post("/v1/entities", {{"text", "Paris on 3 May"}});
    validate_entities_response(e);
    EXPECT_EQ(s.dump(), stub->post("/v1/sentiment", {{"text", "The bill passed."}, {"target", nullptr}}).dump());
    EXPECT_EQ(stub->get("/healthz")["status"], "ok");
    EXPECT_THROW(stub->post("/v1/political", {{"text", "x"}, {"granularity", "page"}}), ProtocolViolation);
    EXPECT_THROW(stub->post("/v1/sentiment", {{"txt", "x"}}), ProtocolViolation);
  }
}

TEST(Wire, RecordingThenReplayReproduces) {
  const auto dir = temp_dir("rec");
  const auto file = dir / "rec.jsonl";
  auto rec = std::make_shared<RecordingTransport>(hash_stub(), file);
  const std::vector<std::string> s = {"First point.", "Second point."};
  const auto live = AnnotatorClient(endpoint(), rec).annotate_sentences(s);
  const auto replayed = AnnotatorClient(endpoint(), std::make_shared<ReplayTransport>(file)).annotate_sentences(s);
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(live[i].sentiment, replayed[i].sentiment);
    EXPECT_EQ(live[i].political, replayed[i].political);
  }
  fs::remove_all(dir);
}

class HttpServerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    server_.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"status":"ok"})", "application/json");
    });
    server_.Post("/v1/sentiment", [this](const httplib::Request& req, httplib::Response& res) {
      ++hits_;
      auth_ = req.get_header_value("Authorization");
      if (hits_ <= unavailable_for_) {
        res.status = 503;
        res.set_content(R"({"error":"model not loaded"})", "application/json");
        return;
      }
      const auto body = json::parse(req.body);
      if (!body.contains("text")) {
        res.status = 422;
        res.set_content(R"({"error":"text is required"})", "application/json");
        return;
      }
      res.set_content(json{{"label", "negative"}, {"scores", {0.7, 0.2, 0.1}}, {"model_version", "http-1"}}.dump(),
                      "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> hits_{0};
  int unavailable_for_ = 0;
  std::string auth_;
};

TEST_F(HttpServerTest, RetriesServiceUnavailable) {
  unavailable_for_ = 2;
  auto e = endpoint(2);
  e.base_url = url();
  AnnotatorClient client(e, std::make_shared<HttpTransport>(url(), 2000, "secret"));
  EXPECT_TRUE(client.healthy());
  EXPECT_EQ(client.target_sentiment("Ada spoke.", "ada"), Sentiment::kNegative);
  EXPECT_EQ(hits_, 3);
  EXPECT_EQ(auth_, "Bearer secret");
}

TEST_F(HttpServerTest, GivesUpAfterRetries) {
  unavailable_for_ = 100;
  AnnotatorClient client(endpoint(1), std::make_shared<HttpTransport>(url(), 2000));
  EXPECT_THROW(client.target_sentiment("Ada spoke.", "ada"), AnnotationFailure);
  EXPECT_EQ(hits_, 2);
}

TEST_F(HttpServerTest, UnprocessableIsProtocolViolation) {
  HttpTransport t(url(), 2000);
  EXPECT_THROW(t.post("/v1/sentiment", json{{"target", nullptr}}), ProtocolViolation);
  EXPECT_THROW(t.get("/missing"), ProtocolViolation);
}

TEST(HttpTransport, ConnectionRefusedIsTransportError) {
  // Grab a free port, then close it so nothing listens there.
  httplib::Server probe;
  const int port = probe.bind_to_any_port("127.0.0.1");
  probe.stop();
  HttpTransport t("http://127.0.0.1:" + std::to_string(port), 500);
  EXPECT_THROW(t.post("/v1/sentiment", json{{"text", "x"}}), TransportError);
  AnnotatorClient client(endpoint(0), std::make_shared<HttpTransport>("http://127.0.0.1:" + std::to_string(port), 500));
  EXPECT_FALSE(client.healthy());
}

TEST(Sentences, FeedAnnotatorInOrder) {
  AnnotatorClient client(endpoint(), hash_stub());
  const std::string summary = "Dr. Ellis opened the bridge. Critics objected! Was it safe?";
  std::vector<std::string> s;
  for (const auto& x : split_sentences(summary)) s.push_back(x.text);
  ASSERT_EQ(s.size(), 3u);
  const auto out = client.annotate_sentences(s);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(out[i].text, s[i]);
}

}  // namespace
}  // namespace fairsumm
