#include <gtest/gtest.h>

#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "fairsumm/corpus.hpp"
#include "fairsumm/error.hpp"
#include "fairsumm/text.hpp"
#include "oracles.hpp"

namespace fairsumm::corpus {
namespace {

Article make(std::string id, std::string date, Leaning l, std::string body, std::string section = "news") {
  Article a;
  a.id = std::move(id);
  a.publisher = "pub";
  a.date = *parse_date(date);
  a.leaning = l;
  a.section = std::move(section);
  a.body = std::move(body);
  a.word_count = text::whitespace_word_count(a.body);
  return a;
}

std::set<std::set<std::string>> as_partition(const std::vector<Event>& events) {
  std::set<std::set<std::string>> out;
  for (const auto& e : events) out.emplace(e.article_ids.begin(), e.article_ids.end());
  return out;
}

TEST(Dates, ParseAndFormat) {
  EXPECT_EQ(format_date(*parse_date("2024-02-29")), "2024-02-29");
  EXPECT_FALSE(parse_date("2023-02-29"));
  EXPECT_FALSE(parse_date("2024-13-01"));
  EXPECT_FALSE(parse_date("2024-1-01"));
  EXPECT_FALSE(parse_date("yesterday"));
}

TEST(ReadArticles, SkipsMalformedLinesAndRecountsWords) {
  std::istringstream in(
      R"({"id":"a","publisher":"P","title":"t","date":"2024-01-02","section":"","body":"one two three","leaning":"left","word_count":99})"
      "\n"
      "not json\n"
      R"({"id":"b","publisher":"P","date":"2024-99-02","body":"x","leaning":"left"})"
      "\n"
      R"({"id":"c","publisher":"P","date":"2024-01-02","body":"x","leaning":"far"})"
      "\n\n");
  const auto r = read_articles(in);
  ASSERT_EQ(r.articles.size(), 1u);
  EXPECT_EQ(r.articles[0].word_count, 3u);
  ASSERT_EQ(r.skipped.size(), 3u);
  EXPECT_EQ(r.skipped[0].line, 2u);
  EXPECT_EQ(r.skipped[1].id, "b");
  EXPECT_NE(r.skipped[1].reason.find("date"), std::string::npos);
}

TEST(Events, JsonRoundTrip) {
  Event e;
  e.id = "E0001";
  e.article_ids = {"a", "b"};
  e.leaning_counts = {1, 0, 1};
  e.total_words = 12;
  e.date = *parse_date("2024-03-04");
  std::stringstream s;
  write_events(s, std::span<const Event>(&e, 1));
  const auto back = read_events(s);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].article_ids, e.article_ids);
  EXPECT_EQ(back[0].leaning_counts, e.leaning_counts);
  EXPECT_EQ(back[0].date, e.date);
}

TEST(Cluster, IdenticalSameDayFormOne) {
  const std::vector<Article> arts = {make("a", "2024-01-01", Leaning::kLeft, "the storm flooded the town"),
                                     make("b", "2024-01-01", Leaning::kRight, "the storm flooded the town")};
  const auto events = cluster_articles(arts, CorpusConfig{});
  ASSERT_EQ(events.size(), 1u);
  EXPECT_EQ(events[0].article_ids.size(), 2u);
}

TEST(Cluster, TenDaysApartStaySeparate) {
  const std::vector<Article> arts = {make("a", "2024-01-01", Leaning::kLeft, "the storm flooded the town"),
                                     make("b", "2024-01-11", Leaning::kRight, "the storm flooded the town")};
  EXPECT_EQ(cluster_articles(arts, CorpusConfig{}).size(), 2u);
}

TEST(Cluster, EmptyInput) { EXPECT_TRUE(cluster_articles({}, CorpusConfig{}).empty()); }

TEST(Cluster, EventDateIsEarliestMemberAndIdsSequential) {
  const std::vector<Article> arts = {make("z", "2024-01-03", Leaning::kLeft, "storm flooded town river"),
                                     make("y", "2024-01-01", Leaning::kRight, "storm flooded town river"),
                                     make("q", "2024-01-02", Leaning::kRight, "budget vote senate tax")};
  const auto events = cluster_articles(arts, CorpusConfig{});
  ASSERT_EQ(events.size(), 2u);
  EXPECT_EQ(events[0].id, "E0001");
  EXPECT_EQ(events[1].id, "E0002");
  EXPECT_EQ(format_date(events[0].date), "2024-01-01");
  EXPECT_EQ(events[0].article_ids, (std::vector<std::string>{"y", "z"}));
}

TEST(Cluster, PlantedTopicsRecovered) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto arts = oracle::planted_corpus(seed);
    const auto events = cluster_articles(arts, CorpusConfig{});
    EXPECT_EQ(as_partition(events), oracle::planted_partition(arts)) << "seed " << seed;
    for (const auto& e : events) {
      for (std::size_t c : e.leaning_counts) EXPECT_GE(c, 1u);
    }
  }
}

// Random corpora over a small shared vocabulary so that topics overlap.
std::vector<Article> random_corpus(std::mt19937_64& rng, int n) {
  std::uniform_int_distribution<int> day(0, 14), word(0, 11), len(4, 10), lean(0, 2);
  std::vector<Article> out;
  for (int i = 0; i < n; ++i) {
    std::string body;
    const int k = len(rng);
    for (int w = 0; w < k; ++w) body += "w" + std::to_string(word(rng)) + " ";
    auto d = *parse_date("2024-06-01") + std::chrono::days(day(rng));
    Article a = make("r" + std::to_string(i), format_date(d), static_cast<Leaning>(lean(rng)), body);
    out.push_back(std::move(a));
  }
  return out;
}

TEST(Cluster, PartitionAndWindowProperty) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto arts = random_corpus(rng, 25);
    CorpusConfig cfg;
    cfg.similarity_threshold = 0.2;
    const auto events = cluster_articles(arts, cfg);
    std::multiset<std::string> seen;
    std::size_t words = 0;
    for (const auto& e : events) {
      seen.insert(e.article_ids.begin(), e.article_ids.end());
      words += e.total_words;
    }
    std::multiset<std::string> input;
    std::size_t input_words = 0;
    for (const auto& a : arts) {
      input.insert(a.id);
      input_words += a.word_count;
    }
    ASSERT_EQ(seen, input);
    ASSERT_EQ(words, input_words);

    std::map<std::string, const Article*> by_id;
    for (const auto& a : arts) by_id[a.id] = &a;
    for (const auto& e : events) {
      for (const auto& x : e.article_ids) {
        for (const auto& y : e.article_ids) {
          const auto gap = by_id[x]->date - by_id[y]->date;
          ASSERT_LE(std::abs(gap.count()), cfg.time_window_days);
        }
      }
    }
  }
}

// Counts random corpora where a smaller window joins two articles that the larger
// window keeps apart. Centroid clustering is order dependent, so this is measured
// rather than asserted to be zero.
TEST(Cluster, MonotoneWindowMeasured) {
  std::mt19937_64 rng(17);
  int violations = 0;
  const int trials = 200;
  for (int trial = 0; trial < trials; ++trial) {
    const auto arts = random_corpus(rng, 20);
    CorpusConfig wide, narrow;
    wide.similarity_threshold = narrow.similarity_threshold = 0.2;
    wide.time_window_days = 3;
    narrow.time_window_days = 1;
    std::map<std::string, std::size_t> wide_of;
    const auto w = cluster_articles(arts, wide);
    for (std::size_t i = 0; i < w.size(); ++i) {
      for (const auto& id : w[i].article_ids) wide_of[id] = i;
    }
    bool bad = false;
    for (const auto& e : cluster_articles(arts, narrow)) {
      for (const auto& id : e.article_ids) bad |= wide_of[id] != wide_of[e.article_ids.front()];
    }
    violations += bad ? 1 : 0;
  }
  RecordProperty("monotone_window_violations", violations);
  std::cout << "monotone window violations: " << violations << " / " << trials << "\n";
  SUCCEED();
}

ArticleStore store_of(const std::vector<std::pair<Leaning, std::size_t>>& spec,
                      const std::string& section = "politics") {
  ArticleStore store;
  int i = 0;
  for (const auto& [l, words] : spec) {
    std::string body;
    for (std::size_t w = 0; w < words; ++w) body += "w ";
    store.add(make("a" + std::to_string(i++), "2024-01-01", l, body, section));
  }
  return store;
}

Event whole(const ArticleStore& store) {
  std::vector<std::string> ids;
  for (const auto& a : store.articles()) ids.push_back(a.id);
  return store.make_event("E1", ids);
}

TEST(Filter, MissingLeaning) {
  const auto store = store_of({{Leaning::kLeft, 10}, {Leaning::kLeft, 10}, {Leaning::kCenter, 10}});
  const Event e = whole(store);
  const auto r = filter_events(std::span<const Event>(&e, 1), store, CorpusConfig{});
  ASSERT_EQ(r.dropped.size(), 1u);
  EXPECT_EQ(r.dropped[0].reason, "missing Right");
}

TEST(Filter, WordCapIsStrict) {
  const auto over = store_of({{Leaning::kLeft, 2000}, {Leaning::kCenter, 2000}, {Leaning::kRight, 1001}});
  const Event e1 = whole(over);
  auto r = filter_events(std::span<const Event>(&e1, 1), over, CorpusConfig{});
  ASSERT_EQ(r.dropped.size(), 1u);
  EXPECT_EQ(r.dropped[0].reason, "over word cap");

  const auto exact = store_of({{Leaning::kLeft, 2000}, {Leaning::kCenter, 2000}, {Leaning::kRight, 1000}});
  const Event e2 = whole(exact);
  r = filter_events(std::span<const Event>(&e2, 1), exact, CorpusConfig{});
  EXPECT_EQ(r.dropped.size(), 1u);
}

TEST(Filter, RetainsGoodEvent) {
  const auto store = store_of({{Leaning::kLeft, 1500}, {Leaning::kCenter, 1500}, {Leaning::kRight, 1000}});
  const Event e = whole(store);
  const auto r = filter_events(std::span<const Event>(&e, 1), store, CorpusConfig{});
  EXPECT_EQ(r.retained.size(), 1u);
  EXPECT_TRUE(r.dropped.empty());
}

TEST(Filter, ExcludedSectionCaseInsensitiveAndReasonsJoined) {
  const auto store = store_of({{Leaning::kLeft, 10}, {Leaning::kLeft, 10}}, "Sport");
  const Event e = whole(store);
  const auto r = filter_events(std::span<const Event>(&e, 1), store, CorpusConfig{});
  ASSERT_EQ(r.dropped.size(), 1u);
  EXPECT_EQ(r.dropped[0].reason, "missing Center, Right; excluded section: sport; too few articles");
}

TEST(Filter, RetainedSatisfyAllPredicatesProperty) {
  std::mt19937_64 rng(8);
  CorpusConfig cfg;
  cfg.max_event_words = 60;
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::pair<Leaning, std::size_t>> spec;
    const int n = 1 + static_cast<int>(rng() % 6);
    for (int i = 0; i < n; ++i) spec.emplace_back(static_cast<Leaning>(rng() % 3), 5 + rng() % 15);
    const auto store = store_of(spec, rng() % 5 == 0 ? "entertainment" : "politics");
    const Event e = whole(store);
    const auto r = filter_events(std::span<const Event>(&e, 1), store, cfg);
    ASSERT_EQ(r.retained.size() + r.dropped.size(), 1u);
    const bool ok = e.leaning_counts[0] && e.leaning_counts[1] && e.leaning_counts[2] &&
                    e.total_words < cfg.max_event_words && e.article_ids.size() >= 3 &&
                    store.articles()[0].section == "politics";
    ASSERT_EQ(r.retained.size() == 1, ok);
  }
}

TEST(LeaningDistribution, Examples) {
  Event e;
  e.article_ids = {"x"};
  e.leaning_counts = {3, 1, 2};
  const auto d = leaning_distribution(e);
  EXPECT_DOUBLE_EQ(d[0], 0.5);
  EXPECT_DOUBLE_EQ(d[1], 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(d[2], 1.0 / 3.0);
  e.leaning_counts = {2, 1, 1};
  EXPECT_DOUBLE_EQ(leaning_distribution(e)[0], 0.5);
  e.leaning_counts = {0, 0, 0};
  EXPECT_THROW(leaning_distribution(e), InvalidArgument);
}

TEST(LeaningDistribution, WordCountBasis) {
  const auto store = store_of({{Leaning::kLeft, 10}, {Leaning::kCenter, 30}, {Leaning::kRight, 60}});
  const Event e = whole(store);
  const auto d = leaning_distribution(e, store, InputProportion::kWordCount);
  EXPECT_NEAR(d[0], 0.1, 1e-12);
  EXPECT_NEAR(d[2], 0.6, 1e-12);
  const auto c = leaning_distribution(e, store, InputProportion::kArticleCount);
  EXPECT_NEAR(c[1], 1.0 / 3.0, 1e-12);
}

TEST(LeaningDistribution, SumsToOneProperty) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 1000; ++i) {
    Event e;
    e.article_ids = {"x"};
    e.leaning_counts = {rng() % 50, rng() % 50, 1 + rng() % 50};
    const auto d = leaning_distribution(e);
    EXPECT_NEAR(d[0] + d[1] + d[2], 1.0, 1e-12);
  }
}

TEST(BalancedSubset, Examples) {
  const auto even = store_of({{Leaning::kLeft, 5}, {Leaning::kLeft, 5}, {Leaning::kCenter, 5},
                              {Leaning::kCenter, 5}, {Leaning::kRight, 5}, {Leaning::kRight, 5}});
  const Event e = whole(even);
  const auto b = balanced_subset(e, even, 1);
  EXPECT_EQ(std::set<std::string>(b.article_ids.begin(), b.article_ids.end()),
            std::set<std::string>(e.article_ids.begin(), e.article_ids.end()));

  const auto skew = store_of({{Leaning::kLeft, 5}, {Leaning::kLeft, 5}, {Leaning::kLeft, 5},
                              {Leaning::kCenter, 5}, {Leaning::kRight, 5}, {Leaning::kRight, 5}});
  const Event s = whole(skew);
  const auto b1 = balanced_subset(s, skew, 9);
  EXPECT_EQ(b1.leaning_counts, (std::array<std::size_t, 3>{1, 1, 1}));
  EXPECT_EQ(b1.article_ids, balanced_subset(s, skew, 9).article_ids);

  const auto missing = store_of({{Leaning::kLeft, 5}, {Leaning::kCenter, 5}});
  EXPECT_THROW(balanced_subset(whole(missing), missing, 0), InvalidArgument);
}

TEST(BalancedSubset, CoversSubsets) {
  // (4, 2, 3) -> (2, 2, 2); C(4,2) * C(3,2) = 18 possible subsets.
  const auto store = store_of({{Leaning::kLeft, 5}, {Leaning::kLeft, 5}, {Leaning::kLeft, 5},
                               {Leaning::kLeft, 5}, {Leaning::kCenter, 5}, {Leaning::kCenter, 5},
                               {Leaning::kRight, 5}, {Leaning::kRight, 5}, {Leaning::kRight, 5}});
  const Event e = whole(store);
  std::set<std::vector<std::string>> seen;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto b = balanced_subset(e, store, seed);
    ASSERT_EQ(b.leaning_counts, (std::array<std::size_t, 3>{2, 2, 2}));
    // Member order follows the input event.
    std::vector<std::string> ids = b.article_ids;
    ASSERT_TRUE(std::is_sorted(ids.begin(), ids.end()));
    seen.insert(ids);
  }
  EXPECT_GT(seen.size(), 10u);
  EXPECT_LE(seen.size(), 18u);
}

TEST(Ordering, Examples) {
  const auto one = store_of({{Leaning::kLeft, 3}});
  for (auto k : {Ordering::Kind::kRandom, Ordering::Kind::kLeadLeft}) {
    EXPECT_EQ(order_articles(whole(one), one, {k, 4}), (std::vector<std::string>{"a0"}));
  }
  const auto three = store_of({{Leaning::kLeft, 3}, {Leaning::kCenter, 3}, {Leaning::kRight, 3}});
  EXPECT_EQ(order_articles(whole(three), three, {Ordering::Kind::kLeadCenter, 0}).front(), "a1");
  EXPECT_THROW(order_articles(whole(one), one, {Ordering::Kind::kLeadRight, 0}), InvalidArgument);

  const auto five = store_of({{Leaning::kLeft, 3}, {Leaning::kCenter, 3}, {Leaning::kRight, 3},
                              {Leaning::kLeft, 3}, {Leaning::kRight, 3}});
  EXPECT_EQ(order_articles(whole(five), five, {Ordering::Kind::kRandom, 7}),
            order_articles(whole(five), five, {Ordering::Kind::kRandom, 7}));
}

TEST(Ordering, NamesRoundTrip) {
  for (auto k : {Ordering::Kind::kRandom, Ordering::Kind::kLeadLeft, Ordering::Kind::kLeadCenter,
                 Ordering::Kind::kLeadRight}) {
    EXPECT_EQ(Ordering::parse_kind(Ordering::kind_name(k)), k);
  }
  EXPECT_FALSE(Ordering::parse_kind("lead_centre"));
}

TEST(Ordering, PermutationProperty) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::pair<Leaning, std::size_t>> spec = {
        {Leaning::kLeft, 3}, {Leaning::kCenter, 3}, {Leaning::kRight, 3}};
    const int extra = static_cast<int>(rng() % 5);
    for (int i = 0; i < extra; ++i) spec.emplace_back(static_cast<Leaning>(rng() % 3), 3);
    const auto store = store_of(spec);
    const Event e = whole(store);
    const auto kind = static_cast<Ordering::Kind>(rng() % 4);
    const auto out = order_articles(e, store, {kind, rng()});
    ASSERT_EQ(std::multiset<std::string>(out.begin(), out.end()),
              std::multiset<std::string>(e.article_ids.begin(), e.article_ids.end()));
    if (kind != Ordering::Kind::kRandom) {
      const auto want = static_cast<Leaning>(static_cast<int>(kind) - 1);
      ASSERT_EQ(store.at(out.front()).leaning, want);
    }
  }
}

TEST(CorpusConfig, Validation) {
  CorpusConfig c;
  c.time_window_days = -1;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.similarity_threshold = 1.5;
  EXPECT_THROW(c.validate(), ValidationError);
}

}  // namespace
}  // namespace fairsumm::corpus
