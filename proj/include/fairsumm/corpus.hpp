#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fairsumm/types.hpp"

namespace fairsumm::corpus {

using Date = std::chrono::sys_days;

/// Parses an ISO-8601 calendar date "YYYY-MM-DD". Returns nullopt on malformed or invalid dates.
std::optional<Date> parse_date(std::string_view iso);
std::string format_date(Date d);

struct Article {
  std::string id;
  std::string publisher;
  std::string title;
  Date date{};
  std::string section;
  std::string body;
  Leaning leaning = Leaning::kCenter;
  std::size_t word_count = 0;
};

struct Event {
  std::string id;
  std::vector<std::string> article_ids;
  std::array<std::size_t, 3> leaning_counts{};
  std::size_t total_words = 0;
  /// Earliest member date.
  Date date{};
};

struct CorpusConfig {
  int time_window_days = 3;
  double similarity_threshold = 0.3;
  std::size_t max_event_words = 5000;
  std::set<std::string> excluded_sections = {"entertainment", "sport", "sports"};
  std::size_t min_articles = 3;

  /// Throws ValidationError when a field is out of range.
  void validate() const;
};

/// Article lookup by id.
class ArticleStore {
 public:
  ArticleStore() = default;
  explicit ArticleStore(std::vector<Article> articles);

  void add(Article article);
  const Article& at(std::string_view id) const;
  const Article* find(std::string_view id) const;
  std::size_t size() const noexcept { return articles_.size(); }
  const std::vector<Article>& articles() const noexcept { return articles_; }

  /// Rebuilds the counts and word total of an event from its member list.
  Event make_event(std::string id, std::vector<std::string> article_ids) const;

 private:
  std::vector<Article> articles_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

struct SkipRecord {
  std::size_t line = 0;
  std::string id;
  std::string reason;
};

struct DropRecord {
  std::string event_id;
  std::string reason;
};

struct ReadResult {
  std::vector<Article> articles;
  std::vector<SkipRecord> skipped;
  std::size_t lines = 0;
};

/// Reads JSON-lines articles. Malformed lines and unparseable dates are skipped and reported.
/// word_count is recomputed from body regardless of the value on the line.
ReadResult read_articles(std::istream& in);

/// One JSON object per line: {"id", "article_ids", "leaning_counts": {left, center, right},
/// "total_words", "date"}.
void write_events(std::ostream& out, std::span<const Event> events);
std::vector<Event> read_events(std::istream& in);
void write_drop_report(std::ostream& out, std::span<const DropRecord> drops);
void write_skip_report(std::ostream& out, std::span<const SkipRecord> skips);

/// Events in ascending order of their earliest (date, id) member, ids "E0001", "E0002", ...
///
/// Articles are visited in ascending (date, id) order. An article may join a cluster
/// when it lies within time_window_days of every member and its TF-IDF cosine to
/// the cluster centroid is at least similarity_threshold. When several clusters
/// qualify they are merged together with the article.
std::vector<Event> cluster_articles(std::span<const Article> articles, const CorpusConfig& config);

struct FilterResult {
  std::vector<Event> retained;
  std::vector<DropRecord> dropped;
};

/// Keeps events with all three leanings, total words strictly below the cap, no
/// excluded section, and at least min_articles members. Reasons for every failed
/// predicate are joined with "; ".
FilterResult filter_events(std::span<const Event> events, const ArticleStore& store,
                           const CorpusConfig& config);

enum class InputProportion { kArticleCount, kWordCount };

/// Per-leaning proportion over the political support (Left, Center, Right).
Distribution3 leaning_distribution(const Event& event);
Distribution3 leaning_distribution(const Event& event, const ArticleStore& store,
                                   InputProportion basis);

/// Exactly min-count articles per leaning, chosen uniformly per seed; member order
/// follows the input event.
Event balanced_subset(const Event& event, const ArticleStore& store, std::uint64_t seed);

struct Ordering {
  enum class Kind { kRandom, kLeadLeft, kLeadCenter, kLeadRight };
  Kind kind = Kind::kRandom;
  std::uint64_t seed = 0;

  /// "random", "lead_left", "lead_center", "lead_right".
  std::string_view name() const noexcept;
  static std::optional<Kind> parse_kind(std::string_view name) noexcept;
  static std::string_view kind_name(Kind kind) noexcept;
};

/// Random: seeded permutation. LeadX: a seeded-uniform article of leaning X first,
/// the rest in seeded-random order.
std::vector<std::string> order_articles(const Event& event, const ArticleStore& store,
                                        const Ordering& ordering);

}  // namespace fairsumm::corpus
