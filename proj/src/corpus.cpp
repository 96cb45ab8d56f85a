#include "fairsumm/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "fairsumm/error.hpp"
#include "fairsumm/rng.hpp"
#include "fairsumm/text.hpp"
#include "fairsumm/tfidf.hpp"

namespace fairsumm::corpus {

using nlohmann::json;

std::optional<Date> parse_date(std::string_view iso) {
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') return std::nullopt;
  auto digits = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
      if (iso[i] < '0' || iso[i] > '9') return std::nullopt;
      v = v * 10 + (iso[i] - '0');
    }
    return v;
  };
  const auto y = digits(0, 4);
  const auto m = digits(5, 2);
  const auto d = digits(8, 2);
  if (!y || !m || !d) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{*y},
                                        std::chrono::month{static_cast<unsigned>(*m)},
                                        std::chrono::day{static_cast<unsigned>(*d)}};
  if (!ymd.ok()) return std::nullopt;
  return std::chrono::sys_days{ymd};
}

std::string format_date(Date d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

void CorpusConfig::validate() const {
  if (time_window_days < 0) throw ValidationError("time_window_days must be >= 0");
  if (!(similarity_threshold >= 0.0 && similarity_threshold <= 1.0)) {
    throw ValidationError("similarity_threshold must lie in [0, 1]");
  }
  if (max_event_words == 0) throw ValidationError("max_event_words must be positive");
}

ArticleStore::ArticleStore(std::vector<Article> articles) {
  for (auto& a : articles) add(std::move(a));
}

void ArticleStore::add(Article article) {
  if (index_.contains(article.id)) throw InvalidArgument("duplicate article id: " + article.id);
  index_.emplace(article.id, articles_.size());
  articles_.push_back(std::move(article));
}

const Article* ArticleStore::find(std::string_view id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &articles_[it->second];
}

const Article& ArticleStore::at(std::string_view id) const {
  const Article* a = find(id);
  if (a == nullptr) throw InvalidArgument("unknown article id: " + std::string(id));
  return *a;
}

Event ArticleStore::make_event(std::string id, std::vector<std::string> article_ids) const {
  Event e;
  e.id = std::move(id);
  bool first = true;
  for (const auto& aid : article_ids) {
    const Article& a = at(aid);
    ++e.leaning_counts[index_of(a.leaning)];
    e.total_words += a.word_count;
    if (first || a.date < e.date) e.date = a.date;
    first = false;
  }
  e.article_ids = std::move(article_ids);
  return e;
}

ReadResult read_articles(std::istream& in) {
  ReadResult result;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++result.lines;
    std::string id;
    try {
      const json j = json::parse(line);
      if (!j.is_object()) throw InvalidArgument("line is not a JSON object");
      id = j.value("id", std::string{});
      if (id.empty()) throw InvalidArgument("missing id");
      Article a;
      a.id = id;
      a.publisher = j.at("publisher").get<std::string>();
      a.title = j.value("title", std::string{});
      a.section = j.value("section", std::string{});
      a.body = j.at("body").get<std::string>();
      const auto date = parse_date(j.at("date").get<std::string>());
      if (!date) throw InvalidArgument("unparseable date");
      a.date = *date;
      const auto leaning = parse_leaning(j.at("leaning").get<std::string>());
      if (!leaning) throw InvalidArgument("unknown leaning");
      a.leaning = *leaning;
      a.word_count = text::whitespace_word_count(a.body);
      result.articles.push_back(std::move(a));
    } catch (const json::exception& e) {
      result.skipped.push_back({lineno, id, std::string("malformed record: ") + e.what()});
    } catch (const InvalidArgument& e) {
      result.skipped.push_back({lineno, id, e.what()});
    }
  }
  return result;
}

void write_events(std::ostream& out, std::span<const Event> events) {
  for (const auto& e : events) {
    json j;
    j["id"] = e.id;
    j["article_ids"] = e.article_ids;
    j["leaning_counts"] = {{"left", e.leaning_counts[0]},
                           {"center", e.leaning_counts[1]},
                           {"right", e.leaning_counts[2]}};
    j["total_words"] = e.total_words;
    j["date"] = format_date(e.date);
    out << j.dump() << '\n';
  }
}

std::vector<Event> read_events(std::istream& in) {
  std::vector<Event> events;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json j = json::parse(line);
    Event e;
    e.id = j.at("id").get<std::string>();
    e.article_ids = j.at("article_ids").get<std::vector<std::string>>();
    const auto& counts = j.at("leaning_counts");
    e.leaning_counts = {counts.at("left").get<std::size_t>(), counts.at("center").get<std::size_t>(),
                        counts.at("right").get<std::size_t>()};
    e.total_words = j.at("total_words").get<std::size_t>();
    const auto date = parse_date(j.at("date").get<std::string>());
    if (!date) throw InvalidArgument("event " + e.id + " has an unparseable date");
    e.date = *date;
    events.push_back(std::move(e));
  }
  return events;
}

void write_drop_report(std::ostream& out, std::span<const DropRecord> drops) {
  for (const auto& d : drops) {
    out << json{{"event_id", d.event_id}, {"reason", d.reason}}.dump() << '\n';
  }
}

void write_skip_report(std::ostream& out, std::span<const SkipRecord> skips) {
  for (const auto& s : skips) {
    out << json{{"line", s.line}, {"id", s.id}, {"reason", s.reason}}.dump() << '\n';
  }
}

namespace {

struct Cluster {
  std::vector<std::size_t> members;  // indices into the sorted article list
  std::unordered_map<std::uint32_t, double> centroid_sum;
  Date min_date{};
  bool alive = true;

  double similarity(const SparseVector& v) const {
    double d = 0.0;
    double sq = 0.0;
    for (const auto& [term, w] : centroid_sum) sq += w * w;
    if (sq == 0.0) return 0.0;
    for (const auto& [term, w] : v) {
      if (auto it = centroid_sum.find(term); it != centroid_sum.end()) d += w * it->second;
    }
    return d / std::sqrt(sq);  // v is unit length
  }

  void absorb(const SparseVector& v) {
    for (const auto& [term, w] : v) centroid_sum[term] += w;
  }
};

}  // namespace

std::vector<Event> cluster_articles(std::span<const Article> articles, const CorpusConfig& config) {
  config.validate();
  if (articles.empty()) return {};

  std::vector<std::size_t> order(articles.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (articles[a].date != articles[b].date) return articles[a].date < articles[b].date;
    return articles[a].id < articles[b].id;
  });

  std::vector<std::string> bodies;
  bodies.reserve(order.size());
  for (std::size_t i : order) bodies.push_back(articles[i].body);
  const TfidfModel model = TfidfModel::fit(bodies);

  const auto window = std::chrono::days{config.time_window_days};
  std::vector<Cluster> clusters;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const Article& a = articles[order[pos]];
    const SparseVector& v = model.document(pos);

    std::vector<std::size_t> candidates;
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      const Cluster& cl = clusters[c];
      if (!cl.alive || a.date - cl.min_date > window) continue;
      if (cl.similarity(v) >= config.similarity_threshold) candidates.push_back(c);
    }

    if (candidates.empty()) {
      Cluster cl;
      cl.members.push_back(pos);
      cl.absorb(v);
      cl.min_date = a.date;
      clusters.push_back(std::move(cl));
      continue;
    }

    Cluster& target = clusters[candidates.front()];
    for (std::size_t k = 1; k < candidates.size(); ++k) {
      Cluster& other = clusters[candidates[k]];
      target.members.insert(target.members.end(), other.members.begin(), other.members.end());
      for (const auto& [term, w] : other.centroid_sum) target.centroid_sum[term] += w;
      target.min_date = std::min(target.min_date, other.min_date);
      other.alive = false;
      other.members.clear();
      other.centroid_sum.clear();
    }
    target.members.push_back(pos);
    target.absorb(v);
  }

  // Merges can leave an earlier-starting cluster behind a later one in creation order.
  for (auto& cl : clusters) std::sort(cl.members.begin(), cl.members.end());
  std::erase_if(clusters, [](const Cluster& cl) { return !cl.alive; });
  std::sort(clusters.begin(), clusters.end(), [](const Cluster& x, const Cluster& y) {
    return x.members.front() < y.members.front();
  });

  std::vector<Event> events;
  events.reserve(clusters.size());
  for (const auto& cl : clusters) {
    Event e;
    e.date = articles[order[cl.members.front()]].date;
    for (std::size_t pos : cl.members) {
      const Article& a = articles[order[pos]];
      e.article_ids.push_back(a.id);
      ++e.leaning_counts[index_of(a.leaning)];
      e.total_words += a.word_count;
    }
    events.push_back(std::move(e));
  }
  for (std::size_t i = 0; i < events.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "E%04zu", i + 1);
    events[i].id = buf;
  }
  return events;
}

FilterResult filter_events(std::span<const Event> events, const ArticleStore& store,
                           const CorpusConfig& config) {
  FilterResult result;
  std::set<std::string> excluded;
  for (const auto& s : config.excluded_sections) excluded.insert(text::to_lower_ascii(s));

  for (const auto& e : events) {
    std::vector<std::string> reasons;

    std::string missing;
    for (Leaning l : kAllLeanings) {
      if (e.leaning_counts[index_of(l)] == 0) {
        missing += missing.empty() ? "missing " : ", ";
        missing += display_name(l);
      }
    }
    if (!missing.empty()) reasons.push_back(missing);
    if (e.total_words >= config.max_event_words) reasons.push_back("over word cap");

    std::set<std::string> bad_sections;
    for (const auto& id : e.article_ids) {
      const std::string section = text::to_lower_ascii(store.at(id).section);
      if (excluded.contains(section)) bad_sections.insert(section);
    }
    for (const auto& s : bad_sections) reasons.push_back("excluded section: " + s);

    if (e.article_ids.size() < config.min_articles) reasons.push_back("too few articles");

    if (reasons.empty()) {
      result.retained.push_back(e);
    } else {
      std::string joined;
      for (const auto& r : reasons) joined += (joined.empty() ? "" : "; ") + r;
      result.dropped.push_back({e.id, std::move(joined)});
    }
  }
  return result;
}

Distribution3 leaning_distribution(const Event& event) {
  const std::size_t total = event.leaning_counts[0] + event.leaning_counts[1] + event.leaning_counts[2];
  if (total == 0) throw InvalidArgument("empty event");
  return Distribution3::from_counts(event.leaning_counts);
}

Distribution3 leaning_distribution(const Event& event, const ArticleStore& store,
                                   InputProportion basis) {
  if (basis == InputProportion::kArticleCount) return leaning_distribution(event);
  if (event.article_ids.empty()) throw InvalidArgument("empty event");
  std::array<double, 3> words{};
  for (const auto& id : event.article_ids) {
    const Article& a = store.at(id);
    words[index_of(a.leaning)] += static_cast<double>(a.word_count);
  }
  if (words[0] + words[1] + words[2] == 0.0) throw InvalidArgument("empty event");
  return Distribution3::from_weights(words);
}

Event balanced_subset(const Event& event, const ArticleStore& store, std::uint64_t seed) {
  std::array<std::vector<std::size_t>, 3> by_leaning;
  for (std::size_t i = 0; i < event.article_ids.size(); ++i) {
    by_leaning[index_of(store.at(event.article_ids[i]).leaning)].push_back(i);
  }
  std::size_t k = event.article_ids.size();
  for (const auto& group : by_leaning) k = std::min(k, group.size());
  if (k == 0) throw InvalidArgument("cannot balance: a leaning is absent");

  Rng rng(derive_seed(seed, {0xba1a}));
  std::vector<std::size_t> keep;
  for (auto& group : by_leaning) {
    rng.shuffle(std::span<std::size_t>(group));
    keep.insert(keep.end(), group.begin(), group.begin() + static_cast<std::ptrdiff_t>(k));
  }
  std::sort(keep.begin(), keep.end());

  std::vector<std::string> ids;
  ids.reserve(keep.size());
  for (std::size_t i : keep) ids.push_back(event.article_ids[i]);
  return store.make_event(event.id, std::move(ids));
}

std::string_view Ordering::kind_name(Kind kind) noexcept {
  switch (kind) {
    case Kind::kRandom:
      return "random";
    case Kind::kLeadLeft:
      return "lead_left";
    case Kind::kLeadCenter:
      return "lead_center";
    case Kind::kLeadRight:
      return "lead_right";
  }
  return "random";
}

std::string_view Ordering::name() const noexcept { return kind_name(kind); }

std::optional<Ordering::Kind> Ordering::parse_kind(std::string_view name) noexcept {
  for (Kind k : {Kind::kRandom, Kind::kLeadLeft, Kind::kLeadCenter, Kind::kLeadRight}) {
    if (kind_name(k) == name) return k;
  }
  return std::nullopt;
}

std::vector<std::string> order_articles(const Event& event, const ArticleStore& store,
                                        const Ordering& ordering) {
  std::vector<std::string> ids = event.article_ids;
  Rng rng(derive_seed(ordering.seed, {0x0bde, static_cast<std::uint64_t>(ordering.kind)}));

  if (ordering.kind == Ordering::Kind::kRandom) {
    rng.shuffle(std::span<std::string>(ids));
    return ids;
  }

  const Leaning lead = ordering.kind == Ordering::Kind::kLeadLeft     ? Leaning::kLeft
                       : ordering.kind == Ordering::Kind::kLeadCenter ? Leaning::kCenter
                                                                      : Leaning::kRight;
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (store.at(ids[i]).leaning == lead) candidates.push_back(i);
  }
  if (candidates.empty()) throw InvalidArgument("no lead candidate");

  const std::size_t first = candidates[rng.uniform_index(candidates.size())];
  std::vector<std::string> rest;
  rest.reserve(ids.size() - 1);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i != first) rest.push_back(ids[i]);
  }
  rng.shuffle(std::span<std::string>(rest));

  std::vector<std::string> out;
  out.reserve(ids.size());
  out.push_back(ids[first]);
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

}  // namespace fairsumm::corpus
