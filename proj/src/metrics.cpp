#include "fairsumm/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "fairsumm/error.hpp"

namespace fairsumm::metrics {

std::string_view metric_name(Metric m) noexcept {
  switch (m) {
    case Metric::kNeutralisation:
      return "neutralisation";
    case Metric::kEqualFairness:
      return "equal_fairness";
    case Metric::kRatioFairness:
      return "ratio_fairness";
    case Metric::kEntityCoverage:
      return "entity_coverage";
    case Metric::kEntitySentiment:
      return "entity_sentiment";
  }
  return "";
}

std::optional<Metric> parse_metric(std::string_view name) noexcept {
  for (Metric m : kAllMetrics) {
    if (metric_name(m) == name) return m;
  }
  return std::nullopt;
}

Direction direction_of(Metric m) noexcept {
  switch (m) {
    case Metric::kNeutralisation:
    case Metric::kEntityCoverage:
      return Direction::kHigherBetter;
    case Metric::kEqualFairness:
    case Metric::kRatioFairness:
    case Metric::kEntitySentiment:
      return Direction::kLowerBetter;
  }
  return Direction::kHigherBetter;
}

std::optional<double> FairnessReport::value(Metric m) const noexcept {
  switch (m) {
    case Metric::kNeutralisation:
      return neutralisation;
    case Metric::kEqualFairness:
      return equal_fairness;
    case Metric::kRatioFairness:
      return ratio_fairness;
    case Metric::kEntityCoverage:
      return entity_coverage;
    case Metric::kEntitySentiment:
      return entity_sentiment;
  }
  return std::nullopt;
}

void FairnessReport::validate() const {
  if (event_id.empty() || model_id.empty() || prompt_id.empty() || ordering.empty()) {
    throw InvalidArgument("fairness report provenance fields must be non-empty");
  }
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(neutralisation) || !unit(equal_fairness) || !unit(entity_coverage)) {
    throw InvalidArgument("proportion metric outside [0, 1]");
  }
  if (!(ratio_fairness >= 0.0) || (entity_sentiment && !(*entity_sentiment >= 0.0))) {
    throw InvalidArgument("distance metric must be non-negative");
  }
}

double wasserstein_1d(const Distribution3& p, const Distribution3& q) {
  if (p.support() != q.support()) throw InvalidArgument("wasserstein_1d: mismatched supports");
  const auto& x = p.support();
  double cdf_p = 0.0;
  double cdf_q = 0.0;
  double w = 0.0;
  for (std::size_t i = 0; i + 1 < 3; ++i) {
    cdf_p += p[i];
    cdf_q += q[i];
    w += std::abs(cdf_p - cdf_q) * (x[i + 1] - x[i]);
  }
  return w;
}

double neutralisation(std::span<const SentenceAnnotation> sentences) {
  if (sentences.empty()) throw InvalidArgument("no sentences");
  const auto neutral = std::count_if(sentences.begin(), sentences.end(), [](const auto& s) {
    return s.sentiment == Sentiment::kNeutral;
  });
  return static_cast<double>(neutral) / static_cast<double>(sentences.size());
}

double equal_fairness(std::span<const SentenceAnnotation> sentences) {
  if (sentences.empty()) throw InvalidArgument("no sentences");
  std::array<std::size_t, 3> counts{};
  for (const auto& s : sentences) ++counts[index_of(s.political)];
  const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
  return static_cast<double>(*hi - *lo) / static_cast<double>(sentences.size());
}

double ratio_fairness(const Distribution3& input_dist, const Distribution3& output_confidence) {
  return wasserstein_1d(input_dist, output_confidence);
}

double entity_coverage(const std::set<std::string>& source_keys,
                       const std::set<std::string>& summary_keys) {
  if (source_keys.empty()) throw InvalidArgument("no source entities");
  std::size_t kept = 0;
  for (const auto& k : source_keys) kept += summary_keys.contains(k) ? 1 : 0;
  return static_cast<double>(kept) / static_cast<double>(source_keys.size());
}

std::vector<std::string> select_top_entities(const std::map<std::string, std::size_t>& source_counts,
                                             const std::set<std::string>& summary_keys,
                                             std::size_t k) {
  if (k == 0) throw InvalidArgument("k must be at least 1");
  std::vector<std::pair<std::string, std::size_t>> shared;
  for (const auto& [key, count] : source_counts) {
    if (summary_keys.contains(key)) shared.emplace_back(key, count);
  }
  const std::size_t take = std::min(k, shared.size());
  std::partial_sort(shared.begin(), shared.begin() + static_cast<std::ptrdiff_t>(take), shared.end(),
                    [](const auto& a, const auto& b) {
                      if (a.second != b.second) return a.second > b.second;
                      return a.first < b.first;
                    });
  std::vector<std::string> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(shared[i].first);
  return out;
}

Distribution3 sentiment_distribution(std::span<const Sentiment> labels) {
  if (labels.empty()) throw InvalidArgument("no sentiment labels");
  std::array<std::size_t, 3> counts{};
  for (Sentiment s : labels) ++counts[index_of(s)];
  return Distribution3::from_counts(counts);
}

double entity_sentiment_similarity(const std::map<std::string, Distribution3>& per_entity_source,
                                   const std::map<std::string, Distribution3>& per_entity_summary,
                                   std::span<const std::string> entities) {
  if (entities.empty()) throw InvalidArgument("no overlapping entities");
  double total = 0.0;
  for (const auto& key : entities) {
    auto src = per_entity_source.find(key);
    auto sum = per_entity_summary.find(key);
    if (src == per_entity_source.end() || sum == per_entity_summary.end()) {
      throw InvalidArgument("entity '" + key + "' lacks a source or summary distribution");
    }
    total += wasserstein_1d(src->second, sum->second);
  }
  return total / static_cast<double>(entities.size());
}

std::string NormalisationSpec::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, range] : columns) {
    j[name] = {{"min", range.min},
               {"max", range.max},
               {"direction", range.direction == Direction::kHigherBetter ? "higher_better"
                                                                         : "lower_better"}};
  }
  return j.dump(2);
}

NormalisationSpec NormalisationSpec::from_json(std::string_view json_text) {
  const auto j = nlohmann::json::parse(json_text);
  NormalisationSpec spec;
  for (const auto& [name, col] : j.items()) {
    ColumnRange r;
    r.min = col.at("min").get<double>();
    r.max = col.at("max").get<double>();
    const auto dir = col.at("direction").get<std::string>();
    if (dir == "higher_better") {
      r.direction = Direction::kHigherBetter;
    } else if (dir == "lower_better") {
      r.direction = Direction::kLowerBetter;
    } else {
      throw InvalidArgument("unknown direction '" + dir + "'");
    }
    if (r.max < r.min) throw InvalidArgument("normalisation max < min for " + name);
    spec.columns.emplace(name, r);
  }
  return spec;
}

NormalisationSpec build_normalisation_spec(const ScoreTable& table) {
  NormalisationSpec spec;
  for (const auto& [key, value] : table) {
    const auto& metric = key.second;
    const auto m = parse_metric(metric);
    if (!m) throw InvalidArgument("unknown metric column '" + metric + "'");
    auto [it, inserted] = spec.columns.try_emplace(metric, ColumnRange{value, value, direction_of(*m)});
    if (!inserted) {
      it->second.min = std::min(it->second.min, value);
      it->second.max = std::max(it->second.max, value);
    }
  }
  return spec;
}

ScoreTable normalise_scores(const ScoreTable& table, const NormalisationSpec& spec) {
  ScoreTable out;
  for (const auto& [key, value] : table) {
    auto col = spec.columns.find(key.second);
    if (col == spec.columns.end()) {
      throw InvalidArgument("no normalisation range for metric '" + key.second + "'");
    }
    const ColumnRange& r = col->second;
    if (value < r.min || value > r.max) throw InvalidArgument("value outside normalisation range");
    double scaled = 0.5;
    if (r.max > r.min) {
      scaled = (value - r.min) / (r.max - r.min);
      if (r.direction == Direction::kLowerBetter) scaled = 1.0 - scaled;
    }
    out.emplace(key, scaled);
  }
  return out;
}

}  // namespace fairsumm::metrics
