#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fairsumm/types.hpp"

namespace fairsumm::metrics {

struct SentenceAnnotation {
  std::string text;
  Sentiment sentiment = Sentiment::kNeutral;
  Leaning political = Leaning::kCenter;
};

struct EntityMention {
  std::string surface;
  std::string kind;  // NER type, e.g. PERSON, ORG, GPE
  std::string key;   // text::normalise_key(surface)
};

enum class Metric { kNeutralisation, kEqualFairness, kRatioFairness, kEntityCoverage, kEntitySentiment };

inline constexpr std::array<Metric, 5> kAllMetrics = {
    Metric::kNeutralisation, Metric::kEqualFairness, Metric::kRatioFairness,
    Metric::kEntityCoverage, Metric::kEntitySentiment};

enum class Direction { kHigherBetter, kLowerBetter };

/// Column names: neutralisation, equal_fairness, ratio_fairness, entity_coverage, entity_sentiment.
std::string_view metric_name(Metric m) noexcept;
std::optional<Metric> parse_metric(std::string_view name) noexcept;

/// Neutralisation and Entity Coverage are higher-better; the three distance-style metrics are
/// lower-better.
Direction direction_of(Metric m) noexcept;

/// The five raw metric values for one (event, summary) pair.
struct FairnessReport {
  std::string event_id;
  std::string model_id;
  std::string prompt_id;
  std::string ordering;
  double neutralisation = 0.0;
  double equal_fairness = 0.0;
  double ratio_fairness = 0.0;
  double entity_coverage = 0.0;
  /// Absent when source and summary share no entities.
  std::optional<double> entity_sentiment;

  std::optional<double> value(Metric m) const noexcept;
  void validate() const;
};

/// W1 = sum_i |CDF_p(i) - CDF_q(i)| * (x_{i+1} - x_i). Supports must match exactly.
double wasserstein_1d(const Distribution3& p, const Distribution3& q);

/// Fraction of sentences labelled Neutral. Throws on an empty list.
double neutralisation(std::span<const SentenceAnnotation> sentences);

/// max - min of the Left/Center/Right sentence proportions. Throws on an empty list.
double equal_fairness(std::span<const SentenceAnnotation> sentences);

/// Wasserstein distance between the input leaning proportion and the summary's
/// document-level political confidence.
double ratio_fairness(const Distribution3& input_dist, const Distribution3& output_confidence);

/// |source ∩ summary| / |source| over normalised entity keys.
double entity_coverage(const std::set<std::string>& source_keys,
                       const std::set<std::string>& summary_keys);

/// The k most frequent source keys that also occur in the summary, ordered by
/// (count desc, key asc).
std::vector<std::string> select_top_entities(const std::map<std::string, std::size_t>& source_counts,
                                             const std::set<std::string>& summary_keys,
                                             std::size_t k);

/// Proportions of (negative, neutral, positive) labels on the ordinal sentiment line.
Distribution3 sentiment_distribution(std::span<const Sentiment> labels);

/// Mean per-entity W1 between source and summary sentiment distributions.
double entity_sentiment_similarity(const std::map<std::string, Distribution3>& per_entity_source,
                                   const std::map<std::string, Distribution3>& per_entity_summary,
                                   std::span<const std::string> entities);

struct ColumnRange {
  double min = 0.0;
  double max = 0.0;
  Direction direction = Direction::kHigherBetter;
};

/// Global per-metric ranges used for min-max scaling.
struct NormalisationSpec {
  std::map<std::string, ColumnRange> columns;

  std::string to_json() const;
  static NormalisationSpec from_json(std::string_view json_text);
};

/// (row label, metric name) -> value. Row labels are typically model ids.
using ScoreTable = std::map<std::pair<std::string, std::string>, double>;

/// Min and max per metric column over every row; direction from the metric registry.
NormalisationSpec build_normalisation_spec(const ScoreTable& table);

/// HigherBetter: (v - min) / (max - min); LowerBetter: 1 - (v - min) / (max - min);
/// a degenerate column (max == min) maps to 0.5. Values outside [min, max] throw.
ScoreTable normalise_scores(const ScoreTable& table, const NormalisationSpec& spec);

}  // namespace fairsumm::metrics
