#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "fairsumm/annotate.hpp"
#include "fairsumm/corpus.hpp"
#include "fairsumm/metrics.hpp"
#include "fairsumm/quality.hpp"

namespace fairsumm::pipeline {

struct MetricOptions {
  std::size_t top_k_entities = 2;
  corpus::InputProportion input_proportion = corpus::InputProportion::kArticleCount;
};

/// Per-event source material, computed once and shared by every summary of the event.
struct EventContext {
  corpus::Event event;
  std::vector<std::string> bodies;
  /// Source sentences across all member articles, in member order.
  std::vector<std::string> sentences;
  /// Mention counts per normalised entity key over all member articles.
  std::map<std::string, std::size_t> entity_counts;
  std::set<std::string> entity_keys;
  Distribution3 input_distribution{std::array<double, 3>{1.0, 0.0, 0.0}};
};

EventContext prepare_event(const corpus::Event& event, const corpus::ArticleStore& store,
                           AnnotatorClient& client, const MetricOptions& options);

struct FairnessOutcome {
  metrics::FairnessReport report;
  std::vector<std::string> selected_entities;
  /// Set when entity_sentiment is null.
  std::optional<std::string> gap_reason;
};

/// The five fairness metrics of one summary against its event.
///
/// Entity sentiment uses the top-k source keys that appear in the summary and occur
/// (after normalisation) in at least one source sentence and one summary sentence.
/// Throws InvalidArgument for an empty summary.
FairnessOutcome evaluate_fairness(const EventContext& ctx, std::string_view summary,
                                  AnnotatorClient& client, const MetricOptions& options);

struct QualityRow {
  quality::RougeScore rouge1;
  quality::RougeScore rouge2;
  quality::RougeScore rougeL;
  std::size_t input_words = 0;
  std::size_t summary_words = 0;
  quality::LengthBucket bucket = quality::LengthBucket::kShort;
};

/// ROUGE macro-averaged over the event's source articles, with the input length bucket.
QualityRow evaluate_quality(const EventContext& ctx, std::string_view summary);

}  // namespace fairsumm::pipeline
