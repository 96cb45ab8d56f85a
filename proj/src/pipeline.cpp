#include "fairsumm/pipeline.hpp"

#include <utility>

#include "fairsumm/error.hpp"
#include "fairsumm/sentences.hpp"
#include "fairsumm/text.hpp"

namespace fairsumm::pipeline {

namespace {

std::vector<std::string> sentence_texts(std::string_view text) {
  std::vector<std::string> out;
  for (auto& s : split_sentences(text)) out.push_back(std::move(s.text));
  return out;
}

/// Sentiment distribution toward `key` over the sentences that mention it.
std::optional<Distribution3> target_distribution(const std::vector<std::string>& sentences,
                                                 const std::string& key, AnnotatorClient& client) {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& s : sentences) {
    if (text::contains_normalised(s, key)) pairs.emplace_back(s, key);
  }
  if (pairs.empty()) return std::nullopt;
  const auto labels = client.target_sentiments(pairs);
  return metrics::sentiment_distribution(labels);
}

}  // namespace

EventContext prepare_event(const corpus::Event& event, const corpus::ArticleStore& store,
                           AnnotatorClient& client, const MetricOptions& options) {
  EventContext ctx;
  ctx.event = event;
  for (const auto& id : event.article_ids) {
    const auto& article = store.at(id);
    ctx.bodies.push_back(article.body);
    for (auto& s : sentence_texts(article.body)) ctx.sentences.push_back(std::move(s));
    for (const auto& m : client.extract_entities(article.body)) {
      ++ctx.entity_counts[m.key];
      ctx.entity_keys.insert(m.key);
    }
  }
  ctx.input_distribution = options.input_proportion == corpus::InputProportion::kArticleCount
                               ? corpus::leaning_distribution(event)
                               : corpus::leaning_distribution(event, store, options.input_proportion);
  return ctx;
}

FairnessOutcome evaluate_fairness(const EventContext& ctx, std::string_view summary,
                                  AnnotatorClient& client, const MetricOptions& options) {
  const auto sentences = sentence_texts(summary);
  if (sentences.empty()) throw InvalidArgument("empty summary");

  FairnessOutcome out;
  const auto annotations = client.annotate_sentences(sentences);
  out.report.neutralisation = metrics::neutralisation(annotations);
  out.report.equal_fairness = metrics::equal_fairness(annotations);
  out.report.ratio_fairness =
      metrics::ratio_fairness(ctx.input_distribution, client.classify_document_leaning(summary));

  std::set<std::string> summary_keys;
  for (const auto& m : client.extract_entities(summary)) summary_keys.insert(m.key);
  if (ctx.entity_keys.empty()) throw InvalidArgument("no source entities");
  out.report.entity_coverage = metrics::entity_coverage(ctx.entity_keys, summary_keys);

  // Only keys that can actually be scored on both sides compete for the top-k slots.
  std::set<std::string> scorable;
  std::map<std::string, Distribution3> source_dist;
  std::map<std::string, Distribution3> summary_dist;
  for (const auto& key : summary_keys) {
    if (!ctx.entity_keys.contains(key)) continue;
    auto src = target_distribution(ctx.sentences, key, client);
    if (!src) continue;
    auto sum = target_distribution(sentences, key, client);
    if (!sum) continue;
    scorable.insert(key);
    source_dist.emplace(key, *src);
    summary_dist.emplace(key, *sum);
  }

  if (scorable.empty()) {
    out.gap_reason = summary_keys.empty() ? "summary has no entities"
                                          : "no shared entity occurs in both source and summary sentences";
    return out;
  }
  out.selected_entities = metrics::select_top_entities(ctx.entity_counts, scorable, options.top_k_entities);
  out.report.entity_sentiment =
      metrics::entity_sentiment_similarity(source_dist, summary_dist, out.selected_entities);
  return out;
}

QualityRow evaluate_quality(const EventContext& ctx, std::string_view summary) {
  QualityRow row;
  row.rouge1 = quality::score_against_sources(summary, ctx.bodies, quality::RougeVariant::kRouge1);
  row.rouge2 = quality::score_against_sources(summary, ctx.bodies, quality::RougeVariant::kRouge2);
  row.rougeL = quality::score_against_sources(summary, ctx.bodies, quality::RougeVariant::kRougeL);
  row.input_words = ctx.event.total_words;
  row.summary_words = text::whitespace_word_count(summary);
  row.bucket = quality::length_bucket(row.input_words);
  return row;
}

}  // namespace fairsumm::pipeline
