#include "fairsumm/quality.hpp"

#include <algorithm>
#include <map>

#include "fairsumm/error.hpp"
#include "fairsumm/text.hpp"

namespace fairsumm::quality {

RougeScore RougeScore::from_counts(std::size_t overlap, std::size_t candidate_total,
                                   std::size_t reference_total) {
  RougeScore s;
  if (candidate_total == 0 || reference_total == 0) {
    s.degenerate = true;
    return s;
  }
  s.precision = static_cast<double>(overlap) / static_cast<double>(candidate_total);
  s.recall = static_cast<double>(overlap) / static_cast<double>(reference_total);
  const double sum = s.precision + s.recall;
  s.f1 = sum > 0.0 ? 2.0 * s.precision * s.recall / sum : 0.0;
  return s;
}

std::string_view variant_name(RougeVariant v) noexcept {
  switch (v) {
    case RougeVariant::kRouge1:
      return "rouge1";
    case RougeVariant::kRouge2:
      return "rouge2";
    case RougeVariant::kRougeL:
      return "rougeL";
  }
  return "";
}

namespace {

std::map<std::vector<std::string>, std::size_t> ngram_counts(const std::vector<std::string>& tokens,
                                                            std::size_t n) {
  std::map<std::vector<std::string>, std::size_t> counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

}  // namespace

RougeScore rouge_n(std::string_view candidate, std::string_view reference, int n) {
  if (n != 1 && n != 2) throw InvalidArgument("rouge_n supports n in {1, 2}");
  const auto un = static_cast<std::size_t>(n);
  const auto cand = text::tokenize(candidate);
  const auto ref = text::tokenize(reference);
  if (ref.size() < un || cand.size() < un) {
    RougeScore s;
    s.degenerate = true;
    return s;
  }
  const auto cand_counts = ngram_counts(cand, un);
  const auto ref_counts = ngram_counts(ref, un);
  std::size_t overlap = 0;
  for (const auto& [gram, count] : ref_counts) {
    if (auto it = cand_counts.find(gram); it != cand_counts.end()) overlap += std::min(count, it->second);
  }
  return RougeScore::from_counts(overlap, cand.size() - un + 1, ref.size() - un + 1);
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> curr(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      curr[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], curr[j - 1]);
    }
    std::swap(prev, curr);
  }
  return prev[b.size()];
}

RougeScore rouge_l(std::string_view candidate, std::string_view reference) {
  const auto cand = text::tokenize(candidate);
  const auto ref = text::tokenize(reference);
  return RougeScore::from_counts(lcs_length(cand, ref), cand.size(), ref.size());
}

RougeScore score_against_sources(std::string_view summary, std::span<const std::string> sources,
                                 RougeVariant variant) {
  if (sources.empty()) throw InvalidArgument("no sources to score against");
  RougeScore mean;
  for (const auto& src : sources) {
    RougeScore s;
    switch (variant) {
      case RougeVariant::kRouge1:
        s = rouge_n(summary, src, 1);
        break;
      case RougeVariant::kRouge2:
        s = rouge_n(summary, src, 2);
        break;
      case RougeVariant::kRougeL:
        s = rouge_l(summary, src);
        break;
    }
    mean.precision += s.precision;
    mean.recall += s.recall;
    mean.f1 += s.f1;
    mean.degenerate = mean.degenerate || s.degenerate;
  }
  const auto n = static_cast<double>(sources.size());
  mean.precision /= n;
  mean.recall /= n;
  mean.f1 /= n;
  return mean;
}

LengthBucket length_bucket(std::size_t word_count) noexcept {
  if (word_count < 1200) return LengthBucket::kShort;
  if (word_count <= 2500) return LengthBucket::kMedium;
  return LengthBucket::kLong;
}

std::string_view bucket_name(LengthBucket b) noexcept {
  switch (b) {
    case LengthBucket::kShort:
      return "short";
    case LengthBucket::kMedium:
      return "medium";
    case LengthBucket::kLong:
      return "long";
  }
  return "";
}

}  // namespace fairsumm::quality
