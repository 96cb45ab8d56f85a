#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fairsumm::quality {

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  /// Set when an input was too short to score; the score is then (0, 0, 0).
  bool degenerate = false;

  static RougeScore from_counts(std::size_t overlap, std::size_t candidate_total,
                                std::size_t reference_total);
};

enum class RougeVariant { kRouge1, kRouge2, kRougeL };

std::string_view variant_name(RougeVariant v) noexcept;

/// Clipped n-gram overlap for n in {1, 2}. Tokens are lowercased and split on
/// non-alphanumerics; no stemming and no stopword removal.
RougeScore rouge_n(std::string_view candidate, std::string_view reference, int n);

/// Longest-common-subsequence ROUGE over the same token sequences.
RougeScore rouge_l(std::string_view candidate, std::string_view reference);

/// LCS length of two token sequences (O(|a|*|b|) time, O(min) memory).
std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

/// Macro average of per-source scores. Throws on an empty source list.
RougeScore score_against_sources(std::string_view summary, std::span<const std::string> sources,
                                 RougeVariant variant);

enum class LengthBucket { kShort, kMedium, kLong };

/// Short < 1200 <= Medium <= 2500 < Long.
LengthBucket length_bucket(std::size_t word_count) noexcept;
std::string_view bucket_name(LengthBucket b) noexcept;

}  // namespace fairsumm::quality
