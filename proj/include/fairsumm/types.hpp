#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace fairsumm {

/// Publisher-level political leaning, ordered Left < Center < Right.
enum class Leaning { kLeft = 0, kCenter = 1, kRight = 2 };

/// Sentence sentiment, ordered Negative < Neutral < Positive.
enum class Sentiment { kNegative = 0, kNeutral = 1, kPositive = 2 };

inline constexpr std::array<Leaning, 3> kAllLeanings = {Leaning::kLeft, Leaning::kCenter,
                                                        Leaning::kRight};

constexpr std::size_t index_of(Leaning l) noexcept { return static_cast<std::size_t>(l); }
constexpr std::size_t index_of(Sentiment s) noexcept { return static_cast<std::size_t>(s); }

/// Wire names: "left" | "center" | "right".
std::string_view to_string(Leaning l) noexcept;
/// Wire names: "negative" | "neutral" | "positive".
std::string_view to_string(Sentiment s) noexcept;

/// Human label used in reports ("Left", "Center", "Right").
std::string_view display_name(Leaning l) noexcept;

std::optional<Leaning> parse_leaning(std::string_view s) noexcept;
std::optional<Sentiment> parse_sentiment(std::string_view s) noexcept;

using Support3 = std::array<double, 3>;

/// Unit-spaced ordinal positions used for both the political and the sentiment line.
inline constexpr Support3 kOrdinalSupport = {0.0, 1.0, 2.0};

/// A probability vector over three ordered categories placed at explicit positions on the line.
class Distribution3 {
 public:
  static constexpr double kMassTolerance = 1e-9;

  /// Throws InvalidArgument unless masses are finite, non-negative and sum to 1 +- 1e-9,
  /// and the support is strictly increasing.
  Distribution3(const std::array<double, 3>& mass, const Support3& support = kOrdinalSupport);

  /// Renormalises arbitrary non-negative weights (at least one positive) to a distribution.
  static Distribution3 from_weights(const std::array<double, 3>& weights,
                                    const Support3& support = kOrdinalSupport);

  /// Empirical distribution of category counts.
  static Distribution3 from_counts(const std::array<std::size_t, 3>& counts,
                                   const Support3& support = kOrdinalSupport);

  const std::array<double, 3>& mass() const noexcept { return mass_; }
  const Support3& support() const noexcept { return support_; }
  double operator[](std::size_t i) const noexcept { return mass_[i]; }

 private:
  std::array<double, 3> mass_;
  Support3 support_;
};

}  // namespace fairsumm
