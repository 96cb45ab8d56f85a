#include "fairsumm/types.hpp"

#include <cmath>
#include <string>

#include "fairsumm/error.hpp"

namespace fairsumm {

std::string_view to_string(Leaning l) noexcept {
  switch (l) {
    case Leaning::kLeft:
      return "left";
    case Leaning::kCenter:
      return "center";
    case Leaning::kRight:
      return "right";
  }
  return "center";
}

std::string_view to_string(Sentiment s) noexcept {
  switch (s) {
    case Sentiment::kNegative:
      return "negative";
    case Sentiment::kNeutral:
      return "neutral";
    case Sentiment::kPositive:
      return "positive";
  }
  return "neutral";
}

std::string_view display_name(Leaning l) noexcept {
  switch (l) {
    case Leaning::kLeft:
      return "Left";
    case Leaning::kCenter:
      return "Center";
    case Leaning::kRight:
      return "Right";
  }
  return "Center";
}

std::optional<Leaning> parse_leaning(std::string_view s) noexcept {
  if (s == "left") return Leaning::kLeft;
  if (s == "center") return Leaning::kCenter;
  if (s == "right") return Leaning::kRight;
  return std::nullopt;
}

std::optional<Sentiment> parse_sentiment(std::string_view s) noexcept {
  if (s == "negative") return Sentiment::kNegative;
  if (s == "neutral") return Sentiment::kNeutral;
  if (s == "positive") return Sentiment::kPositive;
  return std::nullopt;
}

namespace {

void check_support(const Support3& support) {
  for (double x : support) {
    if (!std::isfinite(x)) throw InvalidArgument("support positions must be finite");
  }
  if (!(support[0] < support[1] && support[1] < support[2])) {
    throw InvalidArgument("support positions must be strictly increasing");
  }
}

}  // namespace

Distribution3::Distribution3(const std::array<double, 3>& mass, const Support3& support)
    : mass_(mass), support_(support) {
  check_support(support_);
  double total = 0.0;
  for (double m : mass_) {
    if (!std::isfinite(m) || m < 0.0) {
      throw InvalidArgument("distribution masses must be finite and non-negative");
    }
    total += m;
  }
  if (std::abs(total - 1.0) > kMassTolerance) {
    throw InvalidArgument("distribution masses must sum to 1 (got " + std::to_string(total) + ")");
  }
}

Distribution3 Distribution3::from_weights(const std::array<double, 3>& weights,
                                          const Support3& support) {
  double total = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) {
      throw InvalidArgument("weights must be finite and non-negative");
    }
    total += w;
  }
  if (!(total > 0.0)) throw InvalidArgument("weights must not all be zero");
  return Distribution3({weights[0] / total, weights[1] / total, weights[2] / total}, support);
}

Distribution3 Distribution3::from_counts(const std::array<std::size_t, 3>& counts,
                                         const Support3& support) {
  return from_weights({static_cast<double>(counts[0]), static_cast<double>(counts[1]),
                       static_cast<double>(counts[2])},
                      support);
}

}  // namespace fairsumm
