#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fairsumm::stats {

/// Regularised incomplete beta I_x(a, b), evaluated by Lentz's continued fraction.
double incomplete_beta(double x, double a, double b);

/// Two-sided p-value of a Student-t statistic with `df` degrees of freedom.
double student_t_two_sided_p(double t, double df);

/// Upper-tail probability P(F > f) for an F(d1, d2) variate.
double f_upper_tail(double f, double d1, double d2);

struct SampleSet {
  std::string label;
  std::vector<double> values;
};

struct TestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  double d = 0.0;  // Cohen's d, sign follows mean(a) - mean(b)
};

/// Welch's unequal-variance t-test with Welch–Satterthwaite degrees of freedom.
TestResult welch_t(const SampleSet& a, const SampleSet& b);

/// (mean(a) - mean(b)) / pooled standard deviation.
double cohens_d(const SampleSet& a, const SampleSet& b);

struct Observation {
  std::string family;
  std::string size;
  std::string position;
  double value = 0.0;
};

struct AnovaRow {
  std::string effect;
  double ss = 0.0;
  double df = 0.0;
  double f = 0.0;
  double eta_sq = 0.0;
  double p = 1.0;
  bool f_infinite = false;
};

/// Three main effects and three two-way interactions; the three-way interaction is
/// pooled into the error term.
struct AnovaTable {
  std::vector<AnovaRow> rows;
  double ss_error = 0.0;
  double df_error = 0.0;
  double ss_total = 0.0;
  /// Three-way interaction and within-cell components of ss_error, computed directly.
  double ss_three_way = 0.0;
  double ss_within = 0.0;
  std::size_t replicates = 0;
};

/// Balanced three-way factorial ANOVA over (family, size, position).
/// Throws ValidationError("incomplete design ...") when a cell is empty or cell
/// counts differ, or when a factor has fewer than two levels.
AnovaTable anova3(std::span<const Observation> observations);

/// "***" p < 0.001, "**" p < 0.01, "*" p < 0.05, otherwise "ns".
std::string_view significance_stars(double p) noexcept;

}  // namespace fairsumm::stats
