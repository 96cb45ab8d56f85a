#include "fairsumm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "fairsumm/error.hpp"

namespace fairsumm::stats {
namespace {

constexpr double kCfTolerance = 1e-12;
constexpr int kCfMaxIterations = 20000;
constexpr double kTiny = 1e-300;

// Continued fraction for I_x(a, b), valid for x < (a + 1) / (a + b + 2).
double beta_continued_fraction(double x, double a, double b) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kCfMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kCfTolerance) return h;
  }
  throw Error("incomplete beta continued fraction did not converge");
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double>& v, double mean) {
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

void require_sample(const SampleSet& s) {
  if (s.values.size() < 2) {
    throw InvalidArgument("sample '" + s.label + "' needs at least two values");
  }
  for (double x : s.values) {
    if (!std::isfinite(x)) throw InvalidArgument("sample '" + s.label + "' has a non-finite value");
  }
}

}  // namespace

double incomplete_beta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw InvalidArgument("incomplete_beta requires a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw InvalidArgument("incomplete_beta requires x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(x, a, b) / a;
  return 1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b;
}

double student_t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw InvalidArgument("degrees of freedom must be positive");
  if (std::isnan(t)) throw InvalidArgument("t statistic is NaN");
  if (std::isinf(t)) return 0.0;
  const double p = incomplete_beta(df / (df + t * t), 0.5 * df, 0.5);
  return std::clamp(p, 0.0, 1.0);
}

double f_upper_tail(double f, double d1, double d2) {
  if (!(d1 > 0.0) || !(d2 > 0.0)) throw InvalidArgument("F degrees of freedom must be positive");
  if (std::isinf(f)) return 0.0;
  if (f <= 0.0) return 1.0;
  const double p = incomplete_beta(d2 / (d2 + d1 * f), 0.5 * d2, 0.5 * d1);
  return std::clamp(p, 0.0, 1.0);
}

double cohens_d(const SampleSet& a, const SampleSet& b) {
  require_sample(a);
  require_sample(b);
  const double ma = mean_of(a.values);
  const double mb = mean_of(b.values);
  const double na = static_cast<double>(a.values.size());
  const double nb = static_cast<double>(b.values.size());
  const double pooled = std::sqrt(((na - 1.0) * sample_variance(a.values, ma) +
                                   (nb - 1.0) * sample_variance(b.values, mb)) /
                                  (na + nb - 2.0));
  if (pooled == 0.0) {
    if (ma == mb) return 0.0;
    throw InvalidArgument("degenerate variance: pooled standard deviation is zero");
  }
  return (ma - mb) / pooled;
}

TestResult welch_t(const SampleSet& a, const SampleSet& b) {
  require_sample(a);
  require_sample(b);
  const double ma = mean_of(a.values);
  const double mb = mean_of(b.values);
  const double na = static_cast<double>(a.values.size());
  const double nb = static_cast<double>(b.values.size());
  const double va = sample_variance(a.values, ma) / na;
  const double vb = sample_variance(b.values, mb) / nb;
  const double se2 = va + vb;

  TestResult r;
  if (se2 == 0.0) {
    if (ma != mb) throw InvalidArgument("degenerate variance: both samples are constant");
    r.df = na + nb - 2.0;
    return r;
  }
  r.t = (ma - mb) / std::sqrt(se2);
  r.df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  r.p = student_t_two_sided_p(r.t, r.df);
  r.d = cohens_d(a, b);
  return r;
}

AnovaTable anova3(std::span<const Observation> observations) {
  if (observations.empty()) throw ValidationError("incomplete design: no observations");

  std::map<std::string, std::size_t> fam_ix;
  std::map<std::string, std::size_t> size_ix;
  std::map<std::string, std::size_t> pos_ix;
  for (const auto& o : observations) {
    if (!std::isfinite(o.value)) throw InvalidArgument("non-finite observation");
    fam_ix.emplace(o.family, 0);
    size_ix.emplace(o.size, 0);
    pos_ix.emplace(o.position, 0);
  }
  auto number = [](auto& m) {
    std::size_t i = 0;
    for (auto& [k, v] : m) v = i++;
    return m.size();
  };
  const std::size_t na = number(fam_ix);
  const std::size_t nb = number(size_ix);
  const std::size_t nc = number(pos_ix);
  if (na < 2 || nb < 2 || nc < 2) {
    throw ValidationError("incomplete design: every factor needs at least two levels");
  }

  auto cell = [&](std::size_t i, std::size_t j, std::size_t k) { return (i * nb + j) * nc + k; };
  std::vector<std::vector<double>> cells(na * nb * nc);
  double grand = 0.0;
  for (const auto& o : observations) {
    cells[cell(fam_ix[o.family], size_ix[o.size], pos_ix[o.position])].push_back(o.value);
    grand += o.value;
  }
  grand /= static_cast<double>(observations.size());

  const std::size_t n = cells.front().size();
  for (const auto& c : cells) {
    if (c.empty()) throw ValidationError("incomplete design: empty cell");
    if (c.size() != n) throw ValidationError("incomplete design: unequal cell counts (unbalanced)");
  }

  // Work on centred data so large offsets do not cost precision.
  std::vector<double> m_abc(cells.size(), 0.0);
  std::vector<double> m_a(na, 0.0), m_b(nb, 0.0), m_c(nc, 0.0);
  std::vector<double> m_ab(na * nb, 0.0), m_ac(na * nc, 0.0), m_bc(nb * nc, 0.0);
  double ss_total = 0.0;
  double ss_within = 0.0;
  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t j = 0; j < nb; ++j) {
      for (std::size_t k = 0; k < nc; ++k) {
        const auto& c = cells[cell(i, j, k)];
        double s = 0.0;
        for (double y : c) s += y - grand;
        const double m = s / static_cast<double>(n);
        m_abc[cell(i, j, k)] = m;
        for (double y : c) {
          ss_total += (y - grand) * (y - grand);
          ss_within += (y - grand - m) * (y - grand - m);
        }
        m_a[i] += m;
        m_b[j] += m;
        m_c[k] += m;
        m_ab[i * nb + j] += m;
        m_ac[i * nc + k] += m;
        m_bc[j * nc + k] += m;
      }
    }
  }
  for (auto& v : m_a) v /= static_cast<double>(nb * nc);
  for (auto& v : m_b) v /= static_cast<double>(na * nc);
  for (auto& v : m_c) v /= static_cast<double>(na * nb);
  for (auto& v : m_ab) v /= static_cast<double>(nc);
  for (auto& v : m_ac) v /= static_cast<double>(nb);
  for (auto& v : m_bc) v /= static_cast<double>(na);

  const double dn = static_cast<double>(n);
  double ss_a = 0.0, ss_b = 0.0, ss_c = 0.0, ss_ab = 0.0, ss_ac = 0.0, ss_bc = 0.0, ss_abc = 0.0;
  for (double v : m_a) ss_a += v * v;
  for (double v : m_b) ss_b += v * v;
  for (double v : m_c) ss_c += v * v;
  ss_a *= static_cast<double>(nb * nc) * dn;
  ss_b *= static_cast<double>(na * nc) * dn;
  ss_c *= static_cast<double>(na * nb) * dn;
  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t j = 0; j < nb; ++j) {
      const double e = m_ab[i * nb + j] - m_a[i] - m_b[j];
      ss_ab += e * e;
    }
    for (std::size_t k = 0; k < nc; ++k) {
      const double e = m_ac[i * nc + k] - m_a[i] - m_c[k];
      ss_ac += e * e;
    }
  }
  for (std::size_t j = 0; j < nb; ++j) {
    for (std::size_t k = 0; k < nc; ++k) {
      const double e = m_bc[j * nc + k] - m_b[j] - m_c[k];
      ss_bc += e * e;
    }
  }
  ss_ab *= static_cast<double>(nc) * dn;
  ss_ac *= static_cast<double>(nb) * dn;
  ss_bc *= static_cast<double>(na) * dn;
  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t j = 0; j < nb; ++j) {
      for (std::size_t k = 0; k < nc; ++k) {
        const double e = m_abc[cell(i, j, k)] - m_ab[i * nb + j] - m_ac[i * nc + k] -
                         m_bc[j * nc + k] + m_a[i] + m_b[j] + m_c[k];
        ss_abc += e * e;
      }
    }
  }
  ss_abc *= dn;

  // Round-off residue on constant data would otherwise produce meaningless F ratios.
  double scale = 0.0;
  for (const auto& o : observations) scale += o.value * o.value;
  const double floor = 1e-20 * scale + std::numeric_limits<double>::min();
  for (double* ss : {&ss_a, &ss_b, &ss_c, &ss_ab, &ss_ac, &ss_bc, &ss_abc, &ss_within, &ss_total}) {
    if (*ss < floor) *ss = 0.0;
  }

  const double da = static_cast<double>(na - 1);
  const double db = static_cast<double>(nb - 1);
  const double dc = static_cast<double>(nc - 1);

  AnovaTable table;
  table.replicates = n;
  table.ss_total = ss_total;
  table.ss_three_way = ss_abc;
  table.ss_within = ss_within;
  table.ss_error = ss_abc + ss_within;
  table.df_error = da * db * dc + static_cast<double>(na * nb * nc) * (dn - 1.0);

  const double ms_error = table.ss_error / table.df_error;
  auto row = [&](std::string name, double ss, double df) {
    AnovaRow r;
    r.effect = std::move(name);
    r.ss = ss;
    r.df = df;
    r.eta_sq = ss_total > 0.0 ? ss / ss_total : 0.0;
    if (ms_error > 0.0) {
      r.f = (ss / df) / ms_error;
      r.p = f_upper_tail(r.f, df, table.df_error);
    } else if (ss > 0.0) {
      r.f = std::numeric_limits<double>::infinity();
      r.f_infinite = true;
      r.p = 0.0;
    }
    table.rows.push_back(std::move(r));
  };
  row("Family", ss_a, da);
  row("Size", ss_b, db);
  row("Position", ss_c, dc);
  row("Family x Size", ss_ab, da * db);
  row("Family x Position", ss_ac, da * dc);
  row("Size x Position", ss_bc, db * dc);
  return table;
}

std::string_view significance_stars(double p) noexcept {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "ns";
}

}  // namespace fairsumm::stats
