#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>

#include <boost/math/special_functions/beta.hpp>

#include "sentinel/error.hpp"

namespace sentinel {

// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1]; NaN
// outside that domain.
inline double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0) || !(x >= 0.0 && x <= 1.0)) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return boost::math::ibeta(a, b, x);
}

// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
inline double student_t_two_tailed(double t, double df) {
  if (std::isinf(t)) return 0.0;
  const double t2 = t * t;
  return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t2));
}

inline double student_t_cdf(double t, double df) {
  const double tail = 0.5 * student_t_two_tailed(t, df);
  return t >= 0.0 ? 1.0 - tail : tail;
}

struct TTestResult {
  std::size_t n = 0;
  double mean_diff = 0.0;
  double sd_diff = 0.0;
  double t_statistic = 0.0;
  std::size_t df = 0;
  double p_two_tailed = 1.0;

  friend bool operator==(const TTestResult&, const TTestResult&) = default;
};

// Paired t-test on d = a - b. With zero spread, t is 0 (p = 1) for a zero
// mean difference and a signed infinity (p = 0) otherwise.
inline TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw error(errc::length_mismatch,
                std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  if (a.size() < 2) throw error(errc::too_few_samples, "need at least 2 pairs");
  const std::size_t n = a.size();
  const auto nd = static_cast<double>(n);

  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] - b[i];
  const double mean = sum / nd;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dev = (a[i] - b[i]) - mean;
    ss += dev * dev;
  }
  const double sd = std::sqrt(ss / (nd - 1.0));

  TTestResult r{n, mean, sd, 0.0, n - 1, 1.0};
  if (sd == 0.0) {
    if (mean != 0.0) {
      r.t_statistic = std::copysign(std::numeric_limits<double>::infinity(), mean);
      r.p_two_tailed = 0.0;
    }
    return r;
  }
  r.t_statistic = mean / (sd / std::sqrt(nd));
  r.p_two_tailed = std::clamp(student_t_two_tailed(r.t_statistic, static_cast<double>(r.df)), 0.0, 1.0);
  return r;
}

}  // namespace sentinel
