#include "sentinel/stats.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracles/t_density.hpp"

namespace sentinel {
namespace {

using testing::error_code_of;

TEST(PairedT, ThreePairExample) {
  const std::vector<double> a{0.9, 0.8, 0.7}, b{0.5, 0.6, 0.4};
  const auto r = paired_t_test(a, b);
  EXPECT_EQ(r.n, 3u);
  EXPECT_EQ(r.df, 2u);
  EXPECT_NEAR(r.t_statistic, 5.196, 1e-3);
  EXPECT_NEAR(r.p_two_tailed, 0.0351, 1e-3);
  // df = 2 has the closed form F(t) = 1/2 + t / (2 sqrt(2 + t^2)).
  const double t = r.t_statistic;
  EXPECT_NEAR(r.p_two_tailed, 1.0 - t / std::sqrt(2.0 + t * t), 1e-12);
  EXPECT_NEAR(r.mean_diff, 0.3, 1e-12);
  EXPECT_NEAR(r.sd_diff, 0.1, 1e-12);
}

TEST(PairedT, IdenticalSeries) {
  const std::vector<double> a{0.1, 0.4, 0.3, 0.8};
  const auto r = paired_t_test(a, a);
  EXPECT_EQ(r.t_statistic, 0.0);
  EXPECT_EQ(r.p_two_tailed, 1.0);
}

TEST(PairedT, ConstantNonzeroDifference) {
  const std::vector<double> a{1.5, 2.5, 3.5}, b{0.5, 1.5, 2.5};
  const auto r = paired_t_test(a, b);
  EXPECT_TRUE(std::isinf(r.t_statistic));
  EXPECT_GT(r.t_statistic, 0.0);
  EXPECT_EQ(r.p_two_tailed, 0.0);
  const auto swapped = paired_t_test(b, a);
  EXPECT_LT(swapped.t_statistic, 0.0);
}

TEST(PairedT, Errors) {
  const std::vector<double> two{1, 2}, three{1, 2, 3}, one{1};
  EXPECT_EQ(error_code_of([&] { paired_t_test(two, three); }), errc::length_mismatch);
  EXPECT_EQ(error_code_of([&] { paired_t_test(one, one); }), errc::too_few_samples);
}

TEST(PairedT, AntisymmetryAndShiftInvariance) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> shift(-0.5, 0.5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + trial % 40;
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = u(rng);
      b[i] = u(rng);
    }
    const auto ab = paired_t_test(a, b);
    const auto ba = paired_t_test(b, a);
    ASSERT_EQ(ba.t_statistic, -ab.t_statistic);
    ASSERT_EQ(ba.p_two_tailed, ab.p_two_tailed);
    ASSERT_GE(ab.p_two_tailed, 0.0);
    ASSERT_LE(ab.p_two_tailed, 1.0);
    ASSERT_EQ(ab.df, n - 1);
    ASSERT_EQ(std::signbit(ab.t_statistic), std::signbit(ab.mean_diff));

    const double c = shift(rng);
    auto a2 = a, b2 = b;
    for (auto& x : a2) x += c;
    for (auto& x : b2) x += c;
    const auto shifted = paired_t_test(a2, b2);
    ASSERT_NEAR(shifted.mean_diff, ab.mean_diff, 1e-12);
    ASSERT_NEAR(shifted.sd_diff, ab.sd_diff, 1e-12);
    ASSERT_NEAR(shifted.t_statistic, ab.t_statistic, 1e-12 * std::max(1.0, std::fabs(ab.t_statistic)));
    ASSERT_NEAR(shifted.p_two_tailed, ab.p_two_tailed, 1e-12);
  }
}

TEST(IncompleteBeta, KnownValues) {
  EXPECT_EQ(regularized_incomplete_beta(2.0, 3.0, 0.0), 0.0);
  EXPECT_EQ(regularized_incomplete_beta(2.0, 3.0, 1.0), 1.0);
  // I_x(1, b) = 1 - (1 - x)^b and I_x(a, 1) = x^a.
  EXPECT_NEAR(regularized_incomplete_beta(1.0, 3.0, 0.4), 1.0 - std::pow(0.6, 3), 1e-14);
  EXPECT_NEAR(regularized_incomplete_beta(2.5, 1.0, 0.7), std::pow(0.7, 2.5), 1e-14);
  // I_x(1/2, 1/2) = (2/pi) asin(sqrt(x)).
  EXPECT_NEAR(regularized_incomplete_beta(0.5, 0.5, 0.3), 2.0 / std::numbers::pi * std::asin(std::sqrt(0.3)), 1e-14);
  EXPECT_TRUE(std::isnan(regularized_incomplete_beta(-1.0, 1.0, 0.5)));
}

TEST(StudentT, TailMatchesNumericalIntegration) {
  for (double df : {1.0, 2.0, 5.0, 10.0, 30.0, 89.0}) {
    for (double t = -8.0; t <= 8.0; t += 0.25) {
      const double oracle = oracles::two_tailed_by_quadrature(t, df);
      ASSERT_NEAR(student_t_two_tailed(t, df), oracle, 1e-6) << "df=" << df << " t=" << t;
    }
  }
}

TEST(StudentT, ClosedFormsForOneAndTwoDegrees) {
  for (double t = -8.0; t <= 8.0; t += 0.5) {
    // df = 1 is Cauchy: p = 1 - (2/pi) atan(|t|).
    EXPECT_NEAR(student_t_two_tailed(t, 1.0), 1.0 - 2.0 / std::numbers::pi * std::atan(std::fabs(t)), 1e-13);
    EXPECT_NEAR(student_t_two_tailed(t, 2.0), 1.0 - std::fabs(t) / std::sqrt(2.0 + t * t), 1e-13);
    EXPECT_NEAR(student_t_cdf(t, 2.0), 0.5 + t / (2.0 * std::sqrt(2.0 + t * t)), 1e-13);
  }
}

// Deep tails at df = 89 are resolved to full relative precision, e.g. the
// magnitude of p-values around 1e-10.
TEST(StudentT, DeepTailAtEightyNineDegrees) {
  const double p = student_t_two_tailed(6.73, 89.0);
  const double oracle = oracles::upper_tail_by_quadrature(6.73, 89.0) * 2.0;
  EXPECT_GT(p, 1e-10);
  EXPECT_LT(p, 1e-8);
  EXPECT_NEAR(p / oracle, 1.0, 1e-6);
}

}  // namespace
}  // namespace sentinel
