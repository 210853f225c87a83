#include "oracles.hpp"

#include <fdrpred/moments.hpp>
#include <fdrpred/regression.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using fdr::WindowMoments;

TEST(Moments, SlideMatchesRecompute)
{
  auto const bits = oracle::random_bits(20000, 0.6, 3);
  std::span<const std::uint8_t> const x(bits);
  for (std::size_t n : {1u, 2u, 17u, 1000u}) {
    WindowMoments<3> m(x.subspan(0, n));
    for (std::size_t s = 1; s + n <= x.size(); ++s) {
      m.slide(x[s - 1], x[s + n - 1]);
      if (s % 97 == 0 || s + n == x.size()) {
        ASSERT_EQ(m, WindowMoments<3>(x.subspan(s, n))) << n << " " << s;
      }
    }
  }
}

TEST(Moments, RawAndCentered)
{
  std::vector<std::uint8_t> const w = {1, 0, 1, 1};
  WindowMoments<3> const m(w);
  EXPECT_TRUE(m.raw(0) == 3);
  EXPECT_TRUE(m.raw(1) == 0 + 2 + 3);
  EXPECT_TRUE(m.raw(2) == 0 + 4 + 9);
  EXPECT_TRUE(m.raw(3) == 0 + 8 + 27);
  // centred abscissae 2k - 3: -3, -1, 1, 3
  auto const c = m.centered();
  EXPECT_TRUE(c[1] == -3 + 1 + 3);
  EXPECT_TRUE(c[2] == 9 + 1 + 9);
  EXPECT_TRUE(c[3] == -27 + 1 + 27);
  EXPECT_THROW(WindowMoments<1>(std::span<const std::uint8_t>{}), std::invalid_argument);
}

TEST(FitPolynomial, ConstantWindow)
{
  std::vector<std::uint8_t> const w(5, 1);
  auto const f = fdr::fit_polynomial(w, 1);
  ASSERT_EQ(f.degree(), 1);
  EXPECT_NEAR(f.coefficients[0], 1.0, 1e-14);
  EXPECT_NEAR(f.coefficients[1], 0.0, 1e-14);
}

TEST(FitPolynomial, ClosedFormLine)
{
  std::vector<std::uint8_t> const w = {0, 0, 0, 1, 1, 1};
  // slope = sum (t - tbar)(x - xbar) / sum (t - tbar)^2, intercept = xbar - slope * tbar
  double tbar = 2.5, xbar = 0.5, sxy = 0, sxx = 0;
  for (int t = 0; t < 6; ++t) {
    sxy += (t - tbar) * (w[t] - xbar);
    sxx += (t - tbar) * (t - tbar);
  }
  double const slope = sxy / sxx;
  double const intercept = xbar - slope * tbar;
  EXPECT_NEAR(slope, 9.0 / 35.0, 1e-15);
  EXPECT_NEAR(intercept, -1.0 / 7.0, 1e-15);

  auto const f = fdr::fit_polynomial(w, 1);
  EXPECT_NEAR(f.coefficients[1], slope, 1e-14);
  EXPECT_NEAR(f.coefficients[0], intercept, 1e-14);
}

namespace {

double residual_norm(std::span<const std::uint8_t> w, std::vector<double> const& beta)
{
  long double s = 0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    long double v = 0, pw = 1;
    for (double b : beta) {
      v += b * pw;
      pw *= static_cast<long double>(k);
    }
    s += (w[k] - v) * (w[k] - v);
  }
  return static_cast<double>(s);
}

} // namespace

TEST(FitPolynomial, LocalOptimality)
{
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> pert(-1e-3, 1e-3);
  for (int degree : {2, 3}) {
    for (int trial = 0; trial < 20; ++trial) {
      auto const w = oracle::random_bits(8 + trial * 3, 0.5, 100 + trial);
      auto const f = fdr::fit_polynomial(w, degree);
      ASSERT_EQ(f.coefficients.size(), static_cast<std::size_t>(degree) + 1);
      auto const best = residual_norm(w, f.coefficients);
      for (int probe = 0; probe < 50; ++probe) {
        auto b = f.coefficients;
        for (auto& c : b)
          c += pert(rng);
        ASSERT_LE(best, residual_norm(w, b) + 1e-12);
      }
    }
  }
}

TEST(FitPolynomial, ResidualOrthogonality)
{
  for (std::size_t n : {4u, 30u, 400u, 5000u}) {
    auto const w = oracle::random_bits(n, 0.6, n);
    for (int degree = 1; degree <= 3; ++degree) {
      auto const f = fdr::fit_polynomial(w, degree);
      for (int p = 0; p <= degree; ++p) {
        // raw abscissa powers up to N_p = 400; beyond that k^3 amplifies the
        // double rounding of each residual past the bound, so scale k to [0, 1]
        long double const unit = n <= 400 ? 1.0L : static_cast<long double>(n - 1);
        long double dot = 0;
        for (std::size_t k = 0; k < n; ++k)
          dot += (w[k] - f(static_cast<double>(k))) * std::pow(static_cast<long double>(k) / unit, p);
        EXPECT_LE(std::fabs(static_cast<double>(dot)), 1e-8 * static_cast<double>(n))
          << "n=" << n << " degree=" << degree << " p=" << p;
      }
    }
  }
}

TEST(FitPolynomial, MatchesNormalEquationOracle)
{
  for (int trial = 0; trial < 50; ++trial) {
    auto const w = oracle::random_bits(5 + trial * 7, 0.55, 500 + trial);
    for (int degree = 1; degree <= 3; ++degree) {
      auto const f = fdr::fit_polynomial(w, degree);
      fdr::PolynomialFitter const fitter(w.size(), degree);
      WindowMoments<3> const m(w);
      for (double t : {0.0, static_cast<double>(w.size()) - 1, w.size() + 12.5}) {
        auto const ref = oracle::poly_fit_value(w, degree, t);
        EXPECT_NEAR(f(t), ref, 1e-9);
        EXPECT_NEAR(fitter.value_at(m, t), ref, 1e-9);
      }
    }
  }
}

TEST(FitPolynomial, Errors)
{
  std::vector<std::uint8_t> const w = {1, 0, 1};
  EXPECT_THROW(fdr::fit_polynomial(w, 3), std::invalid_argument);
  EXPECT_THROW(fdr::fit_polynomial(w, 0), std::invalid_argument);
  EXPECT_THROW(fdr::PolynomialFitter(1, 1), std::invalid_argument);
  EXPECT_NO_THROW(fdr::fit_polynomial(w, 2));
  fdr::PolynomialFitter const fitter(4, 1);
  EXPECT_THROW(fitter.value_at(WindowMoments<1>(w), 0.0), std::invalid_argument);
}

TEST(FitPolynomial, LongWindowStaysAccurate)
{
  auto const w = oracle::random_bits(28800, 0.7, 77);
  for (int degree = 1; degree <= 3; ++degree) {
    fdr::PolynomialFitter const fitter(w.size(), degree);
    auto const v = fitter.value_at(WindowMoments<3>(w), 28799.0);
    EXPECT_NEAR(v, oracle::poly_fit_value(w, degree, 28799.0), 1e-9) << degree;
  }
}
