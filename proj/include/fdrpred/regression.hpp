#pragma once

// Least-squares polynomial fits of degree 1..3 over a past window.
//
// Reported coefficients use the sample-offset abscissa: the oldest sample of
// the window sits at t = 0, the newest at t = N-1, one unit per sample period.
// Internally the normal equations are solved on the rescaled abscissa
// u = (2t - (N-1)) / (N-1) in [-1, 1], which keeps the Gram matrix well
// conditioned for windows of tens of thousands of samples. The right-hand side
// comes from exact integer moments (see WindowMoments).

#include <fdrpred/moments.hpp>

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fdr {

struct RegressionFit {
  static constexpr char const* abscissa_convention = "sample-offset: oldest=0, newest=N-1";

  /// beta_0..beta_d on the sample-offset abscissa.
  std::vector<double> coefficients;

  int degree() const noexcept { return static_cast<int>(coefficients.size()) - 1; }

  double operator()(double t) const noexcept
  {
    double acc = 0;
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it)
      acc = acc * t + *it;
    return acc;
  }
};

/// Solver for one (window length, degree) pair. The Gram matrix depends only
/// on the geometry, so it is factored once and reused for every window.
class PolynomialFitter {
public:
  PolynomialFitter(std::size_t n_past, int degree)
    : n_past_{n_past}
    , degree_{degree}
  {
    if (degree < 1 || degree > 3)
      throw std::invalid_argument("regression degree must be 1, 2 or 3");
    if (n_past < static_cast<std::size_t>(degree) + 1)
      throw std::invalid_argument("degree-" + std::to_string(degree) + " fit needs at least " +
                                  std::to_string(degree + 1) + " samples, window has " +
                                  std::to_string(n_past));
    half_span_ = static_cast<double>(n_past - 1);

    // Gram entries sum_k u_k^(p+q); odd powers vanish by symmetry.
    std::array<long double, 7> power_sums{};
    auto const m = static_cast<long double>(n_past - 1);
    for (std::size_t k = 0; k < n_past; ++k) {
      long double const u = (2.0L * static_cast<long double>(k) - m) / m;
      long double pw = 1;
      for (int r = 0; r <= 2 * degree; ++r) {
        power_sums[r] += pw;
        pw *= u;
      }
    }
    for (int r = 1; r <= 2 * degree; r += 2)
      power_sums[r] = 0;

    // Cholesky factor of the (degree+1)^2 Gram matrix.
    int const n = degree + 1;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j <= i; ++j) {
        long double sum = power_sums[i + j];
        for (int k = 0; k < j; ++k)
          sum -= chol_[i][k] * chol_[j][k];
        if (i == j) {
          if (!(sum > 0))
            throw std::runtime_error("regression normal matrix is not positive definite");
          chol_[i][i] = std::sqrt(sum);
        } else {
          chol_[i][j] = sum / chol_[j][j];
        }
      }
    }
  }

  std::size_t n_past() const noexcept { return n_past_; }
  int degree() const noexcept { return degree_; }

  /// Coefficients on the rescaled abscissa u, lowest power first.
  template <int MaxPower>
  std::array<double, 4> normalized_coefficients(WindowMoments<MaxPower> const& moments) const
  {
    static_assert(MaxPower <= 3);
    if (moments.length() != n_past_ || MaxPower < degree_)
      throw std::invalid_argument("moments do not match the fitter geometry");
    auto const centered = moments.centered();
    int const n = degree_ + 1;

    // rhs_p = sum_k x_k u_k^p = C_p / m^p
    std::array<long double, 4> rhs{};
    long double scale = 1;
    for (int p = 0; p < n; ++p) {
      rhs[p] = static_cast<long double>(centered[p]) / scale;
      scale *= static_cast<long double>(half_span_);
    }
    std::array<long double, 4> y{};
    for (int i = 0; i < n; ++i) {
      long double s = rhs[i];
      for (int k = 0; k < i; ++k)
        s -= chol_[i][k] * y[k];
      y[i] = s / chol_[i][i];
    }
    std::array<double, 4> gamma{};
    std::array<long double, 4> g{};
    for (int i = n - 1; i >= 0; --i) {
      long double s = y[i];
      for (int k = i + 1; k < n; ++k)
        s -= chol_[k][i] * g[k];
      g[i] = s / chol_[i][i];
      gamma[i] = static_cast<double>(g[i]);
    }
    return gamma;
  }

  /// Fitted polynomial evaluated at sample offset t (may lie beyond the window).
  template <int MaxPower>
  double value_at(WindowMoments<MaxPower> const& moments, double t) const
  {
    auto const gamma = normalized_coefficients(moments);
    double const u = (2.0 * t - half_span_) / half_span_;
    double acc = 0;
    for (int p = degree_; p >= 0; --p)
      acc = acc * u + gamma[p];
    return acc;
  }

  template <int MaxPower>
  RegressionFit fit(WindowMoments<MaxPower> const& moments) const
  {
    auto const gamma = normalized_coefficients(moments);
    // Substitute u = a*t + c with a = 2/(N-1), c = -1 and collect powers of t.
    double const a = 2.0 / half_span_;
    double const c = -1.0;
    RegressionFit out;
    out.coefficients.assign(degree_ + 1, 0.0);
    for (int p = 0; p <= degree_; ++p) {
      for (int j = 0; j <= p; ++j) {
        out.coefficients[j] += gamma[p] * static_cast<double>(detail::binomial[p][j]) *
                               std::pow(a, j) * std::pow(c, p - j);
      }
    }
    return out;
  }

private:
  std::size_t n_past_;
  int degree_;
  double half_span_ = 1;
  std::array<std::array<long double, 4>, 4> chol_{};
};

/// Least-squares polynomial of the given degree through a past window
/// (oldest sample first).
inline RegressionFit fit_polynomial(std::span<const std::uint8_t> past_window, int degree)
{
  if (degree < 1 || degree > 3)
    throw std::invalid_argument("regression degree must be 1, 2 or 3");
  if (past_window.size() < static_cast<std::size_t>(degree) + 1)
    throw std::invalid_argument("window shorter than degree + 1 samples");
  PolynomialFitter const fitter(past_window.size(), degree);
  return fitter.fit(WindowMoments<3>(past_window));
}

} // namespace fdr
