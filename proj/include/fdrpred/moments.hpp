#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>

namespace fdr {

__extension__ typedef __int128 int128;

namespace detail {

inline constexpr std::array<std::array<std::int64_t, 4>, 4> binomial = {{
  {1, 0, 0, 0},
  {1, 1, 0, 0},
  {1, 2, 1, 0},
  {1, 3, 3, 1},
}};

} // namespace detail

/// Raw power moments S_p = sum_k x_k * k^p, p = 0..MaxPower, of a fixed-length
/// binary window, with k = 0 at the oldest sample. Sums are kept as exact
/// 128-bit integers, so sliding the window any number of times never drifts
/// from a fresh recomputation.
template <int MaxPower>
class WindowMoments {
  static_assert(MaxPower >= 0 && MaxPower <= 3);

public:
  explicit WindowMoments(std::span<const std::uint8_t> window)
    : length_{window.size()}
  {
    if (window.empty())
      throw std::invalid_argument("moment window must not be empty");
    for (std::size_t k = 0; k < window.size(); ++k) {
      if (!window[k])
        continue;
      int128 pw = 1;
      for (int p = 0; p <= MaxPower; ++p) {
        sums_[p] += pw;
        pw *= static_cast<int128>(k);
      }
    }
  }

  /// Drops the oldest sample (`leaving`) and appends `entering` as the newest.
  void slide(std::uint8_t leaving, std::uint8_t entering) noexcept
  {
    // Re-index the surviving samples from k to k - 1 by binomial expansion of
    // (k - 1)^p over the sums that still include the entering sample at k = N.
    std::array<int128, MaxPower + 1> shifted{};
    int128 pw = 1;
    for (int q = 0; q <= MaxPower; ++q) {
      shifted[q] = sums_[q] + (entering ? pw : 0);
      pw *= static_cast<int128>(length_);
    }
    shifted[0] -= leaving;
    for (int p = 0; p <= MaxPower; ++p) {
      int128 acc = 0;
      for (int q = 0; q <= p; ++q) {
        auto const term = detail::binomial[p][q] * shifted[q];
        acc += ((p - q) % 2 == 0) ? term : -term;
      }
      sums_[p] = acc;
    }
  }

  int128 raw(int p) const noexcept { return sums_[p]; }
  std::size_t length() const noexcept { return length_; }

  /// C_p = sum_k x_k * (2k - (N-1))^p, moments about the window centre in
  /// half-sample units, still exact.
  std::array<int128, MaxPower + 1> centered() const noexcept
  {
    auto const m = static_cast<int128>(length_) - 1;
    std::array<int128, MaxPower + 1> out{};
    for (int p = 0; p <= MaxPower; ++p) {
      int128 acc = 0;
      for (int q = 0; q <= p; ++q) {
        int128 coeff = detail::binomial[p][q];
        for (int r = 0; r < q; ++r)
          coeff *= 2;
        for (int r = 0; r < p - q; ++r)
          coeff *= -m;
        acc += coeff * sums_[q];
      }
      out[p] = acc;
    }
    return out;
  }

  friend bool operator==(WindowMoments const&, WindowMoments const&) = default;

private:
  std::size_t length_;
  std::array<int128, MaxPower + 1> sums_{};
};

} // namespace fdr
