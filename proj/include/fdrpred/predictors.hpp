#pragma once

#include <fdrpred/detail/text.hpp>
#include <fdrpred/regression.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fdr {

/// Predictor families. Declaration order is the tie-break order used by the
/// oracle and by win-rate tallies.
enum class Kind { SMA, WMA, EMA, SLR, PR2, PR3, PSLR, COM, OR };

inline constexpr std::array<Kind, 6> base_kinds = {Kind::SMA, Kind::WMA, Kind::EMA,
                                                   Kind::SLR, Kind::PR2, Kind::PR3};

inline constexpr std::string_view to_string(Kind k) noexcept
{
  constexpr std::array<std::string_view, 9> names = {"SMA", "WMA", "EMA", "SLR", "PR2",
                                                     "PR3", "PSLR", "COM", "OR"};
  return names[static_cast<std::size_t>(k)];
}

inline Kind parse_kind(std::string_view s)
{
  auto const t = detail::trim(s);
  for (int k = 0; k <= static_cast<int>(Kind::OR); ++k) {
    if (to_string(static_cast<Kind>(k)) == t)
      return static_cast<Kind>(k);
  }
  throw std::invalid_argument("unknown predictor kind '" + std::string(t) + "'");
}

/// Kinds that read a past window of n_past samples (everything but EMA and
/// the composite kinds).
inline constexpr bool is_window_based(Kind k) noexcept
{
  switch (k) {
  case Kind::SMA:
  case Kind::WMA:
  case Kind::SLR:
  case Kind::PR2:
  case Kind::PR3:
  case Kind::PSLR:
    return true;
  default:
    return false;
  }
}

inline constexpr int regression_degree(Kind k) noexcept
{
  switch (k) {
  case Kind::SLR:
  case Kind::PSLR:
    return 1;
  case Kind::PR2:
    return 2;
  case Kind::PR3:
    return 3;
  default:
    return 0;
  }
}

/// Smallest past window a kind accepts.
inline constexpr std::size_t min_past_window(Kind k) noexcept
{
  return static_cast<std::size_t>(regression_degree(k)) + 1;
}

/// y_i with its pre-clamp value kept for diagnostics.
struct Prediction {
  double value = 0;
  double raw = 0;

  static Prediction clamped(double raw) noexcept { return {std::clamp(raw, 0.0, 1.0), raw}; }

  friend bool operator==(Prediction const&, Prediction const&) = default;
};

// ---------------------------------------------------------------------------
// Moving averages

inline Prediction predict_sma(std::span<const std::uint8_t> past_window)
{
  if (past_window.empty())
    throw std::invalid_argument("SMA needs a non-empty window");
  std::size_t ones = 0;
  for (auto x : past_window)
    ones += x;
  return Prediction::clamped(static_cast<double>(ones) / static_cast<double>(past_window.size()));
}

struct Ratio {
  std::uint64_t num = 0;
  std::uint64_t den = 1;
};

/// Exact WMA weight w_j for j = 1 (newest sample) .. n_past (oldest sample).
inline Ratio wma_weight(std::size_t n_past, std::size_t j)
{
  if (n_past < 1 || j < 1 || j > n_past)
    throw std::out_of_range("WMA weight index out of range");
  return {n_past - j + 1, n_past * (n_past + 1) / 2};
}

/// WMA weights as doubles, newest sample first.
inline std::vector<double> wma_weights(std::size_t n_past)
{
  std::vector<double> w(n_past);
  for (std::size_t j = 1; j <= n_past; ++j) {
    auto const r = wma_weight(n_past, j);
    w[j - 1] = static_cast<double>(r.num) / static_cast<double>(r.den);
  }
  return w;
}

/// Weighted average of a window (oldest first) with weights listed newest first.
inline Prediction weighted_average(std::span<const std::uint8_t> past_window,
                                   std::span<const double> newest_first_weights)
{
  if (past_window.empty())
    throw std::invalid_argument("weighted average needs a non-empty window");
  if (newest_first_weights.size() != past_window.size())
    throw std::invalid_argument("weight count does not match window length");
  auto const n = past_window.size();
  double acc = 0;
  for (std::size_t j = 0; j < n; ++j)
    acc += newest_first_weights[j] * past_window[n - 1 - j];
  return Prediction::clamped(acc);
}

inline Prediction predict_wma(std::span<const std::uint8_t> past_window)
{
  if (past_window.empty())
    throw std::invalid_argument("WMA needs a non-empty window");
  // sum_k (k+1) x_k over k = 0 (oldest) .. N-1, then a single division.
  std::uint64_t weighted = 0;
  for (std::size_t k = 0; k < past_window.size(); ++k)
    weighted += (k + 1) * past_window[k];
  auto const n = past_window.size();
  return Prediction::clamped(static_cast<double>(weighted) /
                             static_cast<double>(n * (n + 1) / 2));
}

inline void validate_alpha(double alpha)
{
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw std::invalid_argument("EMA alpha must lie in (0, 1]");
}

/// One EMA recursion step: alpha * x + (1 - alpha) * previous.
inline Prediction ema_step(double previous_estimate, std::uint8_t newest_sample, double alpha)
{
  validate_alpha(alpha);
  if (!(previous_estimate >= 0.0 && previous_estimate <= 1.0))
    throw std::invalid_argument("EMA previous estimate must lie in [0, 1]");
  return Prediction::clamped(alpha * newest_sample + (1.0 - alpha) * previous_estimate);
}

// ---------------------------------------------------------------------------
// Regression read-outs

/// Piecewise evaluation: the fit read at the newest past sample, t = N_p - 1.
inline Prediction predict_piecewise_regression(RegressionFit const& fit, std::size_t n_past)
{
  return Prediction::clamped(fit(static_cast<double>(n_past) - 1.0));
}

/// Abscissa of the future-window midpoint on the fit's sample-offset axis.
inline double future_midpoint(std::size_t n_past, std::size_t n_future) noexcept
{
  return (static_cast<double>(n_past) - 1.0) + (static_cast<double>(n_future) + 1.0) / 2.0;
}

/// Predictive SLR: the line read at the middle of the future window.
inline Prediction predict_pslr(RegressionFit const& fit, std::size_t n_past, std::size_t n_future)
{
  if (fit.degree() != 1)
    throw std::invalid_argument("predictive SLR needs a degree-1 fit");
  return Prediction::clamped(fit(future_midpoint(n_past, n_future)));
}

// ---------------------------------------------------------------------------
// Composite predictors

inline constexpr double weight_sum_tolerance = 1e-12;

inline void validate_weights(std::span<const double> weights)
{
  double sum = 0;
  for (auto w : weights) {
    if (!std::isfinite(w))
      throw std::invalid_argument("combination weight is not finite");
    sum += w;
  }
  if (std::abs(sum - 1.0) > weight_sum_tolerance)
    throw std::invalid_argument("combination weights sum to " + detail::format_double(sum) +
                                ", expected 1");
}

/// Linear combination sum_m lambda_m * y_m; members and weights are matched
/// by position.
inline Prediction predict_com(std::span<const Prediction> members, std::span<const double> weights)
{
  if (members.empty())
    throw std::invalid_argument("combination needs at least one member");
  if (members.size() != weights.size())
    throw std::invalid_argument("combination has " + std::to_string(members.size()) +
                                " member predictions but " + std::to_string(weights.size()) +
                                " weights");
  validate_weights(weights);
  double acc = 0;
  for (std::size_t m = 0; m < members.size(); ++m)
    acc += weights[m] * members[m].value;
  return Prediction::clamped(acc);
}

struct MemberPrediction {
  Kind kind;
  Prediction prediction;
};

struct OracleChoice {
  Prediction prediction;
  std::size_t member = 0;
  Kind kind = Kind::SMA;
};

/// True when candidate a precedes b in tie-break order (kind, then position).
inline bool precedes(Kind ka, std::size_t pa, Kind kb, std::size_t pb) noexcept
{
  return ka != kb ? static_cast<int>(ka) < static_cast<int>(kb) : pa < pb;
}

/// Member with the smallest squared error against the target. Ties go to the
/// earliest kind in Kind order, then to the earliest member.
inline OracleChoice predict_oracle(std::span<const MemberPrediction> members, double target)
{
  if (members.empty())
    throw std::invalid_argument("oracle needs at least one member");
  // |t - y| orders members exactly like (t - y)^2 without rounding ties.
  std::size_t best = 0;
  double best_err = std::abs(target - members[0].prediction.value);
  for (std::size_t m = 1; m < members.size(); ++m) {
    auto const err = std::abs(target - members[m].prediction.value);
    if (err < best_err ||
        (err == best_err && precedes(members[m].kind, m, members[best].kind, best))) {
      best = m;
      best_err = err;
    }
  }
  return {members[best].prediction, best, members[best].kind};
}

// ---------------------------------------------------------------------------
// Configuration

struct PredictorConfig {
  Kind kind = Kind::SMA;
  /// Past window length for window-based kinds; 0 means "use the geometry's n_past".
  std::size_t n_past = 0;
  /// EMA smoothing factor.
  double alpha = 0;
  /// COM and OR members.
  std::vector<PredictorConfig> members;
  /// COM weights, matched to members by position.
  std::vector<double> weights;

  static PredictorConfig window(Kind kind, std::size_t n_past)
  {
    PredictorConfig c;
    c.kind = kind;
    c.n_past = n_past;
    return c;
  }

  static PredictorConfig ema(double alpha)
  {
    PredictorConfig c;
    c.kind = Kind::EMA;
    c.alpha = alpha;
    return c;
  }

  static PredictorConfig combination(std::vector<PredictorConfig> members,
                                     std::vector<double> weights)
  {
    PredictorConfig c;
    c.kind = Kind::COM;
    c.members = std::move(members);
    c.weights = std::move(weights);
    return c;
  }

  static PredictorConfig equal_combination(std::vector<PredictorConfig> members)
  {
    auto const n = members.size();
    return combination(std::move(members),
                       std::vector<double>(n, n ? 1.0 / static_cast<double>(n) : 0.0));
  }

  static PredictorConfig oracle(std::vector<PredictorConfig> members)
  {
    PredictorConfig c;
    c.kind = Kind::OR;
    c.members = std::move(members);
    return c;
  }

  void validate() const
  {
    switch (kind) {
    case Kind::EMA:
      validate_alpha(alpha);
      break;
    case Kind::COM:
      if (members.empty())
        throw std::invalid_argument("COM needs at least one member");
      if (weights.size() != members.size())
        throw std::invalid_argument("COM needs exactly one weight per member");
      validate_weights(weights);
      for (auto const& m : members) {
        if (m.kind == Kind::OR || m.kind == Kind::COM)
          throw std::invalid_argument("COM members must be basic predictors");
        m.validate();
      }
      break;
    case Kind::OR:
      if (members.size() < 2)
        throw std::invalid_argument("OR needs at least two members");
      for (auto const& m : members) {
        if (m.kind == Kind::OR)
          throw std::invalid_argument("OR members cannot be oracles");
        m.validate();
      }
      break;
    default:
      if (n_past != 0 && n_past < min_past_window(kind))
        throw std::invalid_argument(std::string(to_string(kind)) + " needs n_past >= " +
                                    std::to_string(min_past_window(kind)));
      break;
    }
  }

  /// Hyperparameters as "key=value" pairs joined by ';' (no commas, CSV-safe).
  std::string hyperparams() const
  {
    switch (kind) {
    case Kind::EMA:
      return "alpha=" + detail::format_double(alpha);
    case Kind::COM: {
      std::string s = "members=";
      for (std::size_t m = 0; m < members.size(); ++m)
        s += (m ? "+" : "") + members[m].label() + "*" + detail::format_double(weights[m]);
      return s;
    }
    case Kind::OR: {
      std::string s = "members=";
      for (std::size_t m = 0; m < members.size(); ++m)
        s += (m ? "+" : "") + members[m].label();
      return s;
    }
    default:
      return n_past ? "np=" + std::to_string(n_past) : "np=window";
    }
  }

  /// Short unique-ish display name, e.g. "SMA(np=4080)" or "EMA(alpha=0.000375)".
  std::string label() const
  {
    if (kind == Kind::COM || kind == Kind::OR)
      return std::string(to_string(kind)) + "[" + hyperparams().substr(8) + "]";
    return std::string(to_string(kind)) + "(" + hyperparams() + ")";
  }
};

} // namespace fdr
