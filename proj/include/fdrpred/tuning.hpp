#pragma once

// Grid search for N_p (window-based kinds) and alpha (EMA) by training MSE.
// Every candidate runs over all of its own windows, so the window count
// shrinks as N_p grows. Ties go to the smaller candidate.

#include <fdrpred/detail/text.hpp>
#include <fdrpred/evaluation.hpp>
#include <fdrpred/predictors.hpp>
#include <fdrpred/run.hpp>
#include <fdrpred/trace.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fdr {

struct SearchGrid {
  std::vector<double> candidates;
  double min = 0;
  double max = 0;

  static SearchGrid of(std::vector<double> values)
  {
    SearchGrid g;
    g.candidates = std::move(values);
    if (!g.candidates.empty()) {
      g.min = g.candidates.front();
      g.max = g.candidates.back();
    }
    g.validate();
    return g;
  }

  /// Integer window lengths spaced evenly in log10 between lo and hi.
  static SearchGrid log_spaced_np(std::size_t lo, std::size_t hi, int points_per_decade = 32)
  {
    if (lo < 1 || hi < lo || points_per_decade < 1)
      throw std::invalid_argument("invalid N_p grid bounds");
    std::vector<double> values;
    auto const decades = std::log10(static_cast<double>(hi) / static_cast<double>(lo));
    auto const steps = static_cast<int>(std::ceil(decades * points_per_decade - 1e-9));
    for (int s = 0; s <= steps; ++s) {
      auto v = std::round(static_cast<double>(lo) *
                          std::pow(10.0, static_cast<double>(s) / points_per_decade));
      v = std::min(v, static_cast<double>(hi));
      if (values.empty() || v > values.back())
        values.push_back(v);
    }
    SearchGrid g;
    g.candidates = std::move(values);
    g.min = static_cast<double>(lo);
    g.max = static_cast<double>(hi);
    g.validate();
    return g;
  }

  static SearchGrid log_spaced_alpha(double lo, double hi, std::size_t count = 50)
  {
    if (!(lo > 0) || !(hi <= 1) || hi < lo || count < 1)
      throw std::invalid_argument("invalid alpha grid bounds");
    SearchGrid g;
    g.min = lo;
    g.max = hi;
    if (count == 1) {
      g.candidates = {lo};
    } else {
      auto const ratio = std::log(hi / lo);
      for (std::size_t s = 0; s < count; ++s) {
        auto v = s + 1 == count ? hi
                                : lo * std::exp(ratio * static_cast<double>(s) /
                                                static_cast<double>(count - 1));
        g.candidates.push_back(v);
      }
    }
    g.validate();
    return g;
  }

  static SearchGrid default_np() { return log_spaced_np(10, 100000, 32); }
  static SearchGrid default_alpha() { return log_spaced_alpha(1e-5, 1e-1, 50); }

  void validate() const
  {
    if (candidates.empty())
      throw std::invalid_argument("search grid is empty");
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (!std::isfinite(candidates[i]))
        throw std::invalid_argument("search grid holds a non-finite value");
      if (i && !(candidates[i] > candidates[i - 1]))
        throw std::invalid_argument("search grid must be strictly increasing");
      if (candidates[i] < min || candidates[i] > max)
        throw std::invalid_argument("search grid candidate outside its bounds");
    }
  }

  void validate_for_np(Kind kind) const
  {
    validate();
    for (auto c : candidates) {
      if (c != std::floor(c) || c < static_cast<double>(min_past_window(kind)))
        throw std::invalid_argument("N_p candidate " + detail::format_double(c) + " invalid for " +
                                    std::string(to_string(kind)) + " (integers >= " +
                                    std::to_string(min_past_window(kind)) + " required)");
    }
  }

  void validate_for_alpha() const
  {
    validate();
    for (auto c : candidates) {
      if (!(c > 0 && c <= 1))
        throw std::invalid_argument("alpha candidate " + detail::format_double(c) +
                                    " outside (0, 1]");
    }
  }
};

/// Parses "10,100,1000" or "log:LO:HI:PER_DECADE" (N_p) / "log:LO:HI:COUNT" (alpha).
inline SearchGrid parse_grid(std::string_view text, bool alpha)
{
  auto const t = detail::trim(text);
  if (t.starts_with("log:")) {
    auto const f = detail::split(t.substr(4), ':');
    if (f.size() != 3)
      throw std::invalid_argument("log grid must be log:LO:HI:N");
    auto const n = detail::parse_integer<int>(f[2]);
    if (alpha) {
      auto const lo = detail::parse_double(f[0]);
      auto const hi = detail::parse_double(f[1]);
      if (!lo || !hi || !n || *n < 1)
        throw std::invalid_argument("malformed alpha grid '" + std::string(t) + "'");
      return SearchGrid::log_spaced_alpha(*lo, *hi, static_cast<std::size_t>(*n));
    }
    auto const lo = detail::parse_integer<std::size_t>(f[0]);
    auto const hi = detail::parse_integer<std::size_t>(f[1]);
    if (!lo || !hi || !n)
      throw std::invalid_argument("malformed N_p grid '" + std::string(t) + "'");
    return SearchGrid::log_spaced_np(*lo, *hi, *n);
  }
  std::vector<double> values;
  for (auto f : detail::split(t, ',')) {
    auto const v = detail::parse_double(f);
    if (!v)
      throw std::invalid_argument("malformed grid value '" + std::string(f) + "'");
    values.push_back(*v);
  }
  return SearchGrid::of(std::move(values));
}

struct CurvePoint {
  double candidate = 0;
  /// NaN when the candidate is infeasible (no windows).
  double mse = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_windows = 0;

  bool feasible() const noexcept { return n_windows > 0; }
};

struct TuningResult {
  Kind kind = Kind::SMA;
  std::vector<CurvePoint> curve;
  /// Unconstrained argmin (N_p* or alpha*).
  double best_value = 0;
  /// Value actually used downstream: best_value, or the cap when it exceeds it.
  double capped_value = 0;
  std::size_t n_windows = 0;
  double mse_at_best = 0;
  std::size_t n_future = 0;
  /// EMA only: information cutoff N_p used to align windows.
  std::size_t alignment = 0;

  std::size_t infeasible_count() const noexcept
  {
    return static_cast<std::size_t>(
      std::count_if(curve.begin(), curve.end(), [](auto const& p) { return !p.feasible(); }));
  }
};

namespace detail {

/// Future-window means F[s] = mean(x[s .. s+N_f)); the target of window
/// offset w under past length N_p is F[w + N_p].
inline std::vector<double> future_means(OutcomeTrace const& trace, std::size_t n_future)
{
  std::vector<double> out;
  if (trace.size() < n_future)
    return out;
  auto const n = trace.size() - n_future + 1;
  out.resize(n);
  PrefixCounts const prefix(trace.samples());
  for (std::size_t s = 0; s < n; ++s)
    out[s] = static_cast<double>(prefix.count(s, n_future)) / static_cast<double>(n_future);
  return out;
}

inline CurvePoint evaluate_candidate(OutcomeTrace const& trace, WindowSpec const& spec,
                                     PredictorConfig const& config,
                                     std::vector<double> const& future)
{
  CurvePoint point;
  point.n_windows = window_count(trace, spec);
  if (point.n_windows == 0)
    return point;
  SquaredErrorMean mse;
  scan_predictions(trace, spec, config, [&](std::size_t w, Prediction p) {
    mse.add(future[w + spec.n_past], p.value);
  });
  point.mse = mse.value();
  return point;
}

inline void select_best(TuningResult& result)
{
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < result.curve.size(); ++i) {
    auto const& p = result.curve[i];
    if (p.feasible() && (!best || p.mse < result.curve[*best].mse))
      best = i;
  }
  if (!best)
    throw std::invalid_argument("no grid candidate yields a window on this trace");
  result.best_value = result.curve[*best].candidate;
  result.capped_value = result.best_value;
  result.n_windows = result.curve[*best].n_windows;
  result.mse_at_best = result.curve[*best].mse;
}

} // namespace detail

inline TuningResult tune_np(OutcomeTrace const& trace, std::size_t n_future, Kind kind,
                            SearchGrid const& grid,
                            std::optional<std::size_t> max_np = std::nullopt)
{
  if (!is_window_based(kind))
    throw std::invalid_argument(std::string(to_string(kind)) + " has no N_p hyperparameter");
  if (n_future < 1)
    throw std::invalid_argument("n_future must be >= 1");
  grid.validate_for_np(kind);
  auto const future = detail::future_means(trace, n_future);

  TuningResult result;
  result.kind = kind;
  result.n_future = n_future;
  for (auto c : grid.candidates) {
    auto const np = static_cast<std::size_t>(c);
    WindowSpec const spec{np, n_future};
    auto point = detail::evaluate_candidate(trace, spec, PredictorConfig::window(kind, np), future);
    point.candidate = c;
    result.curve.push_back(point);
  }
  detail::select_best(result);
  if (max_np && result.best_value > static_cast<double>(*max_np)) {
    if (*max_np < min_past_window(kind))
      throw std::invalid_argument("N_p cap below the minimum window for " +
                                  std::string(to_string(kind)));
    result.capped_value = static_cast<double>(*max_np);
  }
  return result;
}

inline TuningResult tune_alpha(OutcomeTrace const& trace, std::size_t n_past,
                               std::size_t n_future, SearchGrid const& grid)
{
  if (n_past < 1 || n_future < 1)
    throw std::invalid_argument("window geometry requires n_past >= 1 and n_future >= 1");
  grid.validate_for_alpha();
  auto const future = detail::future_means(trace, n_future);
  WindowSpec const spec{n_past, n_future};

  TuningResult result;
  result.kind = Kind::EMA;
  result.n_future = n_future;
  result.alignment = n_past;
  for (auto c : grid.candidates) {
    auto point = detail::evaluate_candidate(trace, spec, PredictorConfig::ema(c), future);
    point.candidate = c;
    result.curve.push_back(point);
  }
  detail::select_best(result);
  return result;
}

/// "candidate,mse" rows in grid order; infeasible candidates carry "nan".
inline std::string format_curve_csv(TuningResult const& result)
{
  std::string out = "candidate,mse\n";
  for (auto const& p : result.curve)
    out += detail::format_double(p.candidate) + "," +
           (p.feasible() ? detail::format_double(p.mse) : std::string("nan")) + "\n";
  return out;
}

inline void export_curve(TuningResult const& result, std::string const& path)
{
  detail::write_file(path, format_curve_csv(result));
}

inline std::vector<CurvePoint> parse_curve_csv(std::string_view text)
{
  auto const rows = detail::lines(text);
  if (rows.empty() || detail::trim(rows[0]) != "candidate,mse")
    throw ParseError(1, "unexpected curve CSV header");
  std::vector<CurvePoint> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    auto const f = detail::split(rows[r], ',');
    auto const c = f.size() == 2 ? detail::parse_double(f[0]) : std::nullopt;
    if (!c)
      throw ParseError(r + 1, "malformed curve row");
    CurvePoint p;
    p.candidate = *c;
    if (detail::trim(f[1]) != "nan") {
      auto const m = detail::parse_double(f[1]);
      if (!m)
        throw ParseError(r + 1, "malformed curve row");
      p.mse = *m;
      p.n_windows = 1; // count is not stored; mark feasible
    }
    out.push_back(p);
  }
  return out;
}

/// Flat key=value summary block.
inline std::string format_tuning_summary(TuningResult const& r)
{
  std::string out;
  out += "kind=" + std::string(to_string(r.kind)) + "\n";
  out += "best_value=" + detail::format_double(r.best_value) + "\n";
  out += "capped_value=" + detail::format_double(r.capped_value) + "\n";
  out += "n_windows=" + std::to_string(r.n_windows) + "\n";
  out += "mse_at_best=" + detail::format_double(r.mse_at_best) + "\n";
  out += "n_future=" + std::to_string(r.n_future) + "\n";
  if (r.kind == Kind::EMA)
    out += "alignment=" + std::to_string(r.alignment) + "\n";
  out += "grid_size=" + std::to_string(r.curve.size()) + "\n";
  out += "infeasible=" + std::to_string(r.infeasible_count()) + "\n";
  return out;
}

/// Reads a summary block back; the curve is not part of it.
inline TuningResult parse_tuning_summary(std::string_view text)
{
  std::map<std::string, std::string, std::less<>> kv;
  auto const rows = detail::lines(text);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto const line = detail::trim(rows[r]);
    if (line.empty())
      continue;
    auto const eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ParseError(r + 1, "expected key=value");
    kv[std::string(detail::trim(line.substr(0, eq)))] = std::string(detail::trim(line.substr(eq + 1)));
  }
  auto get = [&](char const* key) -> std::string const& {
    auto it = kv.find(key);
    if (it == kv.end())
      throw ParseError(1, std::string("tuning summary lacks '") + key + "'");
    return it->second;
  };
  auto real = [&](char const* key) {
    auto v = detail::parse_double(get(key));
    if (!v)
      throw ParseError(1, std::string("invalid value for '") + key + "'");
    return *v;
  };
  auto count = [&](char const* key) {
    auto v = detail::parse_integer<std::size_t>(get(key));
    if (!v)
      throw ParseError(1, std::string("invalid value for '") + key + "'");
    return *v;
  };
  TuningResult r;
  r.kind = parse_kind(get("kind"));
  r.best_value = real("best_value");
  r.capped_value = real("capped_value");
  r.n_windows = count("n_windows");
  r.mse_at_best = real("mse_at_best");
  r.n_future = count("n_future");
  if (r.kind == Kind::EMA)
    r.alignment = count("alignment");
  return r;
}

} // namespace fdr
