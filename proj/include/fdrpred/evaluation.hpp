#pragma once

// Error statistics over prediction runs.
//
// Conventions (also written into report metadata):
//  - percentiles interpolate linearly between order statistics: for level q,
//    h = (N - 1) * q, result = e_(floor h) + (h - floor h) * (e_(floor h + 1) - e_(floor h))
//    on the ascending 0-based sorted errors;
//  - std is the population standard deviation (divide by N) of the absolute
//    errors, so mse == mae^2 + std^2;
//  - means use Neumaier-compensated summation.

#include <fdrpred/detail/text.hpp>
#include <fdrpred/predictors.hpp>
#include <fdrpred/run.hpp>
#include <fdrpred/trace.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fdr {

inline constexpr char const* percentile_convention =
  "linear interpolation between order statistics, h=(N-1)q";
inline constexpr char const* std_convention = "population (divide by N)";

/// Neumaier compensated sum.
class CompensatedSum {
public:
  void add(double v) noexcept
  {
    auto const t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }

  double value() const noexcept { return sum_ + comp_; }

private:
  double sum_ = 0;
  double comp_ = 0;
};

/// Running mean of squared errors, shared by tuning and summarize so both
/// produce bit-identical MSE values.
class SquaredErrorMean {
public:
  void add(double target, double prediction) noexcept
  {
    auto const d = target - prediction;
    sum_.add(d * d);
    ++count_;
  }

  std::size_t count() const noexcept { return count_; }
  double value() const noexcept
  {
    return count_ ? sum_.value() / static_cast<double>(count_) : 0.0;
  }

private:
  CompensatedSum sum_;
  std::size_t count_ = 0;
};

struct ErrorSample {
  double abs = 0;
  double squared = 0;
};

inline std::vector<ErrorSample> error_series(PredictionRun const& run)
{
  if (run.empty())
    throw std::invalid_argument("run '" + run.label + "' has no windows");
  std::vector<ErrorSample> out(run.size());
  for (std::size_t i = 0; i < run.size(); ++i) {
    auto const d = run.targets[i] - run.predictions[i];
    out[i] = {std::abs(d), d * d};
  }
  return out;
}

inline double mean_squared_error(PredictionRun const& run)
{
  SquaredErrorMean mse;
  for (std::size_t i = 0; i < run.size(); ++i)
    mse.add(run.targets[i], run.predictions[i]);
  return mse.value();
}

/// Quantile of `values` at level q in [0, 1]; `values` is reordered.
inline double percentile(std::vector<double>& values, double q)
{
  if (values.empty())
    throw std::invalid_argument("percentile of an empty series");
  if (!(q >= 0.0 && q <= 1.0))
    throw std::invalid_argument("percentile level must lie in [0, 1]");
  auto const h = static_cast<double>(values.size() - 1) * q;
  auto const lo = static_cast<std::size_t>(std::floor(h));
  auto const frac = h - static_cast<double>(lo);
  auto const nth = values.begin() + static_cast<std::ptrdiff_t>(lo);
  std::nth_element(values.begin(), nth, values.end());
  double const a = *nth;
  if (frac == 0.0 || lo + 1 >= values.size())
    return a;
  double const b = *std::min_element(nth + 1, values.end());
  return a + frac * (b - a);
}

inline constexpr std::array<double, 4> reported_percentiles = {0.90, 0.95, 0.99, 0.999};

struct ErrorReport {
  std::string kind;
  std::string hyperparams;
  std::size_t n_windows = 0;
  double mse = 0;
  double mae = 0;
  double std_abs_error = 0;
  /// e_p90, e_p95, e_p99, e_p99.9
  std::array<double, 4> percentiles{};
  double max_error = 0;
  std::optional<double> win_rate;
  std::size_t burn_in_windows = 0;

  double p90() const noexcept { return percentiles[0]; }
  double p95() const noexcept { return percentiles[1]; }
  double p99() const noexcept { return percentiles[2]; }
  double p999() const noexcept { return percentiles[3]; }
};

inline ErrorReport summarize(PredictionRun const& run)
{
  auto const errors = error_series(run);
  auto const n = static_cast<double>(errors.size());

  SquaredErrorMean mse;
  CompensatedSum abs_sum;
  double max_error = 0;
  for (std::size_t i = 0; i < run.size(); ++i) {
    mse.add(run.targets[i], run.predictions[i]);
    abs_sum.add(errors[i].abs);
    max_error = std::max(max_error, errors[i].abs);
  }
  auto const mae = abs_sum.value() / n;
  CompensatedSum dev_sum;
  for (auto const& e : errors)
    dev_sum.add((e.abs - mae) * (e.abs - mae));

  ErrorReport r;
  r.kind = std::string(to_string(run.kind));
  r.hyperparams = run.hyperparams;
  r.n_windows = errors.size();
  r.mse = mse.value();
  r.mae = mae;
  r.std_abs_error = std::sqrt(dev_sum.value() / n);
  r.max_error = max_error;
  r.burn_in_windows = run.burn_in_windows;

  std::vector<double> abs(errors.size());
  std::transform(errors.begin(), errors.end(), abs.begin(), [](auto const& e) { return e.abs; });
  for (std::size_t p = 0; p < reported_percentiles.size(); ++p)
    r.percentiles[p] = percentile(abs, reported_percentiles[p]);
  return r;
}

/// Fraction of windows on which each run has the strictly smallest absolute
/// error. Ties go to the earliest kind in Kind order, then the earliest run.
/// Result is indexed like `runs`.
inline std::vector<double> win_rates(std::span<const PredictionRun> runs)
{
  if (runs.size() < 2)
    throw std::invalid_argument("win rates need at least two runs");
  for (auto const& r : runs) {
    if (r.size() != runs[0].size() || r.targets != runs[0].targets)
      throw std::invalid_argument("runs '" + runs[0].label + "' and '" + r.label +
                                  "' cover different windows");
  }
  auto const n = runs[0].size();
  if (n == 0)
    throw std::invalid_argument("win rates need at least one window");
  std::vector<std::size_t> wins(runs.size(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    double best_err = std::abs(runs[0].targets[i] - runs[0].predictions[i]);
    for (std::size_t m = 1; m < runs.size(); ++m) {
      auto const err = std::abs(runs[m].targets[i] - runs[m].predictions[i]);
      if (err < best_err ||
          (err == best_err && precedes(runs[m].kind, m, runs[best].kind, best))) {
        best = m;
        best_err = err;
      }
    }
    ++wins[best];
  }
  std::vector<double> rates(runs.size());
  for (std::size_t m = 0; m < runs.size(); ++m)
    rates[m] = static_cast<double>(wins[m]) / static_cast<double>(n);
  return rates;
}

struct CdfKnot {
  double error_threshold = 0;
  double cumulative_fraction = 0;
};

/// Empirical CDF of the absolute error, one knot per distinct error value.
inline std::vector<CdfKnot> error_cdf(PredictionRun const& run)
{
  auto const errors = error_series(run);
  std::vector<double> abs(errors.size());
  std::transform(errors.begin(), errors.end(), abs.begin(), [](auto const& e) { return e.abs; });
  std::sort(abs.begin(), abs.end());
  std::vector<CdfKnot> out;
  auto const n = static_cast<double>(abs.size());
  for (std::size_t i = 0; i < abs.size(); ++i) {
    if (i + 1 < abs.size() && abs[i + 1] == abs[i])
      continue;
    out.push_back({abs[i], static_cast<double>(i + 1) / n});
  }
  return out;
}

inline std::string format_cdf_csv(std::span<const CdfKnot> knots)
{
  std::string out = "error_threshold,cumulative_fraction\n";
  for (auto const& k : knots)
    out += detail::format_double(k.error_threshold) + "," +
           detail::format_double(k.cumulative_fraction) + "\n";
  return out;
}

inline void cdf_export(PredictionRun const& run, std::string const& path)
{
  detail::write_file(path, format_cdf_csv(error_cdf(run)));
}

inline std::vector<CdfKnot> parse_cdf_csv(std::string_view text)
{
  auto const rows = detail::lines(text);
  if (rows.empty() || detail::trim(rows[0]) != "error_threshold,cumulative_fraction")
    throw ParseError(1, "unexpected CDF CSV header");
  std::vector<CdfKnot> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    auto const f = detail::split(rows[r], ',');
    auto const a = f.size() == 2 ? detail::parse_double(f[0]) : std::nullopt;
    auto const b = f.size() == 2 ? detail::parse_double(f[1]) : std::nullopt;
    if (!a || !b)
      throw ParseError(r + 1, "malformed CDF row");
    out.push_back({*a, *b});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report rendering

inline constexpr char const* report_csv_header =
  "kind,hyperparams,n_windows,mse,mae,std,e_p90,e_p95,e_p99,e_p999,e_max,win_rate";

/// Full-precision, unscaled report rows. win_rate is empty when undefined.
inline std::string format_report_csv(std::span<const ErrorReport> reports)
{
  std::string out = report_csv_header;
  out += '\n';
  for (auto const& r : reports) {
    out += r.kind + "," + r.hyperparams + "," + std::to_string(r.n_windows);
    for (double v : {r.mse, r.mae, r.std_abs_error, r.percentiles[0], r.percentiles[1],
                     r.percentiles[2], r.percentiles[3], r.max_error})
      out += "," + detail::format_double(v);
    out += ",";
    if (r.win_rate)
      out += detail::format_double(*r.win_rate);
    out += '\n';
  }
  return out;
}

inline std::vector<ErrorReport> parse_report_csv(std::string_view text)
{
  auto const rows = detail::lines(text);
  if (rows.empty() || detail::trim(rows[0]) != report_csv_header)
    throw ParseError(1, "unexpected report CSV header");
  std::vector<ErrorReport> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    auto const f = detail::split(rows[r], ',');
    if (f.size() != 12)
      throw ParseError(r + 1, "expected 12 fields");
    ErrorReport rep;
    rep.kind = std::string(detail::trim(f[0]));
    rep.hyperparams = std::string(detail::trim(f[1]));
    auto const n = detail::parse_integer<std::size_t>(f[2]);
    if (!n)
      throw ParseError(r + 1, "invalid n_windows");
    rep.n_windows = *n;
    double* slots[] = {&rep.mse,           &rep.mae,           &rep.std_abs_error,
                       &rep.percentiles[0], &rep.percentiles[1], &rep.percentiles[2],
                       &rep.percentiles[3], &rep.max_error};
    for (int c = 0; c < 8; ++c) {
      auto const v = detail::parse_double(f[3 + c]);
      if (!v)
        throw ParseError(r + 1, "invalid number '" + std::string(f[3 + c]) + "'");
      *slots[c] = *v;
    }
    if (!detail::trim(f[11]).empty()) {
      auto const w = detail::parse_double(f[11]);
      if (!w)
        throw ParseError(r + 1, "invalid win_rate");
      rep.win_rate = *w;
    }
    out.push_back(std::move(rep));
  }
  return out;
}

namespace detail {

/// Display form of a hyperparameter string: composite members shown by kind,
/// alpha to six significant digits.
inline std::string short_params(std::string const& hyperparams)
{
  if (hyperparams.starts_with("members=")) {
    std::string out;
    for (auto m : split(std::string_view(hyperparams).substr(8), '+')) {
      auto const end = m.find_first_of("([*");
      out += (out.empty() ? "" : "+") + std::string(m.substr(0, end));
    }
    return out;
  }
  if (hyperparams.starts_with("alpha=")) {
    if (auto const a = parse_double(std::string_view(hyperparams).substr(6))) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "alpha=%.6g", *a);
      return buf;
    }
  }
  return hyperparams;
}

} // namespace detail

/// Human-readable table: MSE in units of 1e-3, errors and win rate in percent
/// with two decimals.
inline std::string comparison_table(std::span<const ErrorReport> reports)
{
  if (reports.empty())
    throw std::invalid_argument("comparison table needs at least one report");
  auto pct = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v * 100.0);
    return std::string(buf);
  };
  auto milli = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v * 1e3);
    return std::string(buf);
  };

  std::vector<std::array<std::string, 12>> rows;
  rows.push_back({"Model", "Param.", "N_te", "MSE[1e-3]", "MAE[%]", "std[%]", "p90[%]",
                  "p95[%]", "p99[%]", "p99.9[%]", "max[%]", "w[%]"});
  for (auto const& r : reports) {
    rows.push_back({r.kind, detail::short_params(r.hyperparams), std::to_string(r.n_windows), milli(r.mse), pct(r.mae),
                    pct(r.std_abs_error), pct(r.p90()), pct(r.p95()), pct(r.p99()),
                    pct(r.p999()), pct(r.max_error), r.win_rate ? pct(*r.win_rate) : "-"});
  }
  std::array<std::size_t, 12> width{};
  for (auto const& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c)
      width[c] = std::max(width[c], row[c].size());

  std::string out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      auto const& cell = rows[r][c];
      auto const pad = std::string(width[c] - cell.size(), ' ');
      out += c < 2 ? cell + pad : pad + cell;
      out += c + 1 < rows[r].size() ? "  " : "\n";
    }
    if (r == 0) {
      std::size_t total = 0;
      for (auto w : width)
        total += w + 2;
      out += std::string(total - 2, '-') + "\n";
    }
  }
  return out;
}

} // namespace fdr
