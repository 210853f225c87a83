#pragma once

// Outcome traces: binary probe results sampled at a fixed period, the sliding
// past/future window geometry laid over them, and a two-state Gilbert-Elliott
// generator for synthetic traces.
//
// Sample and window indices in this header are 1-based (x_1..x_K, W_1..W_n)
// unless a function says otherwise. Line numbers in parse errors are 1-based
// as shown by editors.

#include <fdrpred/detail/text.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fdr {

class ParseError : public std::runtime_error {
public:
  ParseError(std::size_t line, std::string detail, std::string const& source = {})
    : std::runtime_error((source.empty() ? "" : source + ": ") + "line " + std::to_string(line) +
                         ": " + detail)
    , line_{line}
    , detail_{std::move(detail)}
  {}

  std::size_t line() const noexcept { return line_; }
  std::string const& detail() const noexcept { return detail_; }

private:
  std::size_t line_;
  std::string detail_;
};

/// Immutable sequence of binary probe outcomes (1 = ACK received).
class OutcomeTrace {
public:
  static constexpr double default_sample_period_s = 0.5;

  OutcomeTrace(std::vector<std::uint8_t> outcomes,
               double sample_period_s = default_sample_period_s,
               std::string origin_label = {})
    : outcomes_{std::move(outcomes)}
    , sample_period_s_{sample_period_s}
    , origin_label_{std::move(origin_label)}
  {
    if (outcomes_.empty())
      throw std::invalid_argument("outcome trace must contain at least one sample");
    if (!(sample_period_s_ > 0) || !std::isfinite(sample_period_s_))
      throw std::invalid_argument("sample period must be positive");
    auto const bad = std::find_if(outcomes_.begin(), outcomes_.end(),
                                  [](std::uint8_t x) { return x > 1; });
    if (bad != outcomes_.end())
      throw std::invalid_argument("outcome at sample " +
                                  std::to_string(bad - outcomes_.begin() + 1) +
                                  " is not 0 or 1");
  }

  std::size_t size() const noexcept { return outcomes_.size(); }

  /// x_k with 1-based k.
  std::uint8_t outcome(std::size_t k) const { return outcomes_.at(k - 1); }

  /// 0-based view of all samples.
  std::span<const std::uint8_t> samples() const noexcept { return outcomes_; }

  double sample_period_s() const noexcept { return sample_period_s_; }
  std::string const& origin_label() const noexcept { return origin_label_; }

  double delivery_ratio() const noexcept
  {
    std::size_t ones = 0;
    for (auto x : outcomes_)
      ones += x;
    return static_cast<double>(ones) / static_cast<double>(outcomes_.size());
  }

  friend bool operator==(OutcomeTrace const& a, OutcomeTrace const& b) noexcept
  {
    return a.outcomes_ == b.outcomes_;
  }

private:
  std::vector<std::uint8_t> outcomes_;
  double sample_period_s_;
  std::string origin_label_;
};

/// Past/future window geometry (N_p, N_f).
struct WindowSpec {
  std::size_t n_past = 1;
  std::size_t n_future = 1;

  void validate() const
  {
    if (n_past < 1 || n_future < 1)
      throw std::invalid_argument("window geometry requires n_past >= 1 and n_future >= 1");
  }

  double past_duration_s(double sample_period_s) const noexcept
  {
    return static_cast<double>(n_past) * sample_period_s;
  }
  double future_duration_s(double sample_period_s) const noexcept
  {
    return static_cast<double>(n_future) * sample_period_s;
  }

  friend bool operator==(WindowSpec const&, WindowSpec const&) = default;
};

inline std::size_t window_count(std::size_t trace_length, WindowSpec const& spec) noexcept
{
  auto const span = spec.n_past + spec.n_future;
  return trace_length + 1 > span ? trace_length + 1 - span : 0;
}

inline std::size_t window_count(OutcomeTrace const& trace, WindowSpec const& spec) noexcept
{
  return window_count(trace.size(), spec);
}

/// t_i: mean of the N_f future samples of window i (1-based), summed directly.
inline double target(OutcomeTrace const& trace, WindowSpec const& spec, std::size_t i)
{
  auto const n = window_count(trace, spec);
  if (i < 1 || i > n)
    throw std::out_of_range("window index " + std::to_string(i) + " outside [1, " +
                            std::to_string(n) + "]");
  auto const x = trace.samples();
  std::size_t ones = 0;
  for (std::size_t j = i + spec.n_past; j <= i + spec.n_past + spec.n_future - 1; ++j)
    ones += x[j - 1];
  return static_cast<double>(ones) / static_cast<double>(spec.n_future);
}

/// Cumulative success counts, giving any contiguous sample sum in O(1).
class PrefixCounts {
public:
  explicit PrefixCounts(std::span<const std::uint8_t> samples)
    : cum_(samples.size() + 1, 0)
  {
    for (std::size_t k = 0; k < samples.size(); ++k)
      cum_[k + 1] = cum_[k] + samples[k];
  }

  /// Successes among 0-based samples [first, first + count).
  std::uint64_t count(std::size_t first, std::size_t count) const noexcept
  {
    return cum_[first + count] - cum_[first];
  }

  std::size_t size() const noexcept { return cum_.size() - 1; }

private:
  std::vector<std::uint64_t> cum_;
};

/// All targets t_1..t_n of a trace under a geometry, via prefix counts.
inline std::vector<double> targets(OutcomeTrace const& trace, WindowSpec const& spec)
{
  auto const n = window_count(trace, spec);
  PrefixCounts const prefix(trace.samples());
  std::vector<double> out(n);
  auto const nf = static_cast<double>(spec.n_future);
  for (std::size_t i = 1; i <= n; ++i)
    out[i - 1] = static_cast<double>(prefix.count(i - 1 + spec.n_past, spec.n_future)) / nf;
  return out;
}

// ---------------------------------------------------------------------------
// Trace files

enum class TraceFormat { automatic, bare, csv };

inline TraceFormat parse_trace_format(std::string_view s)
{
  if (s == "auto")
    return TraceFormat::automatic;
  if (s == "bare")
    return TraceFormat::bare;
  if (s == "csv")
    return TraceFormat::csv;
  throw std::invalid_argument("unknown trace format '" + std::string(s) + "'");
}

namespace detail {

inline std::uint8_t parse_outcome(std::string_view field, std::size_t line)
{
  auto const v = trim(field);
  if (v == "0")
    return 0;
  if (v == "1")
    return 1;
  if (v.empty())
    throw ParseError(line, "missing outcome value");
  throw ParseError(line, "outcome '" + std::string(v) + "' is not 0 or 1");
}

} // namespace detail

/// Parses trace text. Bare format holds one 0/1 per line; CSV format has a
/// header row naming an "outcome" column, other columns are ignored.
inline OutcomeTrace parse_trace(std::string_view text,
                                TraceFormat format = TraceFormat::automatic,
                                double sample_period_s = OutcomeTrace::default_sample_period_s,
                                std::string origin_label = {})
{
  if (text.starts_with("\xEF\xBB\xBF"))
    text.remove_prefix(3);
  auto const rows = detail::lines(text);
  if (rows.empty() || (rows.size() == 1 && detail::trim(rows[0]).empty()))
    throw ParseError(1, "trace is empty");

  if (format == TraceFormat::automatic) {
    auto const first = detail::trim(rows[0]);
    format = (first == "0" || first == "1") ? TraceFormat::bare : TraceFormat::csv;
  }

  std::vector<std::uint8_t> out;
  out.reserve(rows.size());
  if (format == TraceFormat::bare) {
    for (std::size_t r = 0; r < rows.size(); ++r)
      out.push_back(detail::parse_outcome(rows[r], r + 1));
  } else {
    auto const header = detail::split(rows[0], ',');
    std::size_t column = header.size();
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (detail::trim(header[c]) == "outcome") {
        column = c;
        break;
      }
    }
    if (column == header.size())
      throw ParseError(1, "CSV header has no 'outcome' column");
    for (std::size_t r = 1; r < rows.size(); ++r) {
      auto const fields = detail::split(rows[r], ',');
      if (fields.size() != header.size())
        throw ParseError(r + 1, "expected " + std::to_string(header.size()) + " fields, found " +
                                    std::to_string(fields.size()));
      out.push_back(detail::parse_outcome(fields[column], r + 1));
    }
    if (out.empty())
      throw ParseError(1, "CSV trace has a header but no rows");
  }
  return OutcomeTrace(std::move(out), sample_period_s, std::move(origin_label));
}

inline OutcomeTrace load_trace(std::string const& path,
                               TraceFormat format = TraceFormat::automatic,
                               double sample_period_s = OutcomeTrace::default_sample_period_s)
{
  auto const text = detail::read_file(path);
  try {
    return parse_trace(text, format, sample_period_s, path);
  } catch (ParseError const& e) {
    throw ParseError(e.line(), e.detail(), path);
  }
}

/// Bare format, LF-terminated.
inline std::string format_trace(OutcomeTrace const& trace)
{
  std::string out;
  out.reserve(trace.size() * 2);
  for (auto x : trace.samples()) {
    out.push_back(x ? '1' : '0');
    out.push_back('\n');
  }
  return out;
}

inline void write_trace(OutcomeTrace const& trace, std::string const& path)
{
  detail::write_file(path, format_trace(trace));
}

// ---------------------------------------------------------------------------
// Synthetic channel

struct GilbertElliottConfig {
  double p_good_to_bad = 1e-4;
  double p_bad_to_good = 2e-4;
  double delivery_prob_good = 0.8;
  double delivery_prob_bad = 0.55;
  std::size_t length = 100000;
  std::uint64_t seed = 1;

  void validate() const
  {
    auto const unit = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!unit(p_good_to_bad) || !unit(p_bad_to_good) || !unit(delivery_prob_good) ||
        !unit(delivery_prob_bad))
      throw std::invalid_argument("Gilbert-Elliott probabilities must lie in [0, 1]");
    if (delivery_prob_good < delivery_prob_bad)
      throw std::invalid_argument("delivery_prob_good must be >= delivery_prob_bad");
    if (length == 0)
      throw std::invalid_argument("trace length must be positive");
  }

  /// Stationary delivery ratio of the chain (the good-state start is ignored).
  double long_run_delivery_ratio() const noexcept
  {
    auto const total = p_good_to_bad + p_bad_to_good;
    auto const good_share = total > 0 ? p_bad_to_good / total : 1.0;
    return good_share * delivery_prob_good + (1 - good_share) * delivery_prob_bad;
  }
};

/// Reads "key=value" lines with GilbertElliottConfig field names. Blank lines
/// and lines starting with '#' are skipped.
inline GilbertElliottConfig parse_generator_config(std::string_view text,
                                                   GilbertElliottConfig config = {})
{
  auto const rows = detail::lines(text);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto const line = detail::trim(rows[r]);
    if (line.empty() || line.front() == '#')
      continue;
    auto const eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ParseError(r + 1, "expected key=value");
    auto const key = detail::trim(line.substr(0, eq));
    auto const value = detail::trim(line.substr(eq + 1));
    auto real = [&] {
      auto v = detail::parse_double(value);
      if (!v)
        throw ParseError(r + 1, "invalid number '" + std::string(value) + "'");
      return *v;
    };
    auto integer = [&]<class Int>(Int) {
      auto v = detail::parse_integer<Int>(value);
      if (!v)
        throw ParseError(r + 1, "invalid integer '" + std::string(value) + "'");
      return *v;
    };
    if (key == "p_good_to_bad")
      config.p_good_to_bad = real();
    else if (key == "p_bad_to_good")
      config.p_bad_to_good = real();
    else if (key == "delivery_prob_good")
      config.delivery_prob_good = real();
    else if (key == "delivery_prob_bad")
      config.delivery_prob_bad = real();
    else if (key == "length")
      config.length = integer(std::size_t{});
    else if (key == "seed")
      config.seed = integer(std::uint64_t{});
    else
      throw ParseError(r + 1, "unknown key '" + std::string(key) + "'");
  }
  return config;
}

namespace detail {

// splitmix64: portable, so traces are bit-identical across standard libraries.
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_{seed} {}

  std::uint64_t next() noexcept
  {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
  std::uint64_t state_;
};

} // namespace detail

/// Two-state hidden Markov channel starting in the good state. Each step first
/// moves the hidden state, then draws the outcome from that state's delivery
/// probability.
inline OutcomeTrace generate_trace(GilbertElliottConfig const& config)
{
  config.validate();
  detail::SplitMix64 rng(config.seed);
  std::vector<std::uint8_t> out(config.length);
  bool good = true;
  for (auto& x : out) {
    auto const u = rng.uniform();
    good = good ? !(u < config.p_good_to_bad) : (u < config.p_bad_to_good);
    auto const p = good ? config.delivery_prob_good : config.delivery_prob_bad;
    x = rng.uniform() < p ? 1 : 0;
  }
  return OutcomeTrace(std::move(out), OutcomeTrace::default_sample_period_s,
                      "gilbert-elliott seed=" + std::to_string(config.seed));
}

/// i.i.d. Bernoulli(p) trace, used by tests and calibration runs.
inline OutcomeTrace generate_bernoulli_trace(double p, std::size_t length, std::uint64_t seed)
{
  GilbertElliottConfig config;
  config.p_good_to_bad = 0;
  config.p_bad_to_good = 0;
  config.delivery_prob_good = p;
  config.delivery_prob_bad = p;
  config.length = length;
  config.seed = seed;
  return generate_trace(config);
}

} // namespace fdr
