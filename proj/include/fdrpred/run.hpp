#pragma once

// Batch driver: slides the window geometry over a trace and produces aligned
// (t_i, y_i) pairs for one configured predictor.
//
// Alignment. The WindowSpec fixes the information cutoff: window i covers
// samples x_i..x_{i+N_p-1} as its past and the next N_f samples as its future.
// A window-based predictor whose own n_past is smaller than the spec's reads
// only the newest n_past samples of that past window, so predictors with
// different hyperparameters can be compared on one common set of windows.
// EMA consumes the whole history x_1..x_{i+N_p-1}, seeded with y_0 = x_1.

#include <fdrpred/detail/text.hpp>
#include <fdrpred/moments.hpp>
#include <fdrpred/predictors.hpp>
#include <fdrpred/regression.hpp>
#include <fdrpred/trace.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fdr {

struct PredictionRun {
  std::string label;
  Kind kind = Kind::SMA;
  std::string hyperparams;
  WindowSpec spec;
  std::vector<double> targets;
  std::vector<double> predictions;
  std::vector<double> raw_predictions;
  /// OR only: index of the selected member per window.
  std::vector<std::size_t> chosen;
  /// OR only: member labels, indexed by `chosen`.
  std::vector<std::string> member_labels;
  std::vector<Kind> member_kinds;
  /// EMA only: ceil(5 / alpha) leading windows still influenced by the seed.
  std::size_t burn_in_windows = 0;

  std::size_t size() const noexcept { return targets.size(); }
  bool empty() const noexcept { return targets.empty(); }

  /// Copy without the first `n` windows (window numbering restarts at 1).
  PredictionRun drop_leading(std::size_t n) const
  {
    PredictionRun out = *this;
    n = std::min(n, size());
    auto cut = [n](auto& v) {
      if (!v.empty())
        v.erase(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n));
    };
    cut(out.targets);
    cut(out.predictions);
    cut(out.raw_predictions);
    cut(out.chosen);
    out.burn_in_windows = burn_in_windows > n ? burn_in_windows - n : 0;
    return out;
  }
};

inline std::size_t ema_burn_in_windows(double alpha) noexcept
{
  return static_cast<std::size_t>(std::ceil(5.0 / alpha));
}

namespace detail {

/// Resolves a config's effective past window against the alignment geometry.
inline std::size_t effective_past(PredictorConfig const& config, WindowSpec const& spec)
{
  auto const np = config.n_past ? config.n_past : spec.n_past;
  if (np > spec.n_past)
    throw std::invalid_argument(config.label() + " reads " + std::to_string(np) +
                                " past samples but the window geometry only has " +
                                std::to_string(spec.n_past));
  if (np < min_past_window(config.kind))
    throw std::invalid_argument(std::string(to_string(config.kind)) + " needs n_past >= " +
                                std::to_string(min_past_window(config.kind)));
  return np;
}

template <int Degree, class Sink>
void scan_regression(std::span<const std::uint8_t> x, std::size_t n_windows, std::size_t align,
                     std::size_t np, double eval_at, Sink& emit)
{
  PolynomialFitter const fitter(np, Degree);
  WindowMoments<Degree> moments(x.subspan(align - np, np));
  for (std::size_t w = 0; w < n_windows; ++w) {
    emit(w, Prediction::clamped(fitter.value_at(moments, eval_at)));
    if (w + 1 < n_windows)
      moments.slide(x[w + align - np], x[w + align]);
  }
}

} // namespace detail

/// Streams the predictions of a basic (non-composite) predictor:
/// emit(window_offset, Prediction) for offsets 0..window_count-1.
template <class Sink>
void scan_predictions(OutcomeTrace const& trace, WindowSpec const& spec,
                      PredictorConfig const& config, Sink&& emit)
{
  spec.validate();
  config.validate();
  auto const n = window_count(trace, spec);
  if (n == 0)
    throw std::invalid_argument("trace of " + std::to_string(trace.size()) +
                                " samples is too short for N_p=" + std::to_string(spec.n_past) +
                                ", N_f=" + std::to_string(spec.n_future));
  auto const x = trace.samples();
  auto const align = spec.n_past;

  switch (config.kind) {
  case Kind::SMA:
  case Kind::WMA: {
    auto const np = detail::effective_past(config, spec);
    WindowMoments<1> m(x.subspan(align - np, np));
    auto const npd = static_cast<double>(np);
    auto const tri = static_cast<double>(np * (np + 1) / 2);
    bool const wma = config.kind == Kind::WMA;
    for (std::size_t w = 0; w < n; ++w) {
      auto const s0 = static_cast<double>(m.raw(0));
      auto const s1 = static_cast<double>(m.raw(1));
      emit(w, Prediction::clamped(wma ? (s1 + s0) / tri : s0 / npd));
      if (w + 1 < n)
        m.slide(x[w + align - np], x[w + align]);
    }
    break;
  }
  case Kind::EMA: {
    auto const alpha = config.alpha;
    double y = x[0];
    for (std::size_t k = 0; k + 1 < align; ++k)
      y = alpha * x[k] + (1.0 - alpha) * y;
    for (std::size_t w = 0; w < n; ++w) {
      y = alpha * x[w + align - 1] + (1.0 - alpha) * y;
      emit(w, Prediction::clamped(y));
    }
    break;
  }
  case Kind::SLR:
  case Kind::PR2:
  case Kind::PR3:
  case Kind::PSLR: {
    auto const np = detail::effective_past(config, spec);
    auto const at = config.kind == Kind::PSLR ? future_midpoint(np, spec.n_future)
                                              : static_cast<double>(np) - 1.0;
    switch (regression_degree(config.kind)) {
    case 1:
      detail::scan_regression<1>(x, n, align, np, at, emit);
      break;
    case 2:
      detail::scan_regression<2>(x, n, align, np, at, emit);
      break;
    default:
      detail::scan_regression<3>(x, n, align, np, at, emit);
      break;
    }
    break;
  }
  case Kind::COM:
  case Kind::OR:
    throw std::invalid_argument("scan_predictions handles basic predictors only");
  }
}

/// Streams targets t_1..t_n as emit(window_offset, t).
template <class Sink>
void scan_targets(OutcomeTrace const& trace, WindowSpec const& spec, Sink&& emit)
{
  auto const n = window_count(trace, spec);
  if (n == 0)
    return;
  auto const x = trace.samples();
  std::uint64_t ones = 0;
  for (std::size_t k = spec.n_past; k < spec.n_past + spec.n_future; ++k)
    ones += x[k];
  auto const nf = static_cast<double>(spec.n_future);
  for (std::size_t w = 0; w < n; ++w) {
    emit(w, static_cast<double>(ones) / nf);
    if (w + 1 < n)
      ones = ones - x[w + spec.n_past] + x[w + spec.n_past + spec.n_future];
  }
}

inline PredictionRun run_predictor(OutcomeTrace const& trace, WindowSpec const& spec,
                                   PredictorConfig const& config);

namespace detail {

inline void require_same_windows(std::span<const PredictionRun> runs)
{
  if (runs.empty())
    throw std::invalid_argument("no runs given");
  for (auto const& r : runs) {
    if (r.spec != runs[0].spec || r.size() != runs[0].size() || r.targets != runs[0].targets)
      throw std::invalid_argument("runs '" + runs[0].label + "' and '" + r.label +
                                  "' cover different windows");
  }
}

} // namespace detail

/// Per-window linear combination of runs over identical windows.
inline PredictionRun combine_runs(std::span<const PredictionRun> members,
                                  std::span<const double> weights, std::string label = "COM")
{
  detail::require_same_windows(members);
  if (members.size() != weights.size())
    throw std::invalid_argument("combination has " + std::to_string(members.size()) +
                                " member runs but " + std::to_string(weights.size()) + " weights");
  validate_weights(weights);
  PredictionRun out;
  out.label = std::move(label);
  out.kind = Kind::COM;
  out.spec = members[0].spec;
  out.targets = members[0].targets;
  auto const n = out.targets.size();
  out.predictions.resize(n);
  out.raw_predictions.resize(n);
  std::vector<Prediction> ys(members.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t m = 0; m < members.size(); ++m)
      ys[m] = {members[m].predictions[i], members[m].raw_predictions[i]};
    auto const p = predict_com(ys, weights);
    out.predictions[i] = p.value;
    out.raw_predictions[i] = p.raw;
  }
  for (auto const& m : members)
    out.burn_in_windows = std::max(out.burn_in_windows, m.burn_in_windows);
  return out;
}

/// Per-window oracle selection among runs over identical windows.
inline PredictionRun oracle_runs(std::span<const PredictionRun> members, std::string label = "OR")
{
  detail::require_same_windows(members);
  if (members.size() < 2)
    throw std::invalid_argument("oracle needs at least two member runs");
  PredictionRun out;
  out.label = std::move(label);
  out.kind = Kind::OR;
  out.spec = members[0].spec;
  out.targets = members[0].targets;
  auto const n = out.targets.size();
  out.predictions.resize(n);
  out.raw_predictions.resize(n);
  out.chosen.resize(n);
  for (auto const& m : members) {
    out.member_labels.push_back(m.label);
    out.member_kinds.push_back(m.kind);
    out.burn_in_windows = std::max(out.burn_in_windows, m.burn_in_windows);
  }
  std::vector<MemberPrediction> ys(members.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t m = 0; m < members.size(); ++m)
      ys[m] = {members[m].kind, {members[m].predictions[i], members[m].raw_predictions[i]}};
    auto const choice = predict_oracle(ys, out.targets[i]);
    out.predictions[i] = choice.prediction.value;
    out.raw_predictions[i] = choice.prediction.raw;
    out.chosen[i] = choice.member;
  }
  return out;
}

inline PredictionRun run_predictor(OutcomeTrace const& trace, WindowSpec const& spec,
                                   PredictorConfig const& config)
{
  config.validate();
  if (config.kind == Kind::COM || config.kind == Kind::OR) {
    std::vector<PredictionRun> member_runs;
    member_runs.reserve(config.members.size());
    for (auto const& m : config.members)
      member_runs.push_back(run_predictor(trace, spec, m));
    auto out = config.kind == Kind::COM ? combine_runs(member_runs, config.weights, config.label())
                                        : oracle_runs(member_runs, config.label());
    out.hyperparams = config.hyperparams();
    return out;
  }

  PredictionRun out;
  out.kind = config.kind;
  out.spec = spec;
  auto resolved = config;
  if (is_window_based(config.kind))
    resolved.n_past = detail::effective_past(config, spec);
  out.label = resolved.label();
  out.hyperparams = resolved.hyperparams();
  auto const n = window_count(trace, spec);
  out.targets.resize(n);
  out.predictions.resize(n);
  out.raw_predictions.resize(n);
  scan_predictions(trace, spec, config, [&](std::size_t w, Prediction p) {
    out.predictions[w] = p.value;
    out.raw_predictions[w] = p.raw;
  });
  scan_targets(trace, spec, [&](std::size_t w, double t) { out.targets[w] = t; });
  if (config.kind == Kind::EMA)
    out.burn_in_windows = ema_burn_in_windows(config.alpha);
  return out;
}

// ---------------------------------------------------------------------------
// CSV: window_index,target,prediction,raw_prediction[,chosen_kind]
// chosen_kind holds the selected member's label (OR runs only).

inline std::string format_run_csv(PredictionRun const& run)
{
  bool const oracle = !run.chosen.empty();
  std::string out = "window_index,target,prediction,raw_prediction";
  out += oracle ? ",chosen_kind\n" : "\n";
  for (std::size_t i = 0; i < run.size(); ++i) {
    out += std::to_string(i + 1);
    out += ',';
    out += detail::format_double(run.targets[i]);
    out += ',';
    out += detail::format_double(run.predictions[i]);
    out += ',';
    out += detail::format_double(run.raw_predictions[i]);
    if (oracle) {
      out += ',';
      out += run.member_labels.at(run.chosen[i]);
    }
    out += '\n';
  }
  return out;
}

inline void write_run_csv(PredictionRun const& run, std::string const& path)
{
  detail::write_file(path, format_run_csv(run));
}

/// Parses a run CSV. Label, kind and geometry are not stored in the file and
/// are left for the caller to fill in; OR member labels are rebuilt from the
/// chosen_kind column in order of first appearance.
inline PredictionRun parse_run_csv(std::string_view text, std::string label = {})
{
  auto const rows = detail::lines(text);
  if (rows.empty())
    throw ParseError(1, "run CSV is empty");
  auto const header = detail::trim(rows[0]);
  bool oracle = false;
  if (header == "window_index,target,prediction,raw_prediction,chosen_kind")
    oracle = true;
  else if (header != "window_index,target,prediction,raw_prediction")
    throw ParseError(1, "unexpected run CSV header '" + std::string(header) + "'");

  PredictionRun run;
  run.label = std::move(label);
  if (oracle)
    run.kind = Kind::OR;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    auto const f = detail::split(rows[r], ',');
    if (f.size() != (oracle ? 5u : 4u))
      throw ParseError(r + 1, "wrong number of fields");
    auto const idx = detail::parse_integer<std::size_t>(f[0]);
    if (!idx || *idx != r)
      throw ParseError(r + 1, "window_index must be " + std::to_string(r));
    double vals[3];
    for (int c = 0; c < 3; ++c) {
      auto v = detail::parse_double(f[c + 1]);
      if (!v)
        throw ParseError(r + 1, "invalid number '" + std::string(f[c + 1]) + "'");
      vals[c] = *v;
    }
    run.targets.push_back(vals[0]);
    run.predictions.push_back(vals[1]);
    run.raw_predictions.push_back(vals[2]);
    if (oracle) {
      auto const who = std::string(detail::trim(f[4]));
      auto it = std::find(run.member_labels.begin(), run.member_labels.end(), who);
      if (it == run.member_labels.end()) {
        run.member_labels.push_back(who);
        auto const paren = who.find_first_of("([");
        try {
          run.member_kinds.push_back(parse_kind(who.substr(0, paren)));
        } catch (std::invalid_argument const&) {
          throw ParseError(r + 1, "unknown chosen kind '" + who + "'");
        }
        it = run.member_labels.end() - 1;
      }
      run.chosen.push_back(static_cast<std::size_t>(it - run.member_labels.begin()));
    }
  }
  if (run.empty())
    throw ParseError(1, "run CSV has no rows");
  return run;
}

inline PredictionRun load_run_csv(std::string const& path, std::string label = {})
{
  auto const text = detail::read_file(path);
  try {
    return parse_run_csv(text, label.empty() ? path : std::move(label));
  } catch (ParseError const& e) {
    throw ParseError(e.line(), e.detail(), path);
  }
}

} // namespace fdr
