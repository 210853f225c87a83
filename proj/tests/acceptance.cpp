// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include "oracles.hpp"

#include <fdrpred/fdrpred.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

using fdr::Kind;
using fdr::OutcomeTrace;
using fdr::PredictionRun;
using fdr::PredictorConfig;
using fdr::SearchGrid;
using fdr::WindowSpec;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(char const* f, auto... args)
{
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double mae(PredictionRun const& r) { return fdr::summarize(r).mae; }

// 1. every predictor matches a naive reimplementation within 1e-9
Outcome formula_fidelity()
{
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<std::size_t> geom(5, 50);
  std::uniform_real_distribution<double> logalpha(std::log(1e-3), std::log(1.0));
  std::uniform_real_distribution<double> prob(0.2, 0.9);
  double worst = 0;
  std::size_t compared = 0;
  for (int trial = 0; trial < 100; ++trial) {
    auto const np = geom(rng);
    auto const nf = geom(rng);
    auto const alpha = std::exp(logalpha(rng));
    auto const x = oracle::random_bits(2000, prob(rng), rng());
    OutcomeTrace const trace(x);
    WindowSpec const spec{np, nf};

    std::vector<PredictorConfig> basics = {
      PredictorConfig::window(Kind::SMA, np), PredictorConfig::window(Kind::WMA, np),
      PredictorConfig::ema(alpha),            PredictorConfig::window(Kind::SLR, np),
      PredictorConfig::window(Kind::PR2, np), PredictorConfig::window(Kind::PR3, np),
      PredictorConfig::window(Kind::PSLR, np)};
    std::vector<std::vector<double>> naive;
    for (auto const& c : basics) {
      naive.push_back(oracle::predictions(x, np, nf, c));
      auto const run = fdr::run_predictor(trace, spec, c);
      if (run.size() != naive.back().size())
        return {false, c.label() + " window count mismatch"};
      for (std::size_t i = 0; i < run.size(); ++i)
        worst = std::max(worst, std::abs(run.predictions[i] - naive.back()[i]));
      compared += run.size();
    }
    auto const targets = oracle::targets(x, np, nf);

    // COM over the six basic kinds with random convex weights
    std::vector<double> w(6);
    double total = 0;
    for (auto& v : w)
      total += (v = prob(rng));
    for (auto& v : w)
      v /= total;
    w[5] = 1.0 - (w[0] + w[1] + w[2] + w[3] + w[4]);
    std::vector<PredictorConfig> six(basics.begin(), basics.begin() + 6);
    auto const com = fdr::run_predictor(trace, spec, PredictorConfig::combination(six, w));
    auto const orr = fdr::run_predictor(trace, spec, PredictorConfig::oracle(six));
    for (std::size_t i = 0; i < targets.size(); ++i) {
      double c = 0;
      double min_err = 1;
      for (std::size_t m = 0; m < 6; ++m) {
        c += w[m] * naive[m][i];
        min_err = std::min(min_err, std::abs(targets[i] - naive[m][i]));
      }
      worst = std::max(worst, std::abs(com.predictions[i] - oracle::clamp01(c)));
      // members tied with the minimum in exact arithmetic can be separated by
      // rounding either way, so any member within the tolerance of the naive
      // minimum is a valid pick; the pick must reproduce that member's output
      auto const pick = orr.chosen[i];
      worst = std::max(worst, std::abs(std::abs(targets[i] - naive[pick][i]) - min_err));
      worst = std::max(worst, std::abs(orr.predictions[i] - naive[pick][i]));
      worst = std::max(worst, std::abs(orr.targets[i] - targets[i]));
    }
    compared += 2 * targets.size();
  }
  return {worst <= 1e-9, fmt("max |diff| = %.3g over %zu window predictions", worst, compared)};
}

// 2. WMA weights for N_p = 3 are exactly 3/6, 2/6, 1/6
Outcome wma_weights()
{
  bool ok = true;
  std::string got;
  for (std::size_t j = 1; j <= 3; ++j) {
    auto const r = fdr::wma_weight(3, j);
    ok = ok && r.num * 6 == (4 - j) * r.den;
    got += fmt("%s%llu/%llu", j > 1 ? ", " : "", static_cast<unsigned long long>(r.num),
               static_cast<unsigned long long>(r.den));
  }
  std::vector<std::uint8_t> const window = {0, 1, 1};
  ok = ok && fdr::predict_wma(window).value == 5.0 / 6.0;
  return {ok, "w = " + got};
}

// 3. OR dominates every member, aggregate and per window
Outcome oracle_dominance()
{
  std::size_t checked = 0;
  std::vector<std::vector<std::size_t>> const subsets = {
    {0, 1, 2, 3, 4, 5}, {2, 3, 5}, {0, 2}, {3, 4, 5}, {1, 2, 3, 4}};
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    fdr::GilbertElliottConfig g;
    g.p_good_to_bad = 1e-3;
    g.p_bad_to_good = 2e-3;
    g.seed = seed;
    std::size_t const np = 100 * seed, nf = 60;
    g.length = 100000 + np + nf - 1;
    auto const trace = fdr::generate_trace(g);
    WindowSpec const spec{np, nf};
    std::vector<PredictorConfig> const cfgs = {
      PredictorConfig::window(Kind::SMA, np), PredictorConfig::window(Kind::WMA, np / 2),
      PredictorConfig::ema(0.005),            PredictorConfig::window(Kind::SLR, np),
      PredictorConfig::window(Kind::PR2, np), PredictorConfig::window(Kind::PR3, np)};
    std::vector<PredictionRun> runs;
    for (auto const& c : cfgs)
      runs.push_back(fdr::run_predictor(trace, spec, c));
    for (auto const& sub : subsets) {
      std::vector<PredictionRun> members;
      for (auto m : sub)
        members.push_back(runs[m]);
      auto const orr = fdr::oracle_runs(members);
      auto const or_mse = fdr::mean_squared_error(orr);
      for (auto const& m : members) {
        if (or_mse > fdr::mean_squared_error(m))
          return {false, "aggregate MSE above member " + m.label};
        for (std::size_t i = 0; i < orr.size(); ++i) {
          auto const eo = orr.targets[i] - orr.predictions[i];
          auto const em = m.targets[i] - m.predictions[i];
          if (eo * eo > em * em)
            return {false, fmt("window %zu: OR error above member ", i + 1) + m.label};
        }
      }
      checked += orr.size() * members.size();
    }
  }
  return {true, fmt("%zu (window, member) pairs, 15 member sets, 10^5 windows each", checked)};
}

// 4. tuned EMA on i.i.d. Bernoulli(0.7), N_f = 3600: MAE in [0.55%, 0.75%]
Outcome stationary_floor()
{
  std::size_t const nf = 3600, align = 28800;
  auto const train = fdr::generate_bernoulli_trace(0.7, 1000000, 4001);
  auto const test = fdr::generate_bernoulli_trace(0.7, 1000000, 4002);
  auto const tuned = fdr::tune_alpha(train, align, nf, SearchGrid::default_alpha());
  auto const run = fdr::run_predictor(test, WindowSpec{align, nf},
                                      PredictorConfig::ema(tuned.best_value));
  auto const m = mae(run);
  // folded normal: E|Z| = sigma * sqrt(2/pi) for the sampling noise of the target alone
  double const floor = std::sqrt(2.0 / std::numbers::pi) * std::sqrt(0.7 * 0.3 / 3600.0);
  return {m >= 0.0055 && m <= 0.0075,
          fmt("MAE = %.4f%% (alpha* = %.4g, alignment %zu); folded-normal floor %.4f%%", m * 100,
              tuned.best_value, align, floor * 100)};
}

struct TrialResult {
  double sma = 0, ema = 0, slr = 0, pr3 = 0;
};

TrialResult drift_trial(std::uint64_t seed, std::vector<fdr::ErrorReport>* reports = nullptr)
{
  std::size_t const nf = 3600;
  fdr::GilbertElliottConfig g;
  g.length = 600000;
  g.seed = 2 * seed + 1;
  auto const train = fdr::generate_trace(g);
  g.seed = 2 * seed + 2;
  auto const test = fdr::generate_trace(g);

  auto const grid = SearchGrid::log_spaced_np(10, 28800, 12);
  std::size_t align = 0;
  std::vector<PredictorConfig> cfgs;
  for (auto k : {Kind::SMA, Kind::SLR, Kind::PR3}) {
    auto const r = fdr::tune_np(train, nf, k, grid);
    cfgs.push_back(PredictorConfig::window(k, static_cast<std::size_t>(r.best_value)));
    align = std::max(align, cfgs.back().n_past);
  }
  auto const ra = fdr::tune_alpha(train, align, nf, SearchGrid::log_spaced_alpha(1e-5, 1e-1, 30));
  cfgs.push_back(PredictorConfig::ema(ra.best_value));

  WindowSpec const spec{align, nf};
  std::vector<PredictionRun> runs;
  for (auto const& c : cfgs)
    runs.push_back(fdr::run_predictor(test, spec, c));
  if (reports) {
    auto const rates = fdr::win_rates(runs);
    for (std::size_t i = 0; i < runs.size(); ++i) {
      reports->push_back(fdr::summarize(runs[i]));
      reports->back().win_rate = rates[i];
    }
  }
  return {mae(runs[0]), mae(runs[3]), mae(runs[1]), mae(runs[2])};
}

// 5. drifting channel: EMA <= SMA and PR3 >= SLR (MAE) in at least 8 of 10 trials
Outcome drift_ordering()
{
  int ema_ok = 0, pr_ok = 0, both = 0;
  std::string row;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto const r = drift_trial(seed);
    bool const a = r.ema <= r.sma;
    bool const b = r.pr3 >= r.slr;
    ema_ok += a;
    pr_ok += b;
    both += a && b;
    row += a && b ? "+" : "-";
  }
  return {both >= 8, fmt("EMA<=SMA %d/10, PR3>=SLR %d/10, both %d/10 [%s]", ema_ok, pr_ok, both,
                         row.c_str())};
}

// 6. piecewise SLR is unbiased on i.i.d. Bernoulli(p)
Outcome slr_unbiased()
{
  std::size_t const np = 200, windows = 10000;
  std::string detail;
  bool ok = true;
  std::uint64_t seed = 600;
  for (double p : {0.3, 0.5, 0.8}) {
    // disjoint past windows so the 10^4 predictions are independent
    auto const trace = fdr::generate_bernoulli_trace(p, np * windows + 1, ++seed);
    auto const run = fdr::run_predictor(trace, WindowSpec{np, 1}, PredictorConfig::window(Kind::SLR, np));
    fdr::CompensatedSum sum, sq;
    for (std::size_t w = 0; w < windows; ++w) {
      auto const y = run.raw_predictions[w * np];
      sum.add(y);
      sq.add(y * y);
    }
    auto const n = static_cast<double>(windows);
    auto const mean = sum.value() / n;
    auto const se = std::sqrt((sq.value() / n - mean * mean) * n / (n - 1) / n);
    auto const z = (mean - p) / se;
    ok = ok && std::abs(z) < 4;
    detail += fmt("%sp=%.1f: mean %.5f, z = %+.2f", detail.empty() ? "" : "; ", p, mean, z);
  }
  return {ok, detail};
}

// 7. tuning curves reproduce under independent recomputation; argmin and ties
Outcome tuning_correctness()
{
  fdr::GilbertElliottConfig g;
  g.p_good_to_bad = 1e-3;
  g.p_bad_to_good = 1e-3;
  g.length = 6000;
  g.seed = 77;
  auto const trace = fdr::generate_trace(g);
  auto const x = trace.samples();
  std::size_t const nf = 50;
  double worst = 0;
  auto check = [&](fdr::TuningResult const& r, auto config_of, std::size_t align_of_np) -> bool {
    std::size_t best = 0;
    for (std::size_t i = 0; i < r.curve.size(); ++i) {
      auto const& p = r.curve[i];
      auto const cfg = config_of(p.candidate);
      auto const align = align_of_np ? align_of_np : static_cast<std::size_t>(p.candidate);
      auto const ref = oracle::mse(oracle::targets(x, align, nf), oracle::predictions(x, align, nf, cfg));
      worst = std::max(worst, std::abs(ref - p.mse));
      if (p.mse < r.curve[best].mse)
        best = i;
    }
    return r.best_value == r.curve[best].candidate;
  };

  auto const grid = SearchGrid::of({5, 8, 13, 21, 34, 55, 89, 144, 233, 377, 610, 987});
  bool argmin_ok = true;
  for (auto k : {Kind::SMA, Kind::WMA, Kind::SLR, Kind::PR2, Kind::PR3, Kind::PSLR}) {
    auto const r = fdr::tune_np(trace, nf, k, grid);
    argmin_ok &= check(r, [k](double c) { return PredictorConfig::window(k, static_cast<std::size_t>(c)); }, 0);
  }
  auto const ra = fdr::tune_alpha(trace, 100, nf, SearchGrid::log_spaced_alpha(1e-4, 1.0, 15));
  argmin_ok &= check(ra, [](double c) { return PredictorConfig::ema(c); }, 100);

  // ties go to the smaller candidate; a single candidate is returned as is
  OutcomeTrace const flat(std::vector<std::uint8_t>(3000, 1));
  bool ties_ok = fdr::tune_np(flat, nf, Kind::PR2, grid).best_value == 5 &&
                 fdr::tune_alpha(flat, 100, nf, SearchGrid::of({0.01, 0.1})).best_value == 0.01;
  bool single_ok = true;
  for (auto k : {Kind::SMA, Kind::WMA, Kind::SLR, Kind::PR2, Kind::PR3})
    single_ok &= fdr::tune_np(trace, nf, k, SearchGrid::of({42})).best_value == 42;
  single_ok &= fdr::tune_alpha(trace, 100, nf, SearchGrid::of({0.03})).best_value == 0.03;

  return {worst <= 1e-12 && argmin_ok && ties_ok && single_ok,
          fmt("max |curve - recomputed| = %.3g; argmin %s, ties %s, single candidate %s", worst,
              argmin_ok ? "ok" : "WRONG", ties_ok ? "ok" : "WRONG", single_ok ? "ok" : "WRONG")};
}

std::string check_report(fdr::ErrorReport const& r)
{
  if (!(r.p90() <= r.p95() && r.p95() <= r.p99() && r.p99() <= r.p999() && r.p999() <= r.max_error))
    return r.kind + ": percentiles not monotone";
  if (std::abs(r.mse - (r.mae * r.mae + r.std_abs_error * r.std_abs_error)) > 1e-9)
    return r.kind + ": mse != mae^2 + std^2";
  return {};
}

// 8. statistics suite
Outcome statistics_suite()
{
  std::size_t reports_checked = 0;
  // an 8-row comparison on a drifting channel, about 10^5 test windows
  fdr::GilbertElliottConfig g;
  g.p_good_to_bad = 5e-4;
  g.p_bad_to_good = 1e-3;
  g.length = 100000 + 2000 + 400 - 1;
  g.seed = 808;
  auto const trace = fdr::generate_trace(g);
  WindowSpec const spec{2000, 400};
  std::vector<PredictorConfig> const cfgs = {
    PredictorConfig::window(Kind::SMA, 1500), PredictorConfig::window(Kind::WMA, 2000),
    PredictorConfig::ema(0.002),              PredictorConfig::window(Kind::SLR, 2000),
    PredictorConfig::window(Kind::PR2, 2000), PredictorConfig::window(Kind::PR3, 2000)};
  std::vector<PredictionRun> runs;
  for (auto const& c : cfgs)
    runs.push_back(fdr::run_predictor(trace, spec, c));
  auto const rates = fdr::win_rates(runs);
  double rate_sum = 0;
  for (auto v : rates)
    rate_sum += v;
  runs.push_back(fdr::combine_runs(runs, std::vector<double>(6, 1.0 / 6)));
  runs.push_back(fdr::oracle_runs(std::span(runs).first(6)));

  double pct_worst = 0;
  for (auto const& run : runs) {
    auto const rep = fdr::summarize(run);
    if (auto e = check_report(rep); !e.empty())
      return {false, e};
    ++reports_checked;
    auto const cdf = fdr::error_cdf(run);
    if (cdf.back().cumulative_fraction != 1.0)
      return {false, rep.kind + ": CDF does not end at 1"};
    std::vector<double> abs(run.size());
    for (std::size_t i = 0; i < run.size(); ++i)
      abs[i] = std::abs(run.targets[i] - run.predictions[i]);
    for (std::size_t p = 0; p < 4; ++p)
      pct_worst = std::max(pct_worst, std::abs(rep.percentiles[p] -
                                               oracle::sorted_percentile(abs, fdr::reported_percentiles[p])));
  }
  // reports from a tuned drift trial as well
  std::vector<fdr::ErrorReport> more;
  drift_trial(3, &more);
  double more_sum = 0;
  for (auto const& r : more) {
    if (auto e = check_report(r); !e.empty())
      return {false, e};
    more_sum += *r.win_rate;
    ++reports_checked;
  }
  bool const ok = std::abs(rate_sum - 1) <= 1e-12 && std::abs(more_sum - 1) <= 1e-12 && pct_worst == 0;
  return {ok, fmt("%zu reports; win-rate sums %.15g, %.15g; percentile vs full sort max diff %g "
                  "on %zu-window series",
                  reports_checked, rate_sum, more_sum, pct_worst, runs[0].size())};
}

// 9. six-model evaluate over 2.8M samples, N_p up to 28800, N_f = 3600, under 5 minutes
Outcome scale()
{
  auto const dir = std::filesystem::temp_directory_path() / "fdrpred_acceptance_scale";
  std::filesystem::remove_all(dir);
  fdr::EvaluateOptions opt;
  fdr::GilbertElliottConfig g;
  g.length = 2800000;
  g.seed = 9;
  opt.test.generator = g;
  opt.n_future = 3600;
  opt.np_override = {{Kind::SMA, 4080}, {Kind::WMA, 7680}, {Kind::SLR, 28800},
                     {Kind::PR2, 28800}, {Kind::PR3, 28800}};
  opt.alpha_override = 3.75e-4;
  opt.out_dir = dir.string();
  opt.use_default_composites();
  auto const t0 = std::chrono::steady_clock::now();
  auto const res = fdr::cmd_evaluate(opt);
  auto const secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::filesystem::remove_all(dir);
  return {secs < 300 && res.reports.size() == 8,
          fmt("%zu rows (+%zu EMA sensitivity rows), %zu windows each, %.1f s", res.reports.size(),
              res.ema_reports.size(), res.reports[0].n_windows, secs)};
}

} // namespace

int main()
{
  struct Criterion {
    char const* name;
    std::function<Outcome()> run;
  };
  std::vector<Criterion> const criteria = {
    {"formula fidelity", formula_fidelity},
    {"WMA weight example", wma_weights},
    {"oracle dominance", oracle_dominance},
    {"stationary error floor", stationary_floor},
    {"drift ordering", drift_ordering},
    {"SLR unbiasedness", slr_unbiased},
    {"tuning correctness", tuning_correctness},
    {"statistics suite", statistics_suite},
    {"scale", scale},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    auto const t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (std::exception const& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    auto const secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %zu %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed ? 1 : 0;
}
