#pragma once

// End-to-end experiment commands behind the fdrpred CLI: generate a trace,
// tune hyperparameters on a training trace, evaluate tuned predictors on a
// test trace. All outputs are deterministic functions of the inputs.

#include <fdrpred/detail/text.hpp>
#include <fdrpred/evaluation.hpp>
#include <fdrpred/predictors.hpp>
#include <fdrpred/run.hpp>
#include <fdrpred/trace.hpp>
#include <fdrpred/tuning.hpp>

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fdr {

inline constexpr std::size_t default_n_future = 3600;

/// One data source: a trace file or a generator configuration.
struct TraceSource {
  std::optional<std::string> path;
  std::optional<GilbertElliottConfig> generator;
  TraceFormat format = TraceFormat::automatic;
  double sample_period_s = OutcomeTrace::default_sample_period_s;

  OutcomeTrace load() const
  {
    if (path.has_value() == generator.has_value())
      throw std::invalid_argument("exactly one of a trace file or a generator config is required");
    if (path)
      return load_trace(*path, format, sample_period_s);
    return generate_trace(*generator);
  }

  std::string describe() const
  {
    if (path)
      return "file:" + *path;
    if (generator) {
      auto const& g = *generator;
      return "generator:p_good_to_bad=" + detail::format_double(g.p_good_to_bad) +
             ";p_bad_to_good=" + detail::format_double(g.p_bad_to_good) +
             ";delivery_prob_good=" + detail::format_double(g.delivery_prob_good) +
             ";delivery_prob_bad=" + detail::format_double(g.delivery_prob_bad) +
             ";length=" + std::to_string(g.length) + ";seed=" + std::to_string(g.seed);
    }
    return "none";
  }
};

namespace detail {

inline std::filesystem::path prepare_out_dir(std::string const& dir)
{
  if (dir.empty())
    throw std::invalid_argument("output directory is required");
  std::filesystem::path p(dir);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec || !std::filesystem::is_directory(p))
    throw std::runtime_error("cannot create output directory '" + dir + "'");
  return p;
}

inline std::string manifest(std::vector<std::pair<std::string, std::string>> const& entries)
{
  std::string out;
  for (auto const& [k, v] : entries)
    out += k + "=" + v + "\n";
  return out;
}

inline std::string join_kinds(std::vector<Kind> const& kinds)
{
  std::string s;
  for (std::size_t i = 0; i < kinds.size(); ++i)
    s += (i ? "," : "") + std::string(to_string(kinds[i]));
  return s;
}

} // namespace detail

inline std::vector<Kind> parse_kind_list(std::string_view text)
{
  std::vector<Kind> out;
  auto const t = detail::trim(text);
  if (t == "ALL" || t.empty())
    return {base_kinds.begin(), base_kinds.end()};
  for (auto f : detail::split(t, ',')) {
    auto const k = parse_kind(f);
    if (std::find(out.begin(), out.end(), k) != out.end())
      throw std::invalid_argument("kind '" + std::string(to_string(k)) + "' listed twice");
    out.push_back(k);
  }
  return out;
}

// ---------------------------------------------------------------------------
// generate

struct GenerateSummary {
  std::size_t length = 0;
  double delivery_ratio = 0;
};

inline GenerateSummary cmd_generate(GilbertElliottConfig const& config, std::string const& out_path)
{
  auto const trace = generate_trace(config);
  write_trace(trace, out_path);
  return {trace.size(), trace.delivery_ratio()};
}

// ---------------------------------------------------------------------------
// train

struct TrainOptions {
  TraceSource training;
  std::size_t n_future = default_n_future;
  std::vector<Kind> kinds{base_kinds.begin(), base_kinds.end()};
  SearchGrid np_grid = SearchGrid::default_np();
  SearchGrid alpha_grid = SearchGrid::default_alpha();
  std::optional<std::size_t> max_np;
  /// EMA information cutoff; defaults to the largest N_p used by the other
  /// kinds of this run, or n_future when EMA is tuned alone.
  std::optional<std::size_t> ema_alignment;
  std::string out_dir;
};

inline std::string tuning_summary_name(Kind k) { return "tuning_" + std::string(to_string(k)) + ".txt"; }
inline std::string curve_name(Kind k) { return "curve_" + std::string(to_string(k)) + ".csv"; }

inline std::vector<TuningResult> cmd_train(TrainOptions const& opt)
{
  if (opt.n_future < 1)
    throw std::invalid_argument("--nf must be >= 1");
  if (opt.kinds.empty())
    throw std::invalid_argument("no kinds to train");
  for (auto k : opt.kinds) {
    if (!is_window_based(k) && k != Kind::EMA)
      throw std::invalid_argument(std::string(to_string(k)) + " has no hyperparameter to train");
  }
  auto const dir = detail::prepare_out_dir(opt.out_dir);
  auto const trace = opt.training.load();

  std::vector<TuningResult> results;
  std::size_t widest = 0;
  for (auto k : opt.kinds) {
    if (k == Kind::EMA)
      continue;
    results.push_back(tune_np(trace, opt.n_future, k, opt.np_grid, opt.max_np));
    widest = std::max(widest, static_cast<std::size_t>(results.back().capped_value));
  }
  if (std::find(opt.kinds.begin(), opt.kinds.end(), Kind::EMA) != opt.kinds.end()) {
    auto const align = opt.ema_alignment.value_or(widest ? widest : opt.n_future);
    auto r = tune_alpha(trace, align, opt.n_future, opt.alpha_grid);
    auto const pos = std::find(opt.kinds.begin(), opt.kinds.end(), Kind::EMA) - opt.kinds.begin();
    results.insert(results.begin() + pos, std::move(r));
  }

  for (auto const& r : results) {
    detail::write_file((dir / tuning_summary_name(r.kind)).string(), format_tuning_summary(r));
    export_curve(r, (dir / curve_name(r.kind)).string());
  }
  detail::write_file(
    (dir / "manifest.txt").string(),
    detail::manifest({{"command", "train"},
                      {"training", opt.training.describe()},
                      {"training_length", std::to_string(trace.size())},
                      {"n_future", std::to_string(opt.n_future)},
                      {"kinds", detail::join_kinds(opt.kinds)},
                      {"np_grid_size", std::to_string(opt.np_grid.candidates.size())},
                      {"np_grid_min", detail::format_double(opt.np_grid.candidates.front())},
                      {"np_grid_max", detail::format_double(opt.np_grid.candidates.back())},
                      {"alpha_grid_size", std::to_string(opt.alpha_grid.candidates.size())},
                      {"alpha_grid_min", detail::format_double(opt.alpha_grid.candidates.front())},
                      {"alpha_grid_max", detail::format_double(opt.alpha_grid.candidates.back())},
                      {"max_np", opt.max_np ? std::to_string(*opt.max_np) : "none"},
                      {"ema_alignment",
                       opt.ema_alignment ? std::to_string(*opt.ema_alignment) : "auto"},
                      {"ema_init", "y0=x1"}}));
  return results;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateOptions {
  TraceSource test;
  std::size_t n_future = default_n_future;
  std::vector<Kind> kinds{base_kinds.begin(), base_kinds.end()};
  /// Directory written by cmd_train; supplies hyperparameters not overridden.
  std::optional<std::string> tuned_dir;
  std::map<Kind, std::size_t> np_override;
  std::optional<double> alpha_override;
  std::optional<std::size_t> ema_alignment;
  /// COM members and weights; empty disables COM.
  std::vector<std::pair<Kind, double>> com_weights;
  /// OR members; empty disables OR.
  std::vector<Kind> or_members;
  bool ema_sensitivity = true;
  bool exclude_burn_in = false;
  std::string out_dir;

  /// COM over `kinds` with equal weights and OR over `kinds` (base kinds only).
  void use_default_composites()
  {
    std::vector<Kind> members;
    for (auto k : kinds)
      if (std::find(base_kinds.begin(), base_kinds.end(), k) != base_kinds.end())
        members.push_back(k);
    com_weights.clear();
    for (auto k : members)
      com_weights.emplace_back(k, 1.0 / static_cast<double>(members.size()));
    or_members = members;
  }
};

struct EvaluateResult {
  std::vector<ErrorReport> reports;
  std::vector<PredictionRun> runs;
  std::vector<ErrorReport> ema_reports;
  std::size_t alignment = 0;
};

/// "SMA=0.5,EMA=0.5" or "equal:SMA,EMA" style weight lists.
inline std::vector<std::pair<Kind, double>> parse_com_weights(std::string_view text)
{
  auto const t = detail::trim(text);
  std::vector<std::pair<Kind, double>> out;
  if (t == "none")
    return out;
  if (t.starts_with("equal:")) {
    auto const kinds = parse_kind_list(t.substr(6));
    for (auto k : kinds)
      out.emplace_back(k, 1.0 / static_cast<double>(kinds.size()));
    return out;
  }
  for (auto f : detail::split(t, ',')) {
    auto const eq = f.find('=');
    if (eq == std::string_view::npos)
      throw std::invalid_argument("COM weight '" + std::string(f) + "' must be KIND=WEIGHT");
    auto const w = detail::parse_double(f.substr(eq + 1));
    if (!w)
      throw std::invalid_argument("invalid COM weight '" + std::string(f) + "'");
    out.emplace_back(parse_kind(f.substr(0, eq)), *w);
  }
  return out;
}

/// "4080" (all window kinds) or "SMA=4080,WMA=7680".
inline std::map<Kind, std::size_t> parse_np_overrides(std::string_view text,
                                                      std::vector<Kind> const& kinds)
{
  std::map<Kind, std::size_t> out;
  auto const t = detail::trim(text);
  if (auto const all = detail::parse_integer<std::size_t>(t)) {
    for (auto k : kinds)
      if (is_window_based(k))
        out[k] = *all;
    return out;
  }
  for (auto f : detail::split(t, ',')) {
    auto const eq = f.find('=');
    auto const v = eq == std::string_view::npos
                     ? std::nullopt
                     : detail::parse_integer<std::size_t>(f.substr(eq + 1));
    if (!v)
      throw std::invalid_argument("N_p override '" + std::string(f) + "' must be KIND=N");
    out[parse_kind(f.substr(0, eq))] = *v;
  }
  return out;
}

namespace detail {

inline std::string evaluation_footer(EvaluateResult const& r, bool exclude_burn_in)
{
  std::string out;
  out += "alignment N_p=" + std::to_string(r.alignment) + "\n";
  out += "percentiles: " + std::string(percentile_convention) + "\n";
  out += "std: " + std::string(std_convention) + "\n";
  out += "EMA init: y0=x1; burn-in windows ";
  out += exclude_burn_in ? "excluded" : "included";
  for (auto const& rep : r.reports)
    if (rep.burn_in_windows)
      out += " (" + rep.kind + " burn_in=" + std::to_string(rep.burn_in_windows) + ")";
  out += "\n";
  return out;
}

} // namespace detail

inline EvaluateResult cmd_evaluate(EvaluateOptions const& opt)
{
  if (opt.n_future < 1)
    throw std::invalid_argument("--nf must be >= 1");
  if (opt.kinds.empty())
    throw std::invalid_argument("no kinds to evaluate");
  for (auto k : opt.kinds)
    if (k == Kind::COM || k == Kind::OR)
      throw std::invalid_argument("COM and OR are configured with --com-weights / --or-members");

  // Resolve hyperparameters: explicit override, then tuning summary.
  std::map<Kind, TuningResult> tuned;
  if (opt.tuned_dir) {
    for (auto k : opt.kinds) {
      auto const path = std::filesystem::path(*opt.tuned_dir) / tuning_summary_name(k);
      if (std::filesystem::exists(path))
        tuned[k] = parse_tuning_summary(detail::read_file(path.string()));
    }
  }
  std::map<Kind, PredictorConfig> configs;
  std::size_t alignment = 0;
  for (auto k : opt.kinds) {
    if (k == Kind::EMA) {
      double alpha = 0;
      if (opt.alpha_override)
        alpha = *opt.alpha_override;
      else if (tuned.count(k))
        alpha = tuned[k].capped_value;
      else
        throw std::invalid_argument("no alpha for EMA: pass --alpha or --tuned");
      configs[k] = PredictorConfig::ema(alpha);
      continue;
    }
    std::size_t np = 0;
    if (opt.np_override.count(k))
      np = opt.np_override.at(k);
    else if (tuned.count(k))
      np = static_cast<std::size_t>(tuned[k].capped_value);
    else
      throw std::invalid_argument("no N_p for " + std::string(to_string(k)) +
                                  ": pass --np or --tuned");
    configs[k] = PredictorConfig::window(k, np);
    configs[k].validate();
    alignment = std::max(alignment, np);
  }
  if (configs.count(Kind::EMA)) {
    std::size_t ema_align = alignment ? alignment : opt.n_future;
    if (opt.ema_alignment)
      ema_align = *opt.ema_alignment;
    else if (tuned.count(Kind::EMA))
      ema_align = tuned[Kind::EMA].alignment;
    alignment = std::max(alignment, ema_align);
  }
  for (auto const& [k, w] : opt.com_weights)
    if (!configs.count(k))
      throw std::invalid_argument("COM member " + std::string(to_string(k)) + " is not evaluated");
  for (auto k : opt.or_members)
    if (!configs.count(k))
      throw std::invalid_argument("OR member " + std::string(to_string(k)) + " is not evaluated");
  if (!opt.or_members.empty() && opt.or_members.size() < 2)
    throw std::invalid_argument("OR needs at least two members");

  auto const dir = detail::prepare_out_dir(opt.out_dir);
  auto const trace = opt.test.load();
  WindowSpec const spec{alignment, opt.n_future};
  if (window_count(trace, spec) == 0)
    throw std::invalid_argument("test trace of " + std::to_string(trace.size()) +
                                " samples has no window for N_p=" + std::to_string(alignment) +
                                ", N_f=" + std::to_string(opt.n_future));

  EvaluateResult result;
  result.alignment = alignment;
  std::map<Kind, std::size_t> index;
  for (auto k : opt.kinds) {
    index[k] = result.runs.size();
    result.runs.push_back(run_predictor(trace, spec, configs[k]));
  }
  std::size_t burn_in = 0;
  for (auto const& r : result.runs)
    burn_in = std::max(burn_in, r.burn_in_windows);
  if (opt.exclude_burn_in && burn_in) {
    if (burn_in >= result.runs[0].size())
      throw std::invalid_argument("EMA burn-in covers every test window");
    for (auto& r : result.runs)
      r = r.drop_leading(burn_in);
  }

  if (!opt.com_weights.empty()) {
    std::vector<PredictionRun> members;
    std::vector<double> weights;
    for (auto const& [k, w] : opt.com_weights) {
      members.push_back(result.runs[index[k]]);
      weights.push_back(w);
    }
    auto com = combine_runs(members, weights, "COM");
    std::vector<PredictorConfig> cfgs;
    for (auto const& [k, w] : opt.com_weights)
      cfgs.push_back(configs[k]);
    com.hyperparams = PredictorConfig::combination(cfgs, weights).hyperparams();
    result.runs.push_back(std::move(com));
  }
  if (!opt.or_members.empty()) {
    std::vector<PredictionRun> members;
    std::vector<PredictorConfig> cfgs;
    for (auto k : opt.or_members) {
      members.push_back(result.runs[index[k]]);
      cfgs.push_back(configs[k]);
    }
    auto orr = oracle_runs(members, "OR");
    orr.hyperparams = PredictorConfig::oracle(cfgs).hyperparams();
    result.runs.push_back(std::move(orr));
  }

  // Win rates among the basic models (PSLR and composites are not contenders).
  std::vector<std::size_t> contenders;
  for (std::size_t i = 0; i < opt.kinds.size(); ++i)
    if (std::find(base_kinds.begin(), base_kinds.end(), opt.kinds[i]) != base_kinds.end())
      contenders.push_back(i);
  std::vector<double> rates;
  if (contenders.size() >= 2) {
    std::vector<PredictionRun> set;
    for (auto i : contenders)
      set.push_back(result.runs[i]);
    rates = win_rates(set);
  }

  for (std::size_t i = 0; i < result.runs.size(); ++i) {
    auto rep = summarize(result.runs[i]);
    auto const c = std::find(contenders.begin(), contenders.end(), i);
    if (!rates.empty() && c != contenders.end())
      rep.win_rate = rates[static_cast<std::size_t>(c - contenders.begin())];
    result.reports.push_back(std::move(rep));
    auto const name = std::string(to_string(result.runs[i].kind));
    write_run_csv(result.runs[i], (dir / ("run_" + name + ".csv")).string());
    cdf_export(result.runs[i], (dir / ("cdf_" + name + ".csv")).string());
  }
  detail::write_file((dir / "report.csv").string(), format_report_csv(result.reports));
  detail::write_file((dir / "report.txt").string(),
                     comparison_table(result.reports) + "\n" +
                       detail::evaluation_footer(result, opt.exclude_burn_in));

  // EMA sensitivity: alpha*/3, alpha*, 3 alpha*, their equal-weight COM and OR.
  if (opt.ema_sensitivity && configs.count(Kind::EMA)) {
    auto const a = configs[Kind::EMA].alpha;
    std::vector<PredictionRun> emas;
    std::vector<PredictorConfig> cfgs;
    for (double alpha : {a / 3.0, a, 3.0 * a}) {
      if (!(alpha > 0 && alpha <= 1))
        continue;
      cfgs.push_back(PredictorConfig::ema(alpha));
      emas.push_back(run_predictor(trace, spec, cfgs.back()));
      if (opt.exclude_burn_in && burn_in)
        emas.back() = emas.back().drop_leading(burn_in);
    }
    if (emas.size() >= 2) {
      auto const rates_ema = win_rates(emas);
      for (std::size_t i = 0; i < emas.size(); ++i) {
        auto rep = summarize(emas[i]);
        rep.win_rate = rates_ema[i];
        result.ema_reports.push_back(std::move(rep));
      }
      auto const eq = std::vector<double>(emas.size(), 1.0 / static_cast<double>(emas.size()));
      auto com = combine_runs(emas, eq, "COM");
      com.hyperparams = PredictorConfig::combination(cfgs, eq).hyperparams();
      result.ema_reports.push_back(summarize(com));
      auto orr = oracle_runs(emas, "OR");
      orr.hyperparams = PredictorConfig::oracle(cfgs).hyperparams();
      result.ema_reports.push_back(summarize(orr));
      detail::write_file((dir / "ema_report.csv").string(), format_report_csv(result.ema_reports));
      detail::write_file((dir / "ema_report.txt").string(), comparison_table(result.ema_reports));
    }
  }

  std::string or_list;
  for (auto k : opt.or_members)
    or_list += (or_list.empty() ? "" : ",") + std::string(to_string(k));
  std::string com_list;
  for (auto const& [k, w] : opt.com_weights)
    com_list += (com_list.empty() ? "" : ",") + std::string(to_string(k)) + "=" +
                detail::format_double(w);
  std::vector<std::pair<std::string, std::string>> entries = {
    {"command", "evaluate"},
    {"test", opt.test.describe()},
    {"test_length", std::to_string(trace.size())},
    {"n_future", std::to_string(opt.n_future)},
    {"alignment_np", std::to_string(alignment)},
    {"kinds", detail::join_kinds(opt.kinds)},
    {"tuned_dir", opt.tuned_dir.value_or("none")},
    {"com_weights", com_list.empty() ? "none" : com_list},
    {"or_members", or_list.empty() ? "none" : or_list},
    {"exclude_burn_in", opt.exclude_burn_in ? "true" : "false"},
    {"ema_init", "y0=x1"},
    {"percentiles", percentile_convention},
    {"std", std_convention},
  };
  for (auto k : opt.kinds)
    entries.emplace_back("config_" + std::string(to_string(k)), configs[k].hyperparams());
  detail::write_file((dir / "manifest.txt").string(), detail::manifest(entries));
  return result;
}

} // namespace fdr
