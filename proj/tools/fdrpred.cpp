// fdrpred: frame delivery ratio prediction experiments.
//
//   fdrpred generate --length 460927 --seed 7 --out test.trace
//   fdrpred train    --trace train.trace --out tuned/ [--max-np 28800]
//   fdrpred evaluate --trace test.trace --tuned tuned/ --out results/
//   fdrpred cdf      --run results/run_EMA.csv --out cdf_EMA.csv

#include <fdrpred/fdrpred.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

namespace {

struct SourceFlags {
  std::string trace;
  std::string generator_config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> length;
  std::string format = "auto";
  double sample_period = fdr::OutcomeTrace::default_sample_period_s;

  void add(CLI::App* app)
  {
    app->add_option("--trace", trace, "Trace file (bare 0/1 lines or CSV with an 'outcome' column)");
    app->add_option("--generator-config", generator_config,
                    "Generate the trace from a key=value Gilbert-Elliott config file instead");
    app->add_option("--seed", seed, "Override the generator seed");
    app->add_option("--length", length, "Override the generator length");
    app->add_option("--format", format, "Trace format: auto, bare or csv");
    app->add_option("--sample-period", sample_period, "Sampling period in seconds");
  }

  fdr::TraceSource resolve() const
  {
    fdr::TraceSource src;
    src.format = fdr::parse_trace_format(format);
    src.sample_period_s = sample_period;
    if (!trace.empty() && !generator_config.empty())
      throw std::invalid_argument("--trace and --generator-config are mutually exclusive");
    if (!trace.empty()) {
      src.path = trace;
    } else if (!generator_config.empty()) {
      auto cfg = fdr::parse_generator_config(fdr::detail::read_file(generator_config));
      if (seed)
        cfg.seed = *seed;
      if (length)
        cfg.length = *length;
      src.generator = cfg;
    } else {
      throw std::invalid_argument("one of --trace or --generator-config is required");
    }
    return src;
  }
};

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Frame delivery ratio prediction: moving averages, regression, combination and oracle"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Write a synthetic Gilbert-Elliott outcome trace");
  fdr::GilbertElliottConfig gcfg;
  std::string gen_config_file;
  std::string gen_out;
  gen->add_option("--config", gen_config_file, "key=value config file (flags override it)");
  auto* o_len = gen->add_option("--length", gcfg.length, "Number of samples");
  auto* o_seed = gen->add_option("--seed", gcfg.seed, "Random seed");
  auto* o_pgb = gen->add_option("--p-good-to-bad", gcfg.p_good_to_bad, "Per-step good->bad probability");
  auto* o_pbg = gen->add_option("--p-bad-to-good", gcfg.p_bad_to_good, "Per-step bad->good probability");
  auto* o_dg = gen->add_option("--delivery-good", gcfg.delivery_prob_good, "Delivery probability in the good state");
  auto* o_db = gen->add_option("--delivery-bad", gcfg.delivery_prob_bad, "Delivery probability in the bad state");
  gen->add_option("--out", gen_out, "Output trace path")->required();

  // train
  auto* train = app.add_subcommand("train", "Tune N_p per model and alpha for EMA on a training trace");
  SourceFlags train_src;
  train_src.add(train);
  fdr::TrainOptions topt;
  std::string train_kinds = "ALL";
  std::string np_grid;
  std::string alpha_grid;
  std::optional<std::size_t> max_np;
  std::optional<std::size_t> train_ema_np;
  train->add_option("--nf", topt.n_future, "Future window length N_f");
  train->add_option("--kinds", train_kinds, "Comma-separated kinds or ALL (SMA,WMA,EMA,SLR,PR2,PR3)");
  train->add_option("--grid", np_grid, "N_p grid: list '10,100,1000' or 'log:LO:HI:PER_DECADE'");
  train->add_option("--alpha-grid", alpha_grid, "alpha grid: list or 'log:LO:HI:COUNT'");
  train->add_option("--max-np", max_np, "Cap applied to the tuned N_p of each model");
  train->add_option("--ema-np", train_ema_np, "Information cutoff N_p used to align EMA windows");
  train->add_option("--out", topt.out_dir, "Output directory")->required();

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Compare predictors on a test trace");
  SourceFlags eval_src;
  eval_src.add(eval);
  fdr::EvaluateOptions eopt;
  std::string eval_kinds = "ALL";
  std::string tuned_dir;
  std::string np_over;
  std::optional<double> alpha_over;
  std::optional<std::size_t> eval_ema_np;
  std::string com_weights = "equal";
  std::string or_members = "ALL";
  bool no_ema_sens = false;
  eval->add_option("--nf", eopt.n_future, "Future window length N_f");
  eval->add_option("--kinds", eval_kinds, "Comma-separated kinds or ALL; PSLR may be added");
  eval->add_option("--tuned", tuned_dir, "Directory written by 'train'");
  eval->add_option("--np", np_over, "N_p override: one value for all, or 'SMA=4080,WMA=7680'");
  eval->add_option("--alpha", alpha_over, "EMA alpha override");
  eval->add_option("--ema-np", eval_ema_np, "Information cutoff N_p used to align EMA windows");
  eval->add_option("--com-weights", com_weights,
                   "COM weights: 'equal', 'equal:EMA,SLR', 'SMA=0.5,EMA=0.5' or 'none'");
  eval->add_option("--or-members", or_members, "OR members: ALL, a kind list, or 'none'");
  eval->add_flag("--exclude-burn-in", eopt.exclude_burn_in, "Drop the EMA burn-in windows");
  eval->add_flag("--no-ema-sensitivity", no_ema_sens, "Skip the alpha*/3, alpha*, 3alpha* comparison");
  eval->add_option("--out", eopt.out_dir, "Output directory")->required();

  // cdf
  auto* cdf = app.add_subcommand("cdf", "Write the error CDF of an exported prediction run");
  std::string cdf_run;
  std::string cdf_out;
  cdf->add_option("--run", cdf_run, "Run CSV written by 'evaluate'")->required();
  cdf->add_option("--out", cdf_out, "Output CDF CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (CLI::ParseError const& e) {
    return app.exit(e);
  }

  try {
    if (*gen) {
      fdr::GilbertElliottConfig cfg;
      if (!gen_config_file.empty())
        cfg = fdr::parse_generator_config(fdr::detail::read_file(gen_config_file));
      if (*o_len)
        cfg.length = gcfg.length;
      if (*o_seed)
        cfg.seed = gcfg.seed;
      if (*o_pgb)
        cfg.p_good_to_bad = gcfg.p_good_to_bad;
      if (*o_pbg)
        cfg.p_bad_to_good = gcfg.p_bad_to_good;
      if (*o_dg)
        cfg.delivery_prob_good = gcfg.delivery_prob_good;
      if (*o_db)
        cfg.delivery_prob_bad = gcfg.delivery_prob_bad;
      auto const s = fdr::cmd_generate(cfg, gen_out);
      std::printf("length=%zu fdr=%.6f\n", s.length, s.delivery_ratio);
    } else if (*train) {
      topt.training = train_src.resolve();
      topt.kinds = fdr::parse_kind_list(train_kinds);
      if (!np_grid.empty())
        topt.np_grid = fdr::parse_grid(np_grid, false);
      if (!alpha_grid.empty())
        topt.alpha_grid = fdr::parse_grid(alpha_grid, true);
      topt.max_np = max_np;
      topt.ema_alignment = train_ema_np;
      auto const results = fdr::cmd_train(topt);
      for (auto const& r : results)
        std::cout << fdr::format_tuning_summary(r) << "\n";
    } else if (*eval) {
      eopt.test = eval_src.resolve();
      eopt.kinds = fdr::parse_kind_list(eval_kinds);
      if (!tuned_dir.empty())
        eopt.tuned_dir = tuned_dir;
      if (!np_over.empty())
        eopt.np_override = fdr::parse_np_overrides(np_over, eopt.kinds);
      eopt.alpha_override = alpha_over;
      eopt.ema_alignment = eval_ema_np;
      eopt.ema_sensitivity = !no_ema_sens;
      eopt.use_default_composites();
      if (com_weights != "equal")
        eopt.com_weights = fdr::parse_com_weights(com_weights);
      if (or_members == "none")
        eopt.or_members.clear();
      else if (or_members != "ALL")
        eopt.or_members = fdr::parse_kind_list(or_members);
      auto const result = fdr::cmd_evaluate(eopt);
      std::cout << fdr::comparison_table(result.reports);
      if (!result.ema_reports.empty())
        std::cout << "\n" << fdr::comparison_table(result.ema_reports);
    } else if (*cdf) {
      auto const run = fdr::load_run_csv(cdf_run);
      fdr::cdf_export(run, cdf_out);
    }
  } catch (std::exception const& e) {
    std::cerr << "fdrpred: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
