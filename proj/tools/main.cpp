// Command-line front end.  One binary, subcommand per pipeline stage:
//
//   simulate    synthetic survey + raw series with known ground truth
//   interpolate raw series -> weekly grid (natural cubic spline)
//   featurize   plots + weekly grid -> model-ready design matrix
//   fit         train one model on an 80/20 split of a dataset
//   cv          cross-validation curve for a hyperparameter sweep
//   report      lag activity report from a fitted elastic net
//   eval        train all three models on one split, tabulate MSEs
//
// Every command is a pure function of its inputs, flags and --seed: reruns
// produce byte-identical artifacts regardless of --threads.  Exit codes:
// 0 success, 2 invalid input or configuration, 3 numeric failure.

#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rsyield/causal.hpp"
#include "rsyield/csv.hpp"
#include "rsyield/elasticnet.hpp"
#include "rsyield/errors.hpp"
#include "rsyield/eval.hpp"
#include "rsyield/features.hpp"
#include "rsyield/gam.hpp"
#include "rsyield/gbt.hpp"
#include "rsyield/ingest.hpp"
#include "rsyield/rng.hpp"
#include "rsyield/synth.hpp"
#include "rsyield/timeseries.hpp"

#ifndef RSYIELD_VERSION
#define RSYIELD_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace rsyield;
using nlohmann::ordered_json;

namespace {

struct GlobalOpts {
  std::uint64_t seed = 42;
  int threads = 1;
  std::string out = ".";
};

// Accumulates everything a command writes plus the settings that determined
// the output, then lands manifest.json last (atomically, so a manifest's
// presence implies the run completed).
class Run {
 public:
  Run(std::string command, const GlobalOpts& g) : command_(std::move(command)), global_(g) {
    start_ = std::chrono::steady_clock::now();
    std::error_code ec;
    fs::create_directories(g.out, ec);
    if (ec) throw ValidationError("cannot create output directory " + g.out + ": " + ec.message());
    setting("seed", std::to_string(g.seed));
  }

  const fs::path out_dir() const { return fs::path(global_.out); }
  fs::path out_path(const std::string& name) const { return out_dir() / name; }
  std::uint64_t seed() const { return global_.seed; }
  int threads() const { return global_.threads; }

  void input(const fs::path& p) { inputs_.push_back(p.string()); }
  void setting(const std::string& key, const std::string& value) {
    settings_.emplace_back(key, value);
  }
  void setting(const std::string& key, double value) { setting(key, csv::fmt_double(value)); }
  void setting(const std::string& key, int value) { setting(key, std::to_string(value)); }

  void wrote(const fs::path& p) {
    outputs_.push_back(p.filename().string());
    std::cerr << "wrote " << p.string() << "\n";
  }

  void finish() {
    // The hash covers the output-determining configuration: command, inputs,
    // algorithm settings and seed.  Thread count and wall clock are recorded
    // but excluded, since they must not change what gets written.
    std::string canon = "command=" + command_ + "\n";
    for (const std::string& in : inputs_) canon += "input=" + in + "\n";
    for (const auto& [k, v] : settings_) canon += k + "=" + v + "\n";
    char hash_hex[19];
    std::snprintf(hash_hex, sizeof hash_hex, "%016llx",
                  static_cast<unsigned long long>(rng::fnv1a(canon)));

    const auto elapsed = std::chrono::steady_clock::now() - start_;
    ordered_json j;
    j["command"] = command_;
    j["inputs"] = inputs_;
    j["outputs"] = outputs_;
    j["seed"] = global_.seed;
    j["threads"] = global_.threads;
    j["config_hash"] = std::string(hash_hex);
    j["version"] = RSYIELD_VERSION;
    j["wall_clock_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();
    csv::write_file_atomic(out_path("manifest.json"), j.dump(2) + "\n");
  }

 private:
  std::string command_;
  GlobalOpts global_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
  std::vector<std::pair<std::string, std::string>> settings_;
};

double parse_auto_or_double(const std::string& text, const std::string& flag,
                            std::optional<double>& out) {
  if (text == "auto") {
    out.reset();
    return 0.0;
  }
  double v = csv::parse_double(text, flag);
  out = v;
  return v;
}

// ---------------------------------------------------------------- simulate

struct SimulateOpts {
  std::string config;  // optional JSON file
  bool seed_given = false;
};

void run_simulate(const GlobalOpts& g, const SimulateOpts& o) {
  Run run("simulate", g);
  synth::SynthConfig cfg;
  if (!o.config.empty()) {
    run.input(o.config);
    cfg = synth::SynthConfig::from_json_file(o.config);
  }
  // --seed on the command line overrides a seed from the config file.
  if (o.seed_given || o.config.empty()) cfg.seed = g.seed;
  cfg.validate();
  run.setting("n_plots", cfg.n_plots);
  run.setting("weeks_per_plot", cfg.weeks_per_plot);
  run.setting("generator_seed", std::to_string(cfg.seed));
  run.setting("noise_sd", cfg.noise_sd);
  run.setting("beta0", cfg.beta0);
  run.setting("planted", static_cast<int>(cfg.planted.size()));

  synth::SynthResult result = synth::generate_dataset(cfg);

  const fs::path plots_path = run.out_path("plots.csv");
  ingest::write_plot_table(plots_path, result.plots);
  run.wrote(plots_path);

  const fs::path series_path = run.out_path("series.csv");
  ingest::write_series(series_path, result.series);
  run.wrote(series_path);

  const fs::path truth_path = run.out_path("truth.json");
  synth::write_truth_json(truth_path, result.truth);
  run.wrote(truth_path);

  run.finish();
}

// -------------------------------------------------------------- interpolate

struct InterpolateOpts {
  std::string plots;
  std::string series;
};

void run_interpolate(const GlobalOpts& g, const InterpolateOpts& o) {
  Run run("interpolate", g);
  run.input(o.plots);
  run.input(o.series);

  std::vector<ingest::PlotRecord> plots = ingest::parse_plot_table(o.plots);
  std::set<std::int64_t> known;
  for (const ingest::PlotRecord& p : plots) known.insert(p.id);

  std::vector<ingest::RawSeries> raw = ingest::parse_series_all(o.series);
  std::string unknown;
  for (const ingest::RawSeries& s : raw)
    if (!known.count(s.plot_id)) unknown += " " + std::to_string(s.plot_id);
  if (!unknown.empty())
    throw ValidationError(o.series + ": series for plots absent from " + o.plots + ":" + unknown);

  std::vector<timeseries::WeeklySeries> weekly;
  weekly.reserve(raw.size());
  for (const ingest::RawSeries& s : raw) {
    timeseries::SplineModel spline = timeseries::fit_natural_cubic_spline(s);
    const auto [first, last] = timeseries::coverable_weeks(spline);
    const std::int64_t n = last - first + 1;
    if (n < static_cast<std::int64_t>(timeseries::kMinPersistedWeeks)) {
      std::cerr << "skipping plot " << s.plot_id << " " << ingest::variable_name(s.variable)
                << ": covers " << (n < 0 ? 0 : n) << " weeks, need "
                << timeseries::kMinPersistedWeeks << "\n";
      continue;
    }
    weekly.push_back(timeseries::resample_weekly(spline, first, static_cast<int>(n)));
  }

  const fs::path weekly_path = run.out_path("weekly.csv");
  timeseries::write_weekly(weekly_path, weekly);
  run.wrote(weekly_path);
  run.finish();
}

// ---------------------------------------------------------------- featurize

struct FeaturizeOpts {
  std::string plots;
  std::string weekly;
};

void run_featurize(const GlobalOpts& g, const FeaturizeOpts& o) {
  Run run("featurize", g);
  run.input(o.plots);
  run.input(o.weekly);

  std::vector<ingest::PlotRecord> plots = ingest::parse_plot_table(o.plots);
  features::WeeklyStore store;
  for (timeseries::WeeklySeries& s : timeseries::read_weekly(o.weekly)) store.add(std::move(s));

  features::BuildResult built = features::build_dataset(plots, store, g.threads);
  std::cerr << "assembled " << built.dataset.X.rows << " of " << plots.size() << " plots ("
            << built.skipped.size() << " skipped)\n";

  const fs::path dataset_path = run.out_path("dataset.csv");
  features::write_dataset_csv(dataset_path, built.dataset);
  run.wrote(dataset_path);

  const fs::path skips_path = run.out_path("skips.csv");
  features::write_skips_csv(skips_path, built.skipped);
  run.wrote(skips_path);
  run.finish();
}

// ---------------------------------------------------------------------- fit

struct FitOpts {
  std::string dataset;
  std::string model;
  double train_ratio = 0.8;
  // elastic net
  double alpha = 0.02;
  std::string lambda = "auto";
  int folds = 3;
  std::string rule = "min";
  // boosting
  double gamma = 0.1;
  double l2 = 0.6;
  int max_depth = 5;
  double eta = 0.1;
  std::string rounds = "auto";
  // additive model
  std::string smoothing = "auto";
  int rank = gam::kDefaultRank;
};

std::vector<int> default_rounds_grid() {
  std::vector<int> grid;
  for (int r = 50; r <= 500; r += 50) grid.push_back(r);
  return grid;
}

elasticnet::EnetModel fit_enet_with_cv(Run& run, const Matrix& Xtr,
                                       const std::vector<double>& ytr,
                                       const std::vector<std::string>& columns, const FitOpts& o,
                                       const std::string& curve_name = "cv_curve.csv") {
  run.setting("alpha", o.alpha);
  run.setting("lambda", o.lambda);
  elasticnet::EnetConfig cfg;
  cfg.alpha = o.alpha;
  std::optional<double> fixed;
  parse_auto_or_double(o.lambda, "--lambda", fixed);
  if (fixed) {
    cfg.lambda = *fixed;
  } else {
    run.setting("folds", o.folds);
    run.setting("rule", o.rule);
    const eval::SelectRule rule = eval::select_rule_from_name(o.rule);
    std::vector<double> grid = elasticnet::lambda_path(Xtr, ytr, o.alpha);
    // The curve only has to rank lambdas, and the near-OLS tail of the path
    // converges slowly on strongly correlated lag columns, so the CV fits run
    // at a looser tolerance than the reported final fit.
    elasticnet::EnetConfig cv_base = cfg;
    cv_base.tol = 1e-6;
    cv_base.max_sweeps = 50000;
    eval::CvCurve curve =
        eval::cv_curve_enet(Xtr, ytr, o.alpha, grid, o.folds, run.seed(), cv_base, run.threads());
    cfg.lambda = eval::select_lambda(curve, rule);
    const fs::path curve_path = run.out_path(curve_name);
    eval::write_cv_curve_csv(curve_path, curve);
    run.wrote(curve_path);
    std::cerr << "selected lambda " << csv::fmt_double(cfg.lambda) << "\n";
  }
  run.setting("lambda_fitted", cfg.lambda);
  return elasticnet::fit(Xtr, ytr, cfg, columns);
}

gbt::TreeEnsemble fit_gbt_with_cv(Run& run, const Matrix& Xtr, const std::vector<double>& ytr,
                                  const std::vector<std::string>& columns, const FitOpts& o,
                                  const std::string& curve_name = "cv_curve.csv") {
  run.setting("gamma", o.gamma);
  run.setting("l2", o.l2);
  run.setting("max_depth", o.max_depth);
  run.setting("eta", o.eta);
  run.setting("rounds", o.rounds);
  gbt::GbtConfig cfg;
  cfg.gamma = o.gamma;
  cfg.lambda = o.l2;
  cfg.max_depth = o.max_depth;
  cfg.learning_rate = o.eta;
  if (o.rounds == "auto") {
    run.setting("folds", o.folds);
    const std::vector<int> grid = default_rounds_grid();
    eval::CvCurve curve =
        eval::cv_curve_gbt_rounds(Xtr, ytr, cfg, grid, o.folds, run.seed(), run.threads());
    // On a rounds sweep the "larger on ties" rule of one_se/min still applies
    // to the grid value, i.e. ties resolve to more rounds.
    cfg.n_rounds = static_cast<int>(eval::select_lambda(curve, eval::SelectRule::min));
    const fs::path curve_path = run.out_path(curve_name);
    eval::write_cv_curve_csv(curve_path, curve);
    run.wrote(curve_path);
    std::cerr << "selected rounds " << cfg.n_rounds << "\n";
  } else {
    const std::int64_t r = csv::parse_int(o.rounds, "--rounds");
    if (r < 1) throw ValidationError("--rounds must be positive");
    cfg.n_rounds = static_cast<int>(r);
  }
  run.setting("rounds_fitted", cfg.n_rounds);
  return gbt::fit_ensemble(Xtr, ytr, cfg, columns);
}

gam::GamModel fit_gam_cmd(Run& run, Matrix Xtr, std::vector<double> ytr,
                          const std::vector<std::string>& columns, const FitOpts& o) {
  run.setting("smoothing", o.smoothing);
  run.setting("rank", o.rank);
  gam::GamFitOptions opts;
  opts.rank = o.rank;
  parse_auto_or_double(o.smoothing, "--smoothing", opts.lambda_s);
  features::Dataset train;
  train.columns = columns;
  train.X = std::move(Xtr);
  train.y = std::move(ytr);
  gam::GamModel m = gam::fit_gam(train, opts);
  std::cerr << "smoothing " << csv::fmt_double(m.lambda_s) << ", edf "
            << csv::fmt_double(m.edf_total) << "\n";
  return m;
}

void run_fit(const GlobalOpts& g, const FitOpts& o) {
  Run run("fit", g);
  run.input(o.dataset);
  run.setting("model", o.model);
  run.setting("train_ratio", o.train_ratio);

  features::Dataset data = features::read_dataset_csv(o.dataset);
  const int n = static_cast<int>(data.X.rows);
  eval::SplitIndices split = eval::train_test_split(n, o.train_ratio, g.seed);
  Matrix Xtr = eval::take_rows(data.X, split.train);
  Matrix Xte = eval::take_rows(data.X, split.test);
  std::vector<double> ytr = eval::take(data.y, split.train);
  std::vector<double> yte = eval::take(data.y, split.test);

  std::vector<double> fit_tr, fit_te;
  const fs::path model_path = run.out_path("model.json");
  if (o.model == "enet") {
    elasticnet::EnetModel m = fit_enet_with_cv(run, Xtr, ytr, data.columns, o);
    elasticnet::write_model_json(model_path, m);
    fit_tr = m.predict(Xtr);
    fit_te = m.predict(Xte);
  } else if (o.model == "gbt") {
    gbt::TreeEnsemble m = fit_gbt_with_cv(run, Xtr, ytr, data.columns, o);
    gbt::write_model_json(model_path, m);
    fit_tr = m.predict(Xtr);
    fit_te = m.predict(Xte);
  } else if (o.model == "gam") {
    gam::GamModel m = fit_gam_cmd(run, Xtr, ytr, data.columns, o);
    gam::write_model_json(model_path, m);
    fit_tr = gam::predict_gam(m, Xtr);
    fit_te = gam::predict_gam(m, Xte);
  } else {
    throw ValidationError("unknown model '" + o.model + "' (expected enet, gbt or gam)");
  }
  run.wrote(model_path);

  const fs::path split_path = run.out_path("split.json");
  eval::write_split_json(split_path, split, g.seed, o.train_ratio);
  run.wrote(split_path);

  const eval::MseRow row{o.model, eval::mse(ytr, fit_tr), eval::mse(yte, fit_te)};
  const fs::path table_path = run.out_path("mse_table.csv");
  eval::write_mse_table_csv(table_path, {&row, 1});
  run.wrote(table_path);
  std::cerr << o.model << " train mse " << csv::fmt_double(row.train) << ", validation mse "
            << csv::fmt_double(row.validation) << "\n";
  run.finish();
}

// ----------------------------------------------------------------------- cv

void run_cv(const GlobalOpts& g, const FitOpts& o) {
  Run run("cv", g);
  run.input(o.dataset);
  run.setting("model", o.model);
  run.setting("folds", o.folds);
  run.setting("rule", o.rule);

  features::Dataset data = features::read_dataset_csv(o.dataset);
  const eval::SelectRule rule = eval::select_rule_from_name(o.rule);

  eval::CvCurve curve;
  std::string swept;
  if (o.model == "enet") {
    run.setting("alpha", o.alpha);
    elasticnet::EnetConfig base;
    base.alpha = o.alpha;
    base.tol = 1e-6;  // ranking lambdas, not reporting coefficients
    base.max_sweeps = 50000;
    std::vector<double> grid = elasticnet::lambda_path(data.X, data.y, o.alpha);
    curve = eval::cv_curve_enet(data.X, data.y, o.alpha, grid, o.folds, g.seed, base, g.threads);
    swept = "lambda";
  } else if (o.model == "gbt") {
    run.setting("gamma", o.gamma);
    run.setting("l2", o.l2);
    run.setting("max_depth", o.max_depth);
    run.setting("eta", o.eta);
    gbt::GbtConfig cfg;
    cfg.gamma = o.gamma;
    cfg.lambda = o.l2;
    cfg.max_depth = o.max_depth;
    cfg.learning_rate = o.eta;
    curve = eval::cv_curve_gbt_rounds(data.X, data.y, cfg, default_rounds_grid(), o.folds,
                                      g.seed, g.threads);
    swept = "rounds";
  } else {
    throw ValidationError("cv supports enet or gbt (gam selects smoothing internally by GCV)");
  }

  const double selected = eval::select_lambda(curve, rule);
  const fs::path curve_path = run.out_path("cv_curve.csv");
  eval::write_cv_curve_csv(curve_path, curve);
  run.wrote(curve_path);

  ordered_json j;
  j["model"] = o.model;
  j["swept"] = swept;
  j["k"] = curve.k;
  j["seed"] = curve.seed;
  j["rule"] = o.rule;
  j["selected"] = selected;
  const fs::path summary_path = run.out_path("cv_summary.json");
  csv::write_file_atomic(summary_path, j.dump(2) + "\n");
  run.wrote(summary_path);
  std::cerr << "selected " << swept << " " << csv::fmt_double(selected) << "\n";
  run.finish();
}

// ------------------------------------------------------------------- report

struct ReportOpts {
  std::string model;
  bool svg = false;
  double tol = causal::kActiveTol;
};

void run_report(const GlobalOpts& g, const ReportOpts& o) {
  Run run("report", g);
  run.input(o.model);
  run.setting("tol", o.tol);
  run.setting("svg", o.svg ? 1 : 0);

  {
    std::ifstream in(o.model);
    if (!in) throw ValidationError("cannot open model " + o.model);
    ordered_json j;
    try {
      j = ordered_json::parse(in);
    } catch (const std::exception& e) {
      throw ValidationError(o.model + ": " + e.what());
    }
    const std::string kind = j.value("model", "");
    if (kind != "enet")
      throw ValidationError("lag report requires an elastic-net model, got '" + kind + "'");
  }

  elasticnet::EnetModel m = elasticnet::read_model_json(o.model);
  causal::LagReport report = causal::lag_report(m, o.tol);

  const fs::path json_path = run.out_path("lag_report.json");
  causal::write_report_json(json_path, report);
  run.wrote(json_path);

  const fs::path csv_path = run.out_path("lag_report.csv");
  causal::write_report_csv(csv_path, report);
  run.wrote(csv_path);

  if (o.svg) {
    causal::write_report_svgs(run.out_dir(), report);
    for (const causal::LagProfile& prof : report.profiles) {
      std::string stem = std::string(ingest::variable_name(prof.variable));
      for (char& c : stem) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      run.wrote(run.out_path("lag_" + stem + "_" +
                             std::string(features::order_name(prof.order)) + ".svg"));
    }
  }
  run.finish();
}

// --------------------------------------------------------------------- eval

void run_eval(const GlobalOpts& g, const FitOpts& o) {
  Run run("eval", g);
  run.input(o.dataset);
  run.setting("train_ratio", o.train_ratio);

  features::Dataset data = features::read_dataset_csv(o.dataset);
  const int n = static_cast<int>(data.X.rows);
  eval::SplitIndices split = eval::train_test_split(n, o.train_ratio, g.seed);
  Matrix Xtr = eval::take_rows(data.X, split.train);
  Matrix Xte = eval::take_rows(data.X, split.test);
  std::vector<double> ytr = eval::take(data.y, split.train);
  std::vector<double> yte = eval::take(data.y, split.test);

  std::vector<eval::MseRow> rows;

  {
    elasticnet::EnetModel m = fit_enet_with_cv(run, Xtr, ytr, data.columns, o, "cv_curve_enet.csv");
    const fs::path p = run.out_path("model_enet.json");
    elasticnet::write_model_json(p, m);
    run.wrote(p);
    rows.push_back({"enet", eval::mse(ytr, m.predict(Xtr)), eval::mse(yte, m.predict(Xte))});
  }
  {
    gbt::TreeEnsemble m = fit_gbt_with_cv(run, Xtr, ytr, data.columns, o, "cv_curve_gbt.csv");
    const fs::path p = run.out_path("model_gbt.json");
    gbt::write_model_json(p, m);
    run.wrote(p);
    rows.push_back({"gbt", eval::mse(ytr, m.predict(Xtr)), eval::mse(yte, m.predict(Xte))});
  }
  {
    gam::GamModel m = fit_gam_cmd(run, Xtr, ytr, data.columns, o);
    const fs::path p = run.out_path("model_gam.json");
    gam::write_model_json(p, m);
    run.wrote(p);
    rows.push_back({"gam", eval::mse(ytr, gam::predict_gam(m, Xtr)),
                    eval::mse(yte, gam::predict_gam(m, Xte))});
  }

  const fs::path split_path = run.out_path("split.json");
  eval::write_split_json(split_path, split, g.seed, o.train_ratio);
  run.wrote(split_path);

  const fs::path table_path = run.out_path("mse_table.csv");
  eval::write_mse_table_csv(table_path, rows);
  run.wrote(table_path);
  for (const eval::MseRow& r : rows)
    std::cerr << r.model << " train mse " << csv::fmt_double(r.train) << ", validation mse "
              << csv::fmt_double(r.validation) << "\n";
  run.finish();
}

void add_enet_flags(CLI::App* sub, FitOpts& o) {
  sub->add_option("--alpha", o.alpha, "elastic-net mixing parameter")->capture_default_str();
  sub->add_option("--lambda", o.lambda, "penalty strength, or 'auto' for k-fold CV")
      ->capture_default_str();
}

void add_gbt_flags(CLI::App* sub, FitOpts& o) {
  sub->add_option("--gamma", o.gamma, "minimum gain to split")->capture_default_str();
  sub->add_option("--l2", o.l2, "leaf-weight L2 penalty")->capture_default_str();
  sub->add_option("--max-depth", o.max_depth, "tree depth limit")->capture_default_str();
  sub->add_option("--eta", o.eta, "learning rate")->capture_default_str();
  sub->add_option("--rounds", o.rounds, "boosting rounds, or 'auto' for k-fold CV")
      ->capture_default_str();
}

void add_gam_flags(CLI::App* sub, FitOpts& o) {
  sub->add_option("--smoothing", o.smoothing, "smoothing parameter, or 'auto' for GCV")
      ->capture_default_str();
  sub->add_option("--rank", o.rank, "basis functions per smooth")->capture_default_str();
}

void add_cv_flags(CLI::App* sub, FitOpts& o) {
  sub->add_option("--folds", o.folds, "cross-validation folds")->capture_default_str();
  sub->add_option("--rule", o.rule, "selection rule: min or one_se")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Crop-yield forecasting from remote-sensing time series"};
  app.fallthrough();
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--seed", g.seed, "seed for every random choice")->capture_default_str();
  app.add_option("--threads", g.threads, "worker threads (never affects results)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--out", g.out, "output directory")->capture_default_str();
  app.set_version_flag("--version", RSYIELD_VERSION);

  SimulateOpts sim;
  CLI::App* c_sim = app.add_subcommand("simulate", "generate a synthetic survey with ground truth");
  c_sim->add_option("--config", sim.config, "generator config JSON");

  InterpolateOpts interp;
  CLI::App* c_interp = app.add_subcommand("interpolate", "resample raw series to a weekly grid");
  c_interp->add_option("--plots", interp.plots, "plot table CSV")->required();
  c_interp->add_option("--series", interp.series, "raw series CSV")->required();

  FeaturizeOpts feat;
  CLI::App* c_feat = app.add_subcommand("featurize", "assemble the lagged design matrix");
  c_feat->add_option("--plots", feat.plots, "plot table CSV")->required();
  c_feat->add_option("--weekly", feat.weekly, "weekly series CSV")->required();

  FitOpts fit;
  CLI::App* c_fit = app.add_subcommand("fit", "train one model on an 80/20 split");
  c_fit->add_option("--dataset", fit.dataset, "dataset CSV")->required();
  c_fit->add_option("--model", fit.model, "enet, gbt or gam")->required();
  c_fit->add_option("--train-ratio", fit.train_ratio, "training fraction")
      ->capture_default_str();
  add_enet_flags(c_fit, fit);
  add_gbt_flags(c_fit, fit);
  add_gam_flags(c_fit, fit);
  add_cv_flags(c_fit, fit);

  FitOpts cv;
  CLI::App* c_cv = app.add_subcommand("cv", "cross-validation curve over a hyperparameter grid");
  c_cv->add_option("--dataset", cv.dataset, "dataset CSV")->required();
  c_cv->add_option("--model", cv.model, "enet or gbt")->required();
  add_enet_flags(c_cv, cv);
  add_gbt_flags(c_cv, cv);
  add_cv_flags(c_cv, cv);

  ReportOpts rep;
  CLI::App* c_rep = app.add_subcommand("report", "lag activity report from an elastic-net model");
  c_rep->add_option("--model-file", rep.model, "fitted model JSON")->required();
  c_rep->add_flag("--svg", rep.svg, "also draw per-profile bar charts");
  c_rep->add_option("--tol", rep.tol, "activity threshold on standardized coefficients")
      ->capture_default_str();

  FitOpts ev;
  CLI::App* c_ev = app.add_subcommand("eval", "train all three models and tabulate MSEs");
  c_ev->add_option("--dataset", ev.dataset, "dataset CSV")->required();
  c_ev->add_option("--train-ratio", ev.train_ratio, "training fraction")->capture_default_str();
  add_enet_flags(c_ev, ev);
  add_gbt_flags(c_ev, ev);
  add_gam_flags(c_ev, ev);
  add_cv_flags(c_ev, ev);

  c_sim->callback([&] {
    sim.seed_given = app.count("--seed") > 0;
    run_simulate(g, sim);
  });
  c_interp->callback([&] { run_interpolate(g, interp); });
  c_feat->callback([&] { run_featurize(g, feat); });
  c_fit->callback([&] { run_fit(g, fit); });
  c_cv->callback([&] { run_cv(g, cv); });
  c_rep->callback([&] { run_report(g, rep); });
  c_ev->callback([&] { run_eval(g, ev); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
