#include "rsyield/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

#include <nlohmann/json.hpp>

#include "rsyield/calendar.hpp"
#include "rsyield/csv.hpp"
#include "rsyield/errors.hpp"
#include "rsyield/timeseries.hpp"

namespace rsyield::synth {

namespace {

using nlohmann::ordered_json;

constexpr double kSeasonPeriodDays = 364.0;  // 52 weeks
constexpr double kNdviClamp = 0.98;

// Harvest happens at least this many weeks after the first simulated week so
// every plot has the 14 weeks of history the feature window needs, plus slack.
constexpr int kMinHarvestOffset = 17;

std::string variable_key(Variable v) { return std::string(ingest::variable_name(v)); }

}  // namespace

SynthConfig::SynthConfig() {
  series[static_cast<int>(Variable::NDVI)] = {0.45, 0.15, 0.55, 0.07};
  series[static_cast<int>(Variable::PREC)] = {90.0, 35.0, 0.50, 9.0};
  series[static_cast<int>(Variable::TEMP)] = {295.0, 6.0, 0.85, 1.2};
}

int cadence_days(Variable v) {
  switch (v) {
    case Variable::NDVI:
      return 16;
    case Variable::PREC:
      return 5;
    case Variable::TEMP:
      return 1;
  }
  throw ValidationError("unknown variable");
}

void SynthConfig::validate() const {
  if (n_plots < 1) throw ValidationError("synth: n_plots must be positive");
  if (weeks_per_plot < kMinHarvestOffset + 1)
    throw ValidationError("synth: weeks_per_plot must be at least " +
                          std::to_string(kMinHarvestOffset + 1));
  if (harvest_spread < 1 || harvest_spread > weeks_per_plot - kMinHarvestOffset)
    throw ValidationError("synth: harvest_spread must lie in [1, weeks_per_plot - " +
                          std::to_string(kMinHarvestOffset) + "]");
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd))
    throw ValidationError("synth: noise_sd must be finite and non-negative");
  if (!std::isfinite(beta0)) throw ValidationError("synth: beta0 must be finite");
  for (int i = 0; i < 3; ++i) {
    const SeriesParams& p = series[i];
    const std::string who = "synth: series " + variable_key(static_cast<Variable>(i));
    if (!std::isfinite(p.baseline) || !std::isfinite(p.amplitude))
      throw ValidationError(who + ": baseline and amplitude must be finite");
    if (!(std::abs(p.ar_rho) < 1.0)) throw ValidationError(who + ": |ar_rho| must be below 1");
    if (!(p.ar_sd >= 0.0) || !std::isfinite(p.ar_sd))
      throw ValidationError(who + ": ar_sd must be finite and non-negative");
  }
  for (const PlantedEffect& e : planted) {
    if (e.lag < 1 || e.lag > features::kNumLags)
      throw ValidationError("synth: planted lag must lie in [1, 12]");
    if (e.coefficient == 0.0 || !std::isfinite(e.coefficient))
      throw ValidationError("synth: planted coefficient must be finite and non-zero");
  }
}

SynthConfig SynthConfig::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const std::exception& e) {
    throw ValidationError("config " + path.string() + ": " + e.what());
  }

  SynthConfig cfg;
  try {
    cfg.n_plots = j.value("n_plots", cfg.n_plots);
    cfg.weeks_per_plot = j.value("weeks_per_plot", cfg.weeks_per_plot);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.noise_sd = j.value("noise_sd", cfg.noise_sd);
    cfg.beta0 = j.value("beta0", cfg.beta0);
    cfg.start_week = j.value("start_week", cfg.start_week);
    cfg.harvest_spread = j.value("harvest_spread", cfg.harvest_spread);
    if (j.contains("planted")) {
      for (const auto& pj : j.at("planted")) {
        PlantedEffect e;
        e.variable = ingest::variable_from_name(pj.at("variable").get<std::string>());
        e.order = features::order_from_name(pj.at("order").get<std::string>());
        e.lag = pj.at("lag").get<int>();
        e.coefficient = pj.at("coefficient").get<double>();
        cfg.planted.push_back(e);
      }
    }
    if (j.contains("series")) {
      for (int i = 0; i < 3; ++i) {
        const std::string key = variable_key(static_cast<Variable>(i));
        if (!j.at("series").contains(key)) continue;
        const auto& sj = j.at("series").at(key);
        SeriesParams& p = cfg.series[i];
        p.baseline = sj.value("baseline", p.baseline);
        p.amplitude = sj.value("amplitude", p.amplitude);
        p.ar_rho = sj.value("ar_rho", p.ar_rho);
        p.ar_sd = sj.value("ar_sd", p.ar_sd);
      }
    }
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception& e) {
    throw ValidationError("config " + path.string() + ": " + e.what());
  }
  cfg.validate();
  return cfg;
}

std::vector<double> ar1_noise(rng::DetRng& r, std::size_t n, double rho, double sd) {
  std::vector<double> out(n);
  if (n == 0) return out;
  // Stationary start so early samples are statistically like late ones.
  const double stat_sd = sd / std::sqrt(1.0 - rho * rho);
  out[0] = stat_sd * r.next_normal();
  for (std::size_t i = 1; i < n; ++i) out[i] = rho * out[i - 1] + sd * r.next_normal();
  return out;
}

ingest::RawSeries generate_series(const SynthConfig& cfg, std::int64_t plot_id, Variable v) {
  const SeriesParams& p = cfg.series[static_cast<int>(v)];
  const int step = cadence_days(v);
  // Overhang by two samples on each side so every Monday in the weekly window
  // falls strictly inside the interpolation range.
  const std::int64_t day_lo = calendar::monday_of_week(cfg.start_week) - 2 * step;
  const std::int64_t day_hi =
      calendar::monday_of_week(cfg.start_week + cfg.weeks_per_plot - 1) + 2 * step;
  const std::size_t n = static_cast<std::size_t>((day_hi - day_lo) / step) + 1;

  rng::DetRng r(rng::derive_seed(cfg.seed, rng::fnv1a("series"),
                                 static_cast<std::uint64_t>(plot_id),
                                 static_cast<std::uint64_t>(v)));
  const std::vector<double> noise = ar1_noise(r, n, p.ar_rho, p.ar_sd);

  ingest::RawSeries s;
  s.plot_id = plot_id;
  s.variable = v;
  s.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t t = day_lo + static_cast<std::int64_t>(i) * step;
    double value = p.baseline +
                   p.amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) /
                                          kSeasonPeriodDays) +
                   noise[i];
    if (v == Variable::NDVI) value = std::clamp(value, -kNdviClamp, kNdviClamp);
    s.points.push_back({static_cast<double>(t), value});
  }
  s.validate();
  return s;
}

namespace {

ingest::PlotRecord generate_plot(const SynthConfig& cfg, std::int64_t plot_id) {
  rng::DetRng r(rng::derive_seed(cfg.seed, rng::fnv1a("plot"),
                                 static_cast<std::uint64_t>(plot_id)));
  ingest::PlotRecord rec;
  rec.id = plot_id;
  rec.harvest_week = cfg.start_week + kMinHarvestOffset +
                     static_cast<std::int64_t>(r.next_below(static_cast<std::uint64_t>(
                         cfg.harvest_spread)));
  rec.year = calendar::civil_from_days(calendar::monday_of_week(rec.harvest_week)).year;
  rec.ccdd = 1 + static_cast<std::int64_t>(r.next_below(24));
  rec.ccpp = 1 + static_cast<std::int64_t>(r.next_below(20));
  rec.ccdi = 1 + static_cast<std::int64_t>(r.next_below(15));
  rec.congl = 1000 + static_cast<std::int64_t>(r.next_below(9000));
  rec.lat = r.next_uniform(-18.0, -3.0);
  rec.lon = r.next_uniform(-81.0, -69.0);
  rec.yield_t_ha = 0.0;  // filled once covariates exist

  ingest::ControlVector& c = rec.controls;
  c.p204_tipo = 1 + static_cast<std::int64_t>(r.next_below(2));
  // Sowing a few months before harvest.
  c.p206_ini = rec.harvest_week - 16 + static_cast<std::int64_t>(r.next_below(5));
  c.p208 = 1 + static_cast<std::int64_t>(r.next_below(3));
  c.p211_1 = static_cast<std::int64_t>(r.next_below(2));
  c.p211_2 = static_cast<std::int64_t>(r.next_below(2));
  c.p211_4 = static_cast<std::int64_t>(r.next_below(2));
  c.p212 = 1 + static_cast<std::int64_t>(r.next_below(7));
  c.p213 = 1 + static_cast<std::int64_t>(r.next_below(8));
  c.p214 = 1 + static_cast<std::int64_t>(r.next_below(2));
  rec.validate();
  return rec;
}

}  // namespace

SynthResult generate_dataset(const SynthConfig& cfg) {
  cfg.validate();

  SynthResult out;
  out.plots.reserve(static_cast<std::size_t>(cfg.n_plots));
  out.series.reserve(static_cast<std::size_t>(cfg.n_plots) * 3);
  features::WeeklyStore store;

  for (int i = 0; i < cfg.n_plots; ++i) {
    const std::int64_t plot_id = i + 1;
    out.plots.push_back(generate_plot(cfg, plot_id));
    for (int vi = 0; vi < 3; ++vi) {
      const Variable v = static_cast<Variable>(vi);
      ingest::RawSeries raw = generate_series(cfg, plot_id, v);
      timeseries::SplineModel spline = timeseries::fit_natural_cubic_spline(raw);
      store.add(timeseries::resample_weekly(spline, cfg.start_week, cfg.weeks_per_plot));
      out.series.push_back(std::move(raw));
    }
  }

  features::BuildResult built = features::build_dataset(out.plots, store, 1);
  if (!built.skipped.empty()) {
    std::string msg = "synth: generated series failed to cover the feature window for plots:";
    for (const features::SkipRecord& s : built.skipped)
      msg += " " + std::to_string(s.plot_id) + " (" + s.reason + ");";
    throw ValidationError(msg);
  }
  out.dataset = std::move(built.dataset);
  features::Dataset& ds = out.dataset;

  // Standardize the planted columns against this sample so the planted
  // coefficient is the effect size per standard deviation.
  const std::size_t n = ds.X.rows;
  std::vector<double> beta_std(features::kNumCovariates, 0.0);
  struct ColumnEffect {
    std::size_t col;
    double mean, sd, coef;
  };
  std::vector<ColumnEffect> effects;
  for (const PlantedEffect& e : cfg.planted) {
    const std::size_t col = features::column_index(e.variable, e.order, e.lag);
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += ds.X(r, col);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double d = ds.X(r, col) - mean;
      var += d * d;
    }
    const double sd = std::sqrt(var / static_cast<double>(n));
    if (!(sd > 0.0))
      throw ValidationError("synth: planted column " + ds.columns[col] +
                            " has zero variance; raise the series noise");
    effects.push_back({col, mean, sd, e.coefficient});
    beta_std[col] += e.coefficient;
  }

  for (std::size_t r = 0; r < n; ++r) {
    rng::DetRng yr(rng::derive_seed(cfg.seed, rng::fnv1a("yield"),
                                    static_cast<std::uint64_t>(out.plots[r].id)));
    double y = cfg.beta0 + cfg.noise_sd * yr.next_normal();
    for (const ColumnEffect& e : effects) y += e.coef * (ds.X(r, e.col) - e.mean) / e.sd;
    if (y < 0.0)
      throw ValidationError(
          "synth: sampled a negative yield; raise beta0 or lower the effect sizes");
    ds.y[r] = y;
    out.plots[r].yield_t_ha = y;
  }

  out.truth.beta0 = cfg.beta0;
  out.truth.noise_sd = cfg.noise_sd;
  out.truth.planted = cfg.planted;
  out.truth.column_names = ds.columns;
  out.truth.beta_std = std::move(beta_std);
  return out;
}

double recovery_score(const causal::LagReport& report, std::span<const PlantedEffect> planted) {
  if (planted.empty()) return 1.0;
  std::size_t hits = 0;
  for (const PlantedEffect& e : planted) {
    const causal::LagCell& cell = report.profile(e.variable, e.order).lags[e.lag - 1];
    const int want = e.coefficient > 0.0 ? 1 : -1;
    if (cell.active && cell.sign == want) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(planted.size());
}

int false_active_count(const causal::LagReport& report, std::span<const PlantedEffect> planted) {
  int count = 0;
  for (const causal::LagProfile& prof : report.profiles) {
    for (const causal::LagCell& cell : prof.lags) {
      if (!cell.active) continue;
      const bool was_planted =
          std::any_of(planted.begin(), planted.end(), [&](const PlantedEffect& e) {
            return e.variable == prof.variable && e.order == prof.order && e.lag == cell.lag;
          });
      if (!was_planted) ++count;
    }
  }
  return count;
}

void write_truth_json(const std::filesystem::path& path, const SynthTruth& truth) {
  ordered_json j;
  j["beta0"] = truth.beta0;
  j["noise_sd"] = truth.noise_sd;
  j["planted"] = ordered_json::array();
  for (const PlantedEffect& e : truth.planted) {
    ordered_json ej;
    ej["variable"] = variable_key(e.variable);
    ej["order"] = std::string(features::order_name(e.order));
    ej["lag"] = e.lag;
    ej["coefficient"] = e.coefficient;
    j["planted"].push_back(ej);
  }
  j["column_names"] = truth.column_names;
  j["beta_std"] = truth.beta_std;
  csv::write_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace rsyield::synth
