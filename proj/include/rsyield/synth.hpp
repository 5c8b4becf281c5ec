#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "rsyield/causal.hpp"
#include "rsyield/features.hpp"
#include "rsyield/ingest.hpp"
#include "rsyield/rng.hpp"

// Synthetic benchmark with known ground truth.  Raw series are seasonal sine
// waves plus AR(1) noise sampled at each variable's native cadence (NDVI every
// 16 days, precipitation every 5, temperature daily).  Yields are a linear
// function of chosen standardized covariates plus Gaussian noise, so a fitted
// lag report can be scored against the planted coefficients.  The generator
// runs the production interpolation and feature-assembly code, never a copy.

namespace rsyield::synth {

using features::Order;
using features::Variable;

struct PlantedEffect {
  Variable variable = Variable::NDVI;
  Order order = Order::velocity;
  int lag = 1;               // 1..12
  double coefficient = 0.0;  // on the standardized feature scale, non-zero
};

struct SeriesParams {
  double baseline = 0.0;
  double amplitude = 0.0;  // seasonal sine, 52-week period
  double ar_rho = 0.5;     // |rho| < 1
  double ar_sd = 1.0;      // innovation standard deviation
};

struct SynthConfig {
  int n_plots = 348;
  int weeks_per_plot = 40;
  std::uint64_t seed = 42;
  double noise_sd = 0.3;  // irreducible yield noise
  double beta0 = 8.0;     // baseline yield, tonnes per hectare
  std::int64_t start_week = 2400;
  int harvest_spread = 8;  // harvest weeks drawn uniformly from this many values
  std::vector<PlantedEffect> planted;
  std::array<SeriesParams, 3> series{};  // indexed by Variable

  SynthConfig();  // fills per-variable series defaults
  void validate() const;

  static SynthConfig from_json_file(const std::filesystem::path& path);
};

// Observation spacing in days for each variable's native grid.
int cadence_days(Variable v);

// AR(1) noise with stationary initialization; exposed for direct testing.
std::vector<double> ar1_noise(rng::DetRng& r, std::size_t n, double rho, double sd);

ingest::RawSeries generate_series(const SynthConfig& cfg, std::int64_t plot_id, Variable v);

struct SynthTruth {
  double beta0 = 0.0;
  double noise_sd = 0.0;
  std::vector<PlantedEffect> planted;
  std::vector<std::string> column_names;
  std::vector<double> beta_std;  // full 81-vector on the standardized scale
};

struct SynthResult {
  std::vector<ingest::PlotRecord> plots;  // yields filled in
  std::vector<ingest::RawSeries> series;  // 3 per plot
  features::Dataset dataset;
  SynthTruth truth;
};

SynthResult generate_dataset(const SynthConfig& cfg);

// Fraction of planted effects whose (variable, order, lag) cell is active
// with the planted sign.  Nothing planted scores a vacuous 1.0.
double recovery_score(const causal::LagReport& report, std::span<const PlantedEffect> planted);
// Active cells that were not planted, across all six profiles.
int false_active_count(const causal::LagReport& report, std::span<const PlantedEffect> planted);

void write_truth_json(const std::filesystem::path& path, const SynthTruth& truth);

}  // namespace rsyield::synth
