#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rsyield/ingest.hpp"
#include "rsyield/matrix.hpp"
#include "rsyield/timeseries.hpp"

// Covariate construction.  Each plot contributes 9 integer survey controls
// followed by 72 dynamic terms: for each variable (NDVI, PREC, TEMP) the
// weekly first difference (velocity) and second difference (acceleration),
// each taken at lags 1..12 before the harvest week, most recent lag first.

namespace rsyield::features {

using ingest::ControlVector;
using ingest::PlotRecord;
using ingest::Variable;
using timeseries::WeeklySeries;

enum class Order { velocity = 0, acceleration = 1 };

std::string_view order_name(Order o);
Order order_from_name(std::string_view name);

inline constexpr int kNumControls = 9;
inline constexpr int kNumLags = 12;
inline constexpr int kNumBlocks = 6;  // 3 variables x 2 difference orders
inline constexpr int kNumDynamic = kNumBlocks * kNumLags;       // 72
inline constexpr int kNumCovariates = kNumControls + kNumDynamic;  // 81

// Block order: VEL_NDVI, ACCEL_NDVI, VEL_PREC, ACCEL_PREC, VEL_TEMP, ACCEL_TEMP.
constexpr int block_index(Variable v, Order o) {
  return 2 * static_cast<int>(v) + static_cast<int>(o);
}
// Position of lag d (1-based) within the 72 dynamic terms.
constexpr int w_index(Variable v, Order o, int lag) {
  return kNumLags * block_index(v, o) + (lag - 1);
}
// Absolute column of the covariate vector.
constexpr int column_index(Variable v, Order o, int lag) {
  return kNumControls + w_index(v, o, lag);
}

// The 81 covariate names, e.g. "p204_tipo", "vel_ndvi_lag8", "accel_temp_lag12".
const std::vector<std::string>& covariate_names();
// Name of the response column.
inline constexpr std::string_view kResponseName = "prod_hect";

struct FeatureVector {
  std::array<double, kNumControls> z{};
  std::array<double, kNumDynamic> w{};

  std::array<double, kNumCovariates> flat() const;
};

// First difference: out[k] = s[k+1] - s[k]; starts one week later.
WeeklySeries velocity(const WeeklySeries& s);
// Second difference, defined literally as velocity(velocity(s)) so the
// identity with the composed form is exact in floating point.
WeeklySeries acceleration(const WeeklySeries& s);

// Values at weeks T-1, T-2, ..., T-12 (most recent first).
std::array<double, kNumLags> lag_window(const WeeklySeries& s, std::int64_t harvest_week);

// Requires all three series to cover weeks T-14..T.
FeatureVector assemble_covariates(const ControlVector& z, const WeeklySeries& ndvi,
                                  const WeeklySeries& prec, const WeeklySeries& temp,
                                  std::int64_t harvest_week);

struct Dataset {
  std::vector<std::string> columns;  // the 81 covariate names
  Matrix X;                          // n x 81
  std::vector<double> y;             // response, tonnes per hectare

  std::size_t n() const { return X.rows; }
};

struct SkipRecord {
  std::int64_t plot_id = 0;
  std::string reason;
};

class WeeklyStore {
 public:
  void add(WeeklySeries s);
  const WeeklySeries* find(std::int64_t plot_id, Variable v) const;
  std::size_t size() const { return store_.size(); }

 private:
  std::map<std::pair<std::int64_t, int>, WeeklySeries> store_;
};

struct BuildResult {
  Dataset dataset;
  std::vector<SkipRecord> skipped;
};

// One row per plot, in input order.  Plots with missing series or inadequate
// coverage are skipped and reported, never imputed.
BuildResult build_dataset(std::span<const PlotRecord> plots, const WeeklyStore& weekly,
                          int n_threads = 1);

void write_dataset_csv(const std::filesystem::path& path, const Dataset& d);
Dataset read_dataset_csv(const std::filesystem::path& path);
void write_skips_csv(const std::filesystem::path& path, std::span<const SkipRecord> skips);

}  // namespace rsyield::features
