#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "rsyield/ingest.hpp"

// Natural cubic spline interpolation of raw series and resampling onto the
// weekly grid (Monday 00:00 of each ISO week).  Interpolation only: requests
// outside the knot range are coverage errors, never extrapolated.

namespace rsyield::timeseries {

using ingest::RawSeries;
using ingest::Variable;

class SplineModel {
 public:
  // Natural boundary: second derivative zero at both end knots.
  double evaluate(double t) const;  // throws CoverageError outside the knot range

  double t_min() const { return knots_t_.front(); }
  double t_max() const { return knots_t_.back(); }
  std::size_t size() const { return knots_t_.size(); }
  const std::vector<double>& knot_times() const { return knots_t_; }
  const std::vector<double>& knot_values() const { return knots_y_; }
  const std::vector<double>& second_derivatives() const { return m2_; }

  std::int64_t plot_id = 0;
  Variable variable = Variable::NDVI;

 private:
  friend SplineModel fit_natural_cubic_spline(std::span<const double> t,
                                              std::span<const double> y);
  std::vector<double> knots_t_;
  std::vector<double> knots_y_;
  std::vector<double> m2_;  // second derivatives at the knots
};

// Solves the natural-spline second-derivative system.  At least two strictly
// increasing knots; two knots degrade to linear interpolation.  The minimum of
// four observations per series is enforced at ingest, not here, so the solver
// stays usable for small synthetic grids.
std::vector<double> natural_spline_second_derivatives(std::span<const double> t,
                                                      std::span<const double> y);

SplineModel fit_natural_cubic_spline(std::span<const double> t, std::span<const double> y);
SplineModel fit_natural_cubic_spline(const RawSeries& series);

// One plot-variable sampled on consecutive ISO weeks, no gaps.
struct WeeklySeries {
  std::int64_t plot_id = 0;
  Variable variable = Variable::NDVI;
  std::int64_t start_week = 0;
  std::vector<double> values;

  std::int64_t end_week() const { return start_week + static_cast<std::int64_t>(values.size()) - 1; }
  bool covers(std::int64_t first, std::int64_t last) const {
    return !values.empty() && start_week <= first && last <= end_week();
  }
  double at_week(std::int64_t week) const;  // throws CoverageError outside the range
};

// Resampled series persisted by the pipeline must span at least this many
// weeks; shorter windows cannot feed the lagged second differences downstream.
inline constexpr std::size_t kMinPersistedWeeks = 15;

// Evaluates the spline at the Monday of each requested week.  Every requested
// Monday must lie inside the knot range.
WeeklySeries resample_weekly(const SplineModel& model, std::int64_t start_week,
                             std::size_t n_weeks);

// Widest run of consecutive weeks whose Mondays all lie in the knot range.
// first = ceil week, last = floor week; empty range possible for short series.
std::pair<std::int64_t, std::int64_t> coverable_weeks(const SplineModel& model);

extern const std::vector<std::string> kWeeklyHeader;

void write_weekly(const std::filesystem::path& path, std::span<const WeeklySeries> series);
std::vector<WeeklySeries> read_weekly(const std::filesystem::path& path);

}  // namespace rsyield::timeseries
