#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Survey-plot metadata and raw remote-sensing series: parsing, validation and
// the per-pixel radiometric transforms applied upstream of everything else.

namespace rsyield::ingest {

enum class Variable { NDVI = 0, PREC = 1, TEMP = 2 };
inline constexpr int kNumVariables = 3;

std::string_view variable_name(Variable v);
Variable variable_from_name(std::string_view name);  // throws ValidationError

// Integer-coded survey controls.  p206_ini holds a week index (planting-start
// dates are reduced to weeks when the table is parsed); the remaining fields
// carry categorical codes with fixed level sets.
struct ControlVector {
  std::int64_t p204_tipo = 1;  // {1,2}
  std::int64_t p206_ini = 0;   // week index, unrestricted
  std::int64_t p208 = 1;       // {1,2,3}
  std::int64_t p211_1 = 0;     // {0,1}
  std::int64_t p211_2 = 0;     // {0,1}
  std::int64_t p211_4 = 0;     // {0,1}
  std::int64_t p212 = 1;       // {1..7}
  std::int64_t p213 = 1;       // {1..8}
  std::int64_t p214 = 1;       // {1,2}

  static constexpr int kFieldCount = 9;
  static const std::array<std::string_view, kFieldCount>& field_names();

  std::array<double, kFieldCount> as_array() const;
  void validate() const;  // throws ValidationError naming the offending field
};

struct PlotRecord {
  std::int64_t id = 0;
  int year = 0;
  std::int64_t ccdd = 0;   // department code
  std::int64_t ccpp = 0;   // province code
  std::int64_t ccdi = 0;   // district code
  std::int64_t congl = 0;  // sampling conglomerate
  double lat = 0.0;
  double lon = 0.0;
  std::int64_t harvest_week = 0;  // ISO week index
  double yield_t_ha = 0.0;        // response, tonnes per hectare
  ControlVector controls;

  void validate() const;
};

struct SeriesPoint {
  double t_days = 0.0;  // days since epoch
  double value = 0.0;
};

// One plot's observations of one variable at its native cadence.
struct RawSeries {
  std::int64_t plot_id = 0;
  Variable variable = Variable::NDVI;
  std::vector<SeriesPoint> points;  // strictly increasing timestamps, >= 4

  void validate() const;
};

// (NIR - RED) / (NIR + RED).  Requires non-negative reflectances with a
// positive sum; the result always lands in [-1, 1].
double compute_ndvi(double nir, double red);

struct SplitWindowCoeffs {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;
};

// Surface temperature from the two thermal brightness channels:
// a + b*(t31 + t32) + c*(t31 - t32) + d*(t31 - t32)^2.
double compute_lst_split_window(double t31, double t32, const SplitWindowCoeffs& coeffs);

extern const std::vector<std::string> kPlotTableHeader;
extern const std::vector<std::string> kSeriesHeader;

std::vector<PlotRecord> parse_plot_table(const std::filesystem::path& path);
void write_plot_table(const std::filesystem::path& path, std::span<const PlotRecord> plots);

// Rows of `variable` only, grouped by plot in order of first appearance,
// each group sorted by timestamp and validated.
std::vector<RawSeries> parse_series(const std::filesystem::path& path, Variable variable);
// All variables at once, same grouping rules.
std::vector<RawSeries> parse_series_all(const std::filesystem::path& path);
void write_series(const std::filesystem::path& path, std::span<const RawSeries> series);

}  // namespace rsyield::ingest
