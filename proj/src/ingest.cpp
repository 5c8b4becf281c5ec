#include "rsyield/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "rsyield/calendar.hpp"
#include "rsyield/csv.hpp"
#include "rsyield/errors.hpp"

namespace rsyield::ingest {

namespace {

std::string row_context(const std::filesystem::path& path, std::size_t row1based,
                        std::string_view field) {
  std::ostringstream os;
  os << path.string() << " row " << row1based << " field '" << field << "'";
  return os.str();
}

void require_level(std::int64_t value, std::int64_t lo, std::int64_t hi, std::string_view field) {
  if (value < lo || value > hi) {
    std::ostringstream os;
    os << "control '" << field << "' out of range: " << value << " (expected " << lo << ".." << hi
       << ")";
    throw ValidationError(os.str());
  }
}

}  // namespace

std::string_view variable_name(Variable v) {
  switch (v) {
    case Variable::NDVI: return "NDVI";
    case Variable::PREC: return "PREC";
    case Variable::TEMP: return "TEMP";
  }
  return "?";
}

Variable variable_from_name(std::string_view name) {
  if (name == "NDVI") return Variable::NDVI;
  if (name == "PREC") return Variable::PREC;
  if (name == "TEMP") return Variable::TEMP;
  throw ValidationError("unknown variable name: '" + std::string(name) + "'");
}

const std::array<std::string_view, ControlVector::kFieldCount>& ControlVector::field_names() {
  static const std::array<std::string_view, kFieldCount> names = {
      "p204_tipo", "p206_ini", "p208", "p211_1", "p211_2", "p211_4", "p212", "p213", "p214"};
  return names;
}

std::array<double, ControlVector::kFieldCount> ControlVector::as_array() const {
  return {static_cast<double>(p204_tipo), static_cast<double>(p206_ini),
          static_cast<double>(p208),      static_cast<double>(p211_1),
          static_cast<double>(p211_2),    static_cast<double>(p211_4),
          static_cast<double>(p212),      static_cast<double>(p213),
          static_cast<double>(p214)};
}

void ControlVector::validate() const {
  require_level(p204_tipo, 1, 2, "p204_tipo");
  // p206_ini is a week index; any integer is acceptable.
  require_level(p208, 1, 3, "p208");
  require_level(p211_1, 0, 1, "p211_1");
  require_level(p211_2, 0, 1, "p211_2");
  require_level(p211_4, 0, 1, "p211_4");
  require_level(p212, 1, 7, "p212");
  require_level(p213, 1, 8, "p213");
  require_level(p214, 1, 2, "p214");
}

void PlotRecord::validate() const {
  if (!(yield_t_ha >= 0.0) || !std::isfinite(yield_t_ha)) {
    std::ostringstream os;
    os << "plot " << id << ": yield_t_ha must be finite and non-negative, got " << yield_t_ha;
    throw ValidationError(os.str());
  }
  if (!std::isfinite(lat) || !std::isfinite(lon) || lat < -90.0 || lat > 90.0 ||
      lon < -180.0 || lon > 180.0) {
    std::ostringstream os;
    os << "plot " << id << ": coordinates out of range (lat " << lat << ", lon " << lon << ")";
    throw ValidationError(os.str());
  }
  controls.validate();
}

void RawSeries::validate() const {
  if (points.size() < 4) {
    std::ostringstream os;
    os << "plot " << plot_id << " " << variable_name(variable) << ": series has "
       << points.size() << " points, need at least 4";
    throw ValidationError(os.str());
  }
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (!(points[i].t_days > points[i - 1].t_days)) {
      std::ostringstream os;
      os << "plot " << plot_id << " " << variable_name(variable)
         << ": timestamps not strictly increasing at index " << i;
      throw ValidationError(os.str());
    }
  }
  if (variable == Variable::NDVI) {
    for (const SeriesPoint& p : points) {
      if (!(p.value >= -1.0 && p.value <= 1.0)) {
        std::ostringstream os;
        os << "plot " << plot_id << ": NDVI value " << p.value << " outside [-1, 1]";
        throw ValidationError(os.str());
      }
    }
  }
  for (const SeriesPoint& p : points) {
    if (!std::isfinite(p.value)) {
      std::ostringstream os;
      os << "plot " << plot_id << " " << variable_name(variable) << ": non-finite value";
      throw ValidationError(os.str());
    }
  }
}

double compute_ndvi(double nir, double red) {
  if (!(nir >= 0.0) || !(red >= 0.0)) {
    throw ValidationError("reflectances must be non-negative");
  }
  if (nir + red <= 0.0) {
    throw ValidationError("NDVI undefined: NIR + RED is zero");
  }
  return (nir - red) / (nir + red);
}

double compute_lst_split_window(double t31, double t32, const SplitWindowCoeffs& k) {
  if (!(t31 > 0.0) || !(t32 > 0.0) || !std::isfinite(t31) || !std::isfinite(t32)) {
    throw ValidationError("brightness temperatures must be positive kelvin");
  }
  if (!std::isfinite(k.a) || !std::isfinite(k.b) || !std::isfinite(k.c) ||
      !std::isfinite(k.d)) {
    throw ValidationError("split-window coefficients must be finite");
  }
  const double diff = t31 - t32;
  return k.a + k.b * (t31 + t32) + k.c * diff + k.d * diff * diff;
}

const std::vector<std::string> kPlotTableHeader = {
    "id",   "year", "ccdd", "ccpp",         "ccdi",       "congl",     "lat",
    "lon",  "harvest_week", "yield_t_ha",   "p204_tipo",  "p206_ini",  "p208",
    "p211_1", "p211_2",     "p211_4",       "p212",       "p213",      "p214"};

const std::vector<std::string> kSeriesHeader = {"plot_id", "variable", "date", "value"};

namespace {

// p206_ini may arrive either as a week index or as a calendar date; dates are
// reduced to the week containing them.
std::int64_t parse_week_field(const std::string& field, const std::string& context) {
  if (field.find('-') != std::string::npos && field.size() == 10) {
    return calendar::week_of_day(calendar::parse_iso_date(field));
  }
  return csv::parse_int(field, context);
}

}  // namespace

std::vector<PlotRecord> parse_plot_table(const std::filesystem::path& path) {
  const csv::Table table = csv::read_table(path, kPlotTableHeader);
  std::vector<PlotRecord> plots;
  plots.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& f = table.rows[i];
    const std::size_t row = i + 2;  // 1-based, after the header
    auto ctx = [&](std::string_view name) { return row_context(path, row, name); };
    PlotRecord p;
    p.id = csv::parse_int(f[0], ctx("id"));
    p.year = static_cast<int>(csv::parse_int(f[1], ctx("year")));
    p.ccdd = csv::parse_int(f[2], ctx("ccdd"));
    p.ccpp = csv::parse_int(f[3], ctx("ccpp"));
    p.ccdi = csv::parse_int(f[4], ctx("ccdi"));
    p.congl = csv::parse_int(f[5], ctx("congl"));
    p.lat = csv::parse_double(f[6], ctx("lat"));
    p.lon = csv::parse_double(f[7], ctx("lon"));
    p.harvest_week = csv::parse_int(f[8], ctx("harvest_week"));
    p.yield_t_ha = csv::parse_double(f[9], ctx("yield_t_ha"));
    p.controls.p204_tipo = csv::parse_int(f[10], ctx("p204_tipo"));
    p.controls.p206_ini = parse_week_field(f[11], ctx("p206_ini"));
    p.controls.p208 = csv::parse_int(f[12], ctx("p208"));
    p.controls.p211_1 = csv::parse_int(f[13], ctx("p211_1"));
    p.controls.p211_2 = csv::parse_int(f[14], ctx("p211_2"));
    p.controls.p211_4 = csv::parse_int(f[15], ctx("p211_4"));
    p.controls.p212 = csv::parse_int(f[16], ctx("p212"));
    p.controls.p213 = csv::parse_int(f[17], ctx("p213"));
    p.controls.p214 = csv::parse_int(f[18], ctx("p214"));
    try {
      p.validate();
    } catch (const ValidationError& e) {
      std::ostringstream os;
      os << path.string() << " row " << row << ": " << e.what();
      throw ValidationError(os.str());
    }
    plots.push_back(p);
  }
  return plots;
}

void write_plot_table(const std::filesystem::path& path, std::span<const PlotRecord> plots) {
  std::ostringstream out;
  for (std::size_t i = 0; i < kPlotTableHeader.size(); ++i) {
    out << (i ? "," : "") << kPlotTableHeader[i];
  }
  out << "\n";
  for (const PlotRecord& p : plots) {
    out << p.id << ',' << p.year << ',' << p.ccdd << ',' << p.ccpp << ',' << p.ccdi << ','
        << p.congl << ',' << csv::fmt_double(p.lat) << ',' << csv::fmt_double(p.lon) << ','
        << p.harvest_week << ',' << csv::fmt_double(p.yield_t_ha) << ',' << p.controls.p204_tipo
        << ',' << p.controls.p206_ini << ',' << p.controls.p208 << ',' << p.controls.p211_1 << ','
        << p.controls.p211_2 << ',' << p.controls.p211_4 << ',' << p.controls.p212 << ','
        << p.controls.p213 << ',' << p.controls.p214 << "\n";
  }
  csv::write_file_atomic(path, out.str());
}

namespace {

std::vector<RawSeries> group_series_rows(const std::filesystem::path& path,
                                         const csv::Table& table, const Variable* only) {
  // Group by (plot, variable) in order of first appearance.
  std::vector<RawSeries> series;
  std::map<std::pair<std::int64_t, int>, std::size_t> index;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& f = table.rows[i];
    const std::size_t row = i + 2;
    const std::int64_t plot_id = csv::parse_int(f[0], row_context(path, row, "plot_id"));
    const Variable var = variable_from_name(f[1]);
    if (only && var != *only) continue;
    const std::int64_t days = calendar::parse_iso_date(f[2]);
    const double value = csv::parse_double(f[3], row_context(path, row, "value"));
    const auto key = std::make_pair(plot_id, static_cast<int>(var));
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, series.size()).first;
      series.push_back(RawSeries{plot_id, var, {}});
    }
    series[it->second].points.push_back(SeriesPoint{static_cast<double>(days), value});
  }
  for (RawSeries& s : series) {
    std::sort(s.points.begin(), s.points.end(),
              [](const SeriesPoint& a, const SeriesPoint& b) { return a.t_days < b.t_days; });
  }
  // Validate everything and report all offenders in one message, so a partial
  // file names every bad plot rather than just the first.
  std::vector<std::string> problems;
  for (const RawSeries& s : series) {
    try {
      s.validate();
    } catch (const ValidationError& e) {
      problems.emplace_back(e.what());
    }
  }
  if (!problems.empty()) {
    std::ostringstream os;
    os << path.string() << ": " << problems.size() << " invalid series:";
    for (const std::string& p : problems) os << "\n  " << p;
    throw ValidationError(os.str());
  }
  return series;
}

}  // namespace

std::vector<RawSeries> parse_series(const std::filesystem::path& path, Variable variable) {
  const csv::Table table = csv::read_table(path, kSeriesHeader);
  return group_series_rows(path, table, &variable);
}

std::vector<RawSeries> parse_series_all(const std::filesystem::path& path) {
  const csv::Table table = csv::read_table(path, kSeriesHeader);
  return group_series_rows(path, table, nullptr);
}

void write_series(const std::filesystem::path& path, std::span<const RawSeries> series) {
  std::ostringstream out;
  out << "plot_id,variable,date,value\n";
  for (const RawSeries& s : series) {
    for (const SeriesPoint& p : s.points) {
      out << s.plot_id << ',' << variable_name(s.variable) << ','
          << calendar::format_iso_date(std::llround(p.t_days)) << ',' << csv::fmt_double(p.value)
          << "\n";
    }
  }
  csv::write_file_atomic(path, out.str());
}

}  // namespace rsyield::ingest
