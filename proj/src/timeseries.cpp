#include "rsyield/timeseries.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "rsyield/calendar.hpp"
#include "rsyield/csv.hpp"
#include "rsyield/errors.hpp"

namespace rsyield::timeseries {

std::vector<double> natural_spline_second_derivatives(std::span<const double> t,
                                                      std::span<const double> y) {
  const std::size_t n = t.size();
  if (n != y.size()) throw ValidationError("spline fit: length mismatch");
  if (n < 2) throw ValidationError("spline fit: need at least 2 knots");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(t[i] > t[i - 1])) {
      throw ValidationError("spline fit: knot times must be strictly increasing");
    }
  }

  std::vector<double> m2(n, 0.0);
  if (n == 2) return m2;  // straight line, second derivative identically zero

  // Tridiagonal system for the interior second derivatives, natural boundary
  // M[0] = M[n-1] = 0:
  //   (h[i-1]/6) M[i-1] + ((h[i-1]+h[i])/3) M[i] + (h[i]/6) M[i+1] = rhs[i]
  // with rhs[i] the divided-difference jump.  Thomas algorithm; the matrix is
  // strictly diagonally dominant, so no pivoting is needed.
  const std::size_t m = n - 2;
  std::vector<double> diag(m), upper(m), rhs(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double h0 = t[i + 1] - t[i];
    const double h1 = t[i + 2] - t[i + 1];
    diag[i] = (h0 + h1) / 3.0;
    upper[i] = h1 / 6.0;
    rhs[i] = (y[i + 2] - y[i + 1]) / h1 - (y[i + 1] - y[i]) / h0;
  }
  // Forward sweep: lower[i] equals upper[i-1] by symmetry.
  for (std::size_t i = 1; i < m; ++i) {
    const double w = upper[i - 1] / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  m2[m] = rhs[m - 1] / diag[m - 1];
  for (std::size_t i = m - 1; i > 0; --i) {
    m2[i] = (rhs[i - 1] - upper[i - 1] * m2[i + 1]) / diag[i - 1];
  }
  return m2;
}

SplineModel fit_natural_cubic_spline(std::span<const double> t, std::span<const double> y) {
  SplineModel model;
  model.m2_ = natural_spline_second_derivatives(t, y);
  model.knots_t_.assign(t.begin(), t.end());
  model.knots_y_.assign(y.begin(), y.end());
  return model;
}

SplineModel fit_natural_cubic_spline(const RawSeries& series) {
  series.validate();
  std::vector<double> t(series.points.size()), y(series.points.size());
  for (std::size_t i = 0; i < series.points.size(); ++i) {
    t[i] = series.points[i].t_days;
    y[i] = series.points[i].value;
  }
  SplineModel model = fit_natural_cubic_spline(t, y);
  model.plot_id = series.plot_id;
  model.variable = series.variable;
  return model;
}

double SplineModel::evaluate(double t) const {
  if (!(t >= t_min() && t <= t_max())) {
    std::ostringstream os;
    os << "spline evaluation at t=" << t << " outside knot range [" << t_min() << ", " << t_max()
       << "]";
    throw CoverageError(os.str());
  }
  // Rightmost segment whose left knot is <= t.
  const auto it = std::upper_bound(knots_t_.begin(), knots_t_.end(), t);
  std::size_t i = static_cast<std::size_t>(it - knots_t_.begin());
  i = (i == 0) ? 0 : i - 1;
  if (i >= knots_t_.size() - 1) i = knots_t_.size() - 2;

  const double h = knots_t_[i + 1] - knots_t_[i];
  const double a = (knots_t_[i + 1] - t) / h;
  const double b = (t - knots_t_[i]) / h;
  return a * knots_y_[i] + b * knots_y_[i + 1] +
         ((a * a * a - a) * m2_[i] + (b * b * b - b) * m2_[i + 1]) * (h * h) / 6.0;
}

double WeeklySeries::at_week(std::int64_t week) const {
  if (!covers(week, week)) {
    std::ostringstream os;
    os << "plot " << plot_id << " " << ingest::variable_name(variable) << ": week " << week
       << " outside covered range [" << start_week << ", " << end_week() << "]";
    throw CoverageError(os.str());
  }
  return values[static_cast<std::size_t>(week - start_week)];
}

WeeklySeries resample_weekly(const SplineModel& model, std::int64_t start_week,
                             std::size_t n_weeks) {
  if (n_weeks == 0) throw ValidationError("resample_weekly: empty window");
  WeeklySeries out;
  out.plot_id = model.plot_id;
  out.variable = model.variable;
  out.start_week = start_week;
  out.values.resize(n_weeks);
  for (std::size_t i = 0; i < n_weeks; ++i) {
    const std::int64_t week = start_week + static_cast<std::int64_t>(i);
    const double t = static_cast<double>(calendar::monday_of_week(week));
    if (!(t >= model.t_min() && t <= model.t_max())) {
      std::ostringstream os;
      os << "plot " << model.plot_id << " " << ingest::variable_name(model.variable) << ": week "
         << week << " (day " << t << ") outside spline range [" << model.t_min() << ", "
         << model.t_max() << "]";
      throw CoverageError(os.str());
    }
    out.values[i] = model.evaluate(t);
  }
  return out;
}

std::pair<std::int64_t, std::int64_t> coverable_weeks(const SplineModel& model) {
  const std::int64_t d0 = static_cast<std::int64_t>(std::ceil(model.t_min()));
  const std::int64_t d1 = static_cast<std::int64_t>(std::floor(model.t_max()));
  // First week whose Monday >= d0, last week whose Monday <= d1.
  const std::int64_t first = calendar::floor_div(d0 + 3 + 6, 7);
  const std::int64_t last = calendar::floor_div(d1 + 3, 7);
  return {first, last};
}

const std::vector<std::string> kWeeklyHeader = {"plot_id", "variable", "week", "value"};

void write_weekly(const std::filesystem::path& path, std::span<const WeeklySeries> series) {
  std::ostringstream out;
  out << "plot_id,variable,week,value\n";
  for (const WeeklySeries& s : series) {
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      out << s.plot_id << ',' << ingest::variable_name(s.variable) << ','
          << s.start_week + static_cast<std::int64_t>(i) << ',' << csv::fmt_double(s.values[i])
          << "\n";
    }
  }
  csv::write_file_atomic(path, out.str());
}

std::vector<WeeklySeries> read_weekly(const std::filesystem::path& path) {
  const csv::Table table = csv::read_table(path, kWeeklyHeader);
  std::vector<WeeklySeries> series;
  std::map<std::pair<std::int64_t, int>, std::size_t> index;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& f = table.rows[i];
    std::ostringstream ctx;
    ctx << path.string() << " row " << i + 2;
    const std::int64_t plot_id = csv::parse_int(f[0], ctx.str());
    const Variable var = ingest::variable_from_name(f[1]);
    const std::int64_t week = csv::parse_int(f[2], ctx.str());
    const double value = csv::parse_double(f[3], ctx.str());
    const auto key = std::make_pair(plot_id, static_cast<int>(var));
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, series.size()).first;
      series.push_back(WeeklySeries{plot_id, var, week, {}});
    }
    WeeklySeries& s = series[it->second];
    const std::int64_t expected = s.start_week + static_cast<std::int64_t>(s.values.size());
    if (week != expected) {
      std::ostringstream os;
      os << path.string() << " row " << i + 2 << ": plot " << plot_id << " "
         << ingest::variable_name(var) << " weeks not consecutive (got " << week << ", expected "
         << expected << ")";
      throw ValidationError(os.str());
    }
    s.values.push_back(value);
  }
  return series;
}

}  // namespace rsyield::timeseries
