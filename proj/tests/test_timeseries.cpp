#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <vector>

#include "rsyield/calendar.hpp"
#include "rsyield/csv.hpp"
#include "rsyield/errors.hpp"
#include "rsyield/rng.hpp"
#include "rsyield/timeseries.hpp"

using namespace rsyield;
using namespace rsyield::timeseries;

namespace {

// Independent route to the natural-spline second derivatives: assemble the
// full (n-2)x(n-2) interior system densely and solve it by Gaussian
// elimination with partial pivoting.  Shares no code with the production
// tridiagonal solver.
std::vector<double> dense_second_derivatives(const std::vector<double>& t,
                                             const std::vector<double>& y) {
  const std::size_t n = t.size();
  std::vector<double> m(n, 0.0);
  if (n < 3) return m;
  const std::size_t k = n - 2;
  std::vector<double> A(k * k, 0.0);
  std::vector<double> b(k, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = t[i] - t[i - 1];
    const double h1 = t[i + 1] - t[i];
    const std::size_t r = i - 1;
    if (i >= 2) A[r * k + (r - 1)] = h0 / 6.0;
    A[r * k + r] = (h0 + h1) / 3.0;
    if (i + 2 < n) A[r * k + (r + 1)] = h1 / 6.0;
    b[r] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
  }
  for (std::size_t col = 0; col < k; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < k; ++r) {
      if (std::abs(A[r * k + col]) > std::abs(A[pivot * k + col])) pivot = r;
    }
    for (std::size_t c = 0; c < k; ++c) std::swap(A[col * k + c], A[pivot * k + c]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = col + 1; r < k; ++r) {
      const double f = A[r * k + col] / A[col * k + col];
      for (std::size_t c = col; c < k; ++c) A[r * k + c] -= f * A[col * k + c];
      b[r] -= f * b[col];
    }
  }
  for (std::size_t r = k; r-- > 0;) {
    double s = b[r];
    for (std::size_t c = r + 1; c < k; ++c) s -= A[r * k + c] * m[c + 1];
    m[r + 1] = s / A[r * k + r];
  }
  return m;
}

// Piecewise evaluation from knots and second derivatives, written from the
// textbook segment formula rather than the production code path.
double dense_eval(const std::vector<double>& t, const std::vector<double>& y,
                  const std::vector<double>& m, double x) {
  std::size_t i = 0;
  while (i + 2 < t.size() && x > t[i + 1]) ++i;
  const double h = t[i + 1] - t[i];
  const double a = (t[i + 1] - x) / h;
  const double b = (x - t[i]) / h;
  return a * y[i] + b * y[i + 1] +
         ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) * h * h / 6.0;
}

}  // namespace

TEST_CASE("spline interpolates its knots and keeps natural ends") {
  std::vector<double> t{0, 7, 14};
  std::vector<double> y{1, 2, 3};
  SplineModel s = fit_natural_cubic_spline(t, y);
  CHECK(s.evaluate(0) == doctest::Approx(1).epsilon(1e-14));
  CHECK(s.evaluate(7) == doctest::Approx(2).epsilon(1e-14));
  CHECK(s.evaluate(14) == doctest::Approx(3).epsilon(1e-14));
  CHECK(s.second_derivatives().front() == 0.0);
  CHECK(s.second_derivatives().back() == 0.0);
}

TEST_CASE("affine data is reproduced exactly between knots") {
  std::vector<double> t{0, 16, 32, 48};
  std::vector<double> y;
  for (double ti : t) y.push_back(2.0 * ti);
  SplineModel s = fit_natural_cubic_spline(t, y);
  CHECK(std::abs(s.evaluate(7) - 14.0) <= 1e-12);
  for (double x = 0; x <= 48; x += 1.7) {
    CHECK(std::abs(s.evaluate(x) - 2.0 * x) <= 1e-10);
  }
}

TEST_CASE("knot interpolation stays within 1e-12 relative on random series") {
  rng::DetRng r(11);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> t, y;
    double cur = 0.0;
    for (int i = 0; i < 25; ++i) {
      cur += r.next_uniform(0.5, 20.0);
      t.push_back(cur);
      y.push_back(r.next_uniform(-100.0, 100.0));
    }
    SplineModel s = fit_natural_cubic_spline(t, y);
    for (std::size_t i = 0; i < t.size(); ++i) {
      CHECK(std::abs(s.evaluate(t[i]) - y[i]) <= 1e-12 * std::max(1.0, std::abs(y[i])));
    }
  }
}

TEST_CASE("production solver agrees with the dense oracle") {
  rng::DetRng r(23);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<double> t, y;
    double cur = 0.0;
    const int n = 20;
    for (int i = 0; i < n; ++i) {
      cur += r.next_uniform(1.0, 16.0);
      t.push_back(cur);
      y.push_back(r.next_uniform(-5.0, 5.0));
    }
    SplineModel s = fit_natural_cubic_spline(t, y);
    const std::vector<double> m = dense_second_derivatives(t, y);
    for (int i = 0; i < 200; ++i) {
      const double x = r.next_uniform(t.front(), t.back());
      CHECK(std::abs(s.evaluate(x) - dense_eval(t, y, m, x)) <= 1e-9);
    }
  }
}

TEST_CASE("two knots degrade to linear interpolation") {
  std::vector<double> t{0, 10};
  std::vector<double> y{1, 3};
  SplineModel s = fit_natural_cubic_spline(t, y);
  CHECK(s.evaluate(5) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("evaluation outside the knot range is a coverage error") {
  std::vector<double> t{0, 5, 10, 15};
  std::vector<double> y{0, 1, 0, 1};
  SplineModel s = fit_natural_cubic_spline(t, y);
  CHECK_THROWS_AS(s.evaluate(-0.001), CoverageError);
  CHECK_THROWS_AS(s.evaluate(15.001), CoverageError);
}

TEST_CASE("unsorted or duplicate knots are rejected") {
  std::vector<double> y{0, 1, 2};
  CHECK_THROWS_AS(fit_natural_cubic_spline(std::vector<double>{0, 0, 1}, y), ValidationError);
  CHECK_THROWS_AS(fit_natural_cubic_spline(std::vector<double>{0, 2, 1}, y), ValidationError);
  CHECK_THROWS_AS(fit_natural_cubic_spline(std::vector<double>{0}, std::vector<double>{1}),
                  ValidationError);
}

TEST_CASE("refinement stability: a knot on the spline barely changes resampling") {
  rng::DetRng r(37);
  std::vector<double> t, y;
  double cur = 0.0;
  for (int i = 0; i < 12; ++i) {
    cur += r.next_uniform(5.0, 15.0);
    t.push_back(cur);
    y.push_back(r.next_uniform(-2.0, 2.0));
  }
  SplineModel s = fit_natural_cubic_spline(t, y);

  const double mid = 0.5 * (t[4] + t[5]);
  std::vector<double> t2 = t, y2 = y;
  t2.insert(t2.begin() + 5, mid);
  y2.insert(y2.begin() + 5, s.evaluate(mid));
  SplineModel s2 = fit_natural_cubic_spline(t2, y2);

  for (double x = t.front(); x <= t.back(); x += 0.83) {
    CHECK(std::abs(s.evaluate(x) - s2.evaluate(x)) <= 1e-9);
  }
}

TEST_CASE("weekly resampling hits Mondays and respects coverage") {
  // Build a constant-series spline covering a few months.
  const std::int64_t day0 = calendar::monday_of_week(2500) - 3;
  std::vector<double> t, y;
  for (int i = 0; i < 10; ++i) {
    t.push_back(static_cast<double>(day0 + 16 * i));
    y.push_back(4.25);
  }
  SplineModel s = fit_natural_cubic_spline(t, y);
  auto [first, last] = coverable_weeks(s);
  CHECK(static_cast<double>(calendar::monday_of_week(first)) >= s.t_min());
  CHECK(static_cast<double>(calendar::monday_of_week(first - 1)) < s.t_min());
  CHECK(static_cast<double>(calendar::monday_of_week(last)) <= s.t_max());
  CHECK(static_cast<double>(calendar::monday_of_week(last + 1)) > s.t_max());

  WeeklySeries w = resample_weekly(s, first, static_cast<std::size_t>(last - first + 1));
  for (double v : w.values) CHECK(v == doctest::Approx(4.25).epsilon(1e-13));

  CHECK_THROWS_AS(resample_weekly(s, first, static_cast<std::size_t>(last - first + 2)),
                  CoverageError);
}

TEST_CASE("affine resampling is exact at week timestamps") {
  const std::int64_t day0 = calendar::monday_of_week(2400);
  std::vector<double> t, y;
  for (int i = 0; i < 8; ++i) {
    const double ti = static_cast<double>(day0 + 11 * i);
    t.push_back(ti);
    y.push_back(-3.0 + 0.125 * ti);
  }
  SplineModel s = fit_natural_cubic_spline(t, y);
  auto [first, last] = coverable_weeks(s);
  WeeklySeries w = resample_weekly(s, first, static_cast<std::size_t>(last - first + 1));
  for (std::size_t i = 0; i < w.values.size(); ++i) {
    const double tw = static_cast<double>(calendar::monday_of_week(w.start_week + static_cast<std::int64_t>(i)));
    CHECK(std::abs(w.values[i] - (-3.0 + 0.125 * tw)) <= 1e-10 * std::max(1.0, std::abs(w.values[i])));
  }
}

TEST_CASE("weekly series lookup and persistence round-trip") {
  WeeklySeries w;
  w.plot_id = 3;
  w.variable = Variable::PREC;
  w.start_week = 2500;
  for (int i = 0; i < 20; ++i) w.values.push_back(10.0 + i * 0.1);

  CHECK(w.end_week() == 2519);
  CHECK(w.covers(2500, 2519));
  CHECK(!w.covers(2499, 2510));
  CHECK(w.at_week(2505) == doctest::Approx(10.5));
  CHECK_THROWS_AS(w.at_week(2520), CoverageError);

  const auto dir = std::filesystem::temp_directory_path() / "rsyield_ts_test";
  std::filesystem::create_directories(dir);
  const auto p = dir / "weekly.csv";
  write_weekly(p, std::vector<WeeklySeries>{w});
  auto back = read_weekly(p);
  REQUIRE(back.size() == 1);
  CHECK(back[0].start_week == w.start_week);
  CHECK(back[0].values == w.values);  // bitwise via 17-digit formatting
}

TEST_CASE("weekly reader rejects gapped weeks") {
  const auto dir = std::filesystem::temp_directory_path() / "rsyield_ts_test";
  std::filesystem::create_directories(dir);
  const auto p = dir / "gapped.csv";
  csv::write_file_atomic(p,
                         "plot_id,variable,week,value\n"
                         "1,NDVI,2500,0.5\n"
                         "1,NDVI,2502,0.6\n");
  CHECK_THROWS_AS(read_weekly(p), ValidationError);
}
