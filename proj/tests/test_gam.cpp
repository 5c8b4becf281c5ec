#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <vector>

#include "rsyield/errors.hpp"
#include "rsyield/features.hpp"
#include "rsyield/gam.hpp"
#include "rsyield/rng.hpp"

using namespace rsyield;
using namespace rsyield::gam;
using features::kNumControls;
using features::kNumCovariates;
using features::kNumDynamic;

namespace {

std::vector<double> solve_dense(std::vector<double> A, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(A[r * n + col]) > std::abs(A[pivot * n + col])) pivot = r;
    }
    for (std::size_t c = 0; c < n; ++c) std::swap(A[col * n + c], A[pivot * n + c]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = A[r * n + col] / A[col * n + col];
      for (std::size_t c = col; c < n; ++c) A[r * n + c] -= f * A[col * n + c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t r = n; r-- > 0;) {
    double s = b[r];
    for (std::size_t c = r + 1; c < n; ++c) s -= A[r * n + c] * x[c];
    x[r] = s / A[r * n + r];
  }
  return x;
}

// Random dataset in the full 81-column layout; controls and dynamic features
// are iid so the design is well conditioned.
Dataset random_dataset(std::uint64_t seed, std::size_t n) {
  rng::DetRng r(seed);
  Dataset d;
  d.columns = features::covariate_names();
  d.X = Matrix(n, static_cast<std::size_t>(kNumCovariates));
  d.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < static_cast<std::size_t>(kNumCovariates); ++j) {
      d.X(i, j) = r.next_normal();
    }
    d.y[i] = r.next_normal();
  }
  return d;
}

// OLS predictions on [1, all 81 raw columns].
std::vector<double> ols_predictions(const Dataset& d) {
  const std::size_t p = static_cast<std::size_t>(kNumCovariates) + 1;
  const std::size_t n = d.n();
  std::vector<double> A(p * p, 0.0), b(p, 0.0);
  auto col = [&](std::size_t j, std::size_t i) -> double {
    return j == 0 ? 1.0 : d.X(i, j - 1);
  };
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t c = a; c < p; ++c) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += col(a, i) * col(c, i);
      A[a * p + c] = s;
      A[c * p + a] = s;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += col(a, i) * d.y[i];
    b[a] = s;
  }
  const std::vector<double> beta = solve_dense(std::move(A), std::move(b));
  std::vector<double> pred(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double v = beta[0];
    for (std::size_t j = 1; j < p; ++j) v += beta[j] * d.X(i, j - 1);
    pred[i] = v;
  }
  return pred;
}

}  // namespace

TEST_CASE("smooth basis: quantile knots, centering, and cardinal interpolation") {
  rng::DetRng r(3);
  std::vector<double> values;
  for (int i = 0; i < 200; ++i) values.push_back(r.next_uniform(-2.0, 5.0));
  SmoothBasis b = build_smooth_basis(values, 0);
  REQUIRE(b.kind == SmoothBasis::Kind::spline);
  REQUIRE(b.knots.size() == static_cast<std::size_t>(kDefaultRank));
  for (std::size_t i = 1; i < b.knots.size(); ++i) CHECK(b.knots[i] > b.knots[i - 1]);

  // Cardinal property: b_k(knot_i) = [k == i].
  std::vector<double> row(b.knots.size());
  for (std::size_t i = 0; i < b.knots.size(); ++i) {
    b.eval_cardinal(b.knots[i], row.data());
    for (std::size_t k = 0; k < b.knots.size(); ++k) {
      CHECK(std::abs(row[k] - (k == i ? 1.0 : 0.0)) <= 1e-12);
    }
  }

  // Constrained design columns have zero mean over the training values.
  std::vector<double> sums(static_cast<std::size_t>(b.n_cols()), 0.0);
  std::vector<double> crow(static_cast<std::size_t>(b.n_cols()));
  for (double v : values) {
    b.eval_row(v, crow.data());
    for (std::size_t c = 0; c < sums.size(); ++c) sums[c] += crow[c];
  }
  for (double s : sums) CHECK(std::abs(s) <= 1e-10);
}

TEST_CASE("degenerate columns degrade to linear, then dropped") {
  std::vector<double> three_levels;
  for (int i = 0; i < 30; ++i) three_levels.push_back(static_cast<double>(i % 3));
  SmoothBasis lin = build_smooth_basis(three_levels, 4);
  CHECK(lin.kind == SmoothBasis::Kind::linear);
  CHECK(lin.n_cols() == 1);

  std::vector<double> constant(30, 2.5);
  SmoothBasis drop = build_smooth_basis(constant, 4);
  CHECK(drop.kind == SmoothBasis::Kind::dropped);
  CHECK(drop.n_cols() == 0);
}

TEST_CASE("penalty matrix is symmetric PSD and kills affine knot values") {
  std::vector<double> knots{-1.0, 0.0, 0.5, 2.0, 3.5};
  const std::vector<double> S = penalty_matrix(knots);
  const std::size_t R = knots.size();
  for (std::size_t a = 0; a < R; ++a) {
    for (std::size_t c = 0; c < R; ++c) CHECK(S[a * R + c] == doctest::Approx(S[c * R + a]));
  }
  // Quadratic form on affine knot values vanishes: the natural interpolant of
  // a line is the line, whose second derivative is identically zero.
  std::vector<double> affine(R);
  for (std::size_t i = 0; i < R; ++i) affine[i] = -3.0 + 2.0 * knots[i];
  double q = 0.0;
  for (std::size_t a = 0; a < R; ++a) {
    for (std::size_t c = 0; c < R; ++c) q += affine[a] * S[a * R + c] * affine[c];
  }
  CHECK(std::abs(q) <= 1e-10);

  // And is positive on a curved configuration.
  std::vector<double> curved(R);
  for (std::size_t i = 0; i < R; ++i) curved[i] = knots[i] * knots[i];
  double qc = 0.0;
  for (std::size_t a = 0; a < R; ++a) {
    for (std::size_t c = 0; c < R; ++c) qc += curved[a] * S[a * R + c] * curved[c];
  }
  CHECK(qc > 0.0);
}

TEST_CASE("huge smoothing collapses the additive model onto least squares") {
  Dataset d = random_dataset(17, 200);
  GamFitOptions opts;
  opts.lambda_s = 1e12;
  GamModel m = fit_gam(d, opts);
  const std::vector<double> ols = ols_predictions(d);
  for (std::size_t i = 0; i < d.n(); ++i) {
    CHECK(std::abs(m.fitted[i] - ols[i]) <= 1e-4 * std::max(1.0, std::abs(ols[i])));
  }

  // In the collapsed regime the prediction is affine in every dynamic
  // feature: second differences along a probe grid vanish.
  std::vector<double> x(static_cast<std::size_t>(kNumCovariates), 0.25);
  const std::size_t j = static_cast<std::size_t>(kNumControls) + 7;
  std::vector<double> vals;
  for (int g = 0; g < 7; ++g) {
    x[j] = -2.0 + g * 0.75;
    vals.push_back(predict_gam(m, x));
  }
  for (std::size_t g = 2; g < vals.size(); ++g) {
    CHECK(std::abs(vals[g] - 2.0 * vals[g - 1] + vals[g - 2]) <= 1e-6);
  }
}

TEST_CASE("sin component is recovered from noisy additive data") {
  rng::DetRng r(29);
  const std::size_t n = 300;
  Dataset d;
  d.columns = features::covariate_names();
  d.X = Matrix(n, static_cast<std::size_t>(kNumCovariates));
  d.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < static_cast<std::size_t>(kNumCovariates); ++j) {
      d.X(i, j) = r.next_normal();
    }
    const double w1 = r.next_uniform(-3.0, 3.0);
    d.X(i, static_cast<std::size_t>(kNumControls)) = w1;
    d.y[i] = 2.0 * d.X(i, 0) + std::sin(w1) + 0.1 * r.next_normal();
  }
  GamModel m = fit_gam(d);  // AUTO smoothing via GCV

  // Correlate the first fitted smooth with sin on a held-out grid.
  const GamSmoothFit& f1 = m.smooths[0];
  std::vector<double> fx, sx;
  for (int g = 0; g <= 60; ++g) {
    const double x = -2.7 + g * 0.09;
    fx.push_back(f1.value(x));
    sx.push_back(std::sin(x));
  }
  double mf = 0, ms = 0;
  for (std::size_t i = 0; i < fx.size(); ++i) {
    mf += fx[i];
    ms += sx[i];
  }
  mf /= static_cast<double>(fx.size());
  ms /= static_cast<double>(sx.size());
  double num = 0, df = 0, ds = 0;
  for (std::size_t i = 0; i < fx.size(); ++i) {
    num += (fx[i] - mf) * (sx[i] - ms);
    df += (fx[i] - mf) * (fx[i] - mf);
    ds += (sx[i] - ms) * (sx[i] - ms);
  }
  const double corr = num / std::sqrt(df * ds);
  CHECK(corr >= 0.95);

  // The linear control coefficient lands near its true value.
  CHECK(m.theta[0] == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("fitted smooths are centered and reproduce stored fits") {
  Dataset d = random_dataset(31, 120);
  GamFitOptions opts;
  opts.lambda_s = 10.0;
  GamModel m = fit_gam(d, opts);

  for (int j = 0; j < kNumDynamic; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < d.n(); ++i) {
      s += m.smooths[static_cast<std::size_t>(j)].value(
          d.X(i, static_cast<std::size_t>(kNumControls + j)));
    }
    CHECK(std::abs(s / static_cast<double>(d.n())) <= 1e-10);
  }

  const std::vector<double> pred = predict_gam(m, d.X);
  for (std::size_t i = 0; i < d.n(); ++i) {
    CHECK(std::abs(pred[i] - m.fitted[i]) <= 1e-10);
  }

  // Optimality sanity: the penalized solution beats the intercept-only fit
  // on the raw residual sum alone.
  double ymean = 0.0;
  for (double v : d.y) ymean += v;
  ymean /= static_cast<double>(d.n());
  double rss_fit = 0.0, rss_null = 0.0;
  for (std::size_t i = 0; i < d.n(); ++i) {
    rss_fit += (d.y[i] - m.fitted[i]) * (d.y[i] - m.fitted[i]);
    rss_null += (d.y[i] - ymean) * (d.y[i] - ymean);
  }
  CHECK(rss_fit <= rss_null);
}

TEST_CASE("out-of-range predictions stay finite via linear extension") {
  Dataset d = random_dataset(41, 100);
  GamFitOptions opts;
  opts.lambda_s = 1.0;
  GamModel m = fit_gam(d, opts);
  std::vector<double> x(static_cast<std::size_t>(kNumCovariates), 0.0);
  x[static_cast<std::size_t>(kNumControls)] = 1e4;
  x[static_cast<std::size_t>(kNumControls) + 1] = -1e4;
  CHECK(std::isfinite(predict_gam(m, x)));
}

TEST_CASE("effective degrees of freedom shrink as smoothing grows") {
  Dataset d = random_dataset(53, 150);
  double prev_total = 1e300;
  for (double lam : {1e-3, 1e-1, 10.0, 1e3, 1e6}) {
    GamFitOptions opts;
    opts.lambda_s = lam;
    GamModel m = fit_gam(d, opts);
    CHECK(m.edf_total <= prev_total + 1e-8);
    prev_total = m.edf_total;
  }
}

TEST_CASE("AUTO smoothing selects a grid point by GCV") {
  Dataset d = random_dataset(67, 120);
  GamModel m = fit_gam(d);
  const std::vector<double> grid = [] {
    std::vector<double> g;
    for (int k = 0; k <= 24; ++k) g.push_back(std::pow(10.0, -4.0 + 0.5 * k));
    return g;
  }();
  bool on_grid = false;
  for (double g : grid) on_grid = on_grid || g == m.lambda_s;
  CHECK(on_grid);

  GamFitOptions fixed;
  fixed.lambda_s = m.lambda_s;
  GamModel refit = fit_gam(d, fixed);
  CHECK(refit.gcv == doctest::Approx(m.gcv).epsilon(1e-12));
}

TEST_CASE("degenerate control columns are reported as singular") {
  Dataset d = random_dataset(71, 100);
  for (std::size_t i = 0; i < d.n(); ++i) d.X(i, 3) = d.X(i, 2);  // exact duplicate controls
  GamFitOptions opts;
  opts.lambda_s = 1.0;
  try {
    fit_gam(d, opts);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("singular penalized system") != std::string::npos);
    CHECK(std::string(e.what()).find("control") != std::string::npos);
  }
}

TEST_CASE("too few rows are rejected") {
  Dataset d = random_dataset(83, 20);
  CHECK_THROWS_AS(fit_gam(d), ValidationError);
}
