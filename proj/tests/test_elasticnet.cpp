#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <numeric>
#include <vector>

#include "rsyield/elasticnet.hpp"
#include "rsyield/matrix.hpp"
#include "rsyield/rng.hpp"

using namespace rsyield;
using namespace rsyield::elasticnet;

namespace {

// Dense symmetric solve by Gaussian elimination with partial pivoting; the
// independent route for the OLS / ridge closed forms.
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

Matrix random_design(rng::DetRng& r, std::size_t n, std::size_t p) {
  Matrix X(n, p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) X(i, j) = r.next_normal();
  }
  return X;
}

std::vector<double> random_response(rng::DetRng& r, const Matrix& X, double noise) {
  std::vector<double> y(X.rows, 0.0);
  for (std::size_t i = 0; i < X.rows; ++i) {
    double v = 1.5;
    for (std::size_t j = 0; j < X.cols; ++j) v += (j % 3 == 0 ? 0.8 : -0.3) * X(i, j);
    y[i] = v + noise * r.next_normal();
  }
  return y;
}

// OLS coefficients (intercept first) via the normal equations on [1 X].
std::vector<double> ols_oracle(const Matrix& X, const std::vector<double>& y) {
  const std::size_t p = X.cols + 1;
  std::vector<double> A(p * p, 0.0), b(p, 0.0);
  auto colv = [&](std::size_t j, std::size_t i) -> double {
    return j == 0 ? 1.0 : X(i, j - 1);
  };
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t c = 0; c < p; ++c) {
      double s = 0.0;
      for (std::size_t i = 0; i < X.rows; ++i) s += colv(a, i) * colv(c, i);
      A[a * p + c] = s;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < X.rows; ++i) s += colv(a, i) * y[i];
    b[a] = s;
  }
  return solve_dense(std::move(A), std::move(b));
}

}  // namespace

TEST_CASE("soft threshold") {
  CHECK(soft_threshold(3, 1) == 2);
  CHECK(soft_threshold(-0.5, 1) == 0);
  CHECK(soft_threshold(-3, 1) == -2);
  CHECK(soft_threshold(0.0, 0.0) == 0.0);
}

TEST_CASE("lambda=0 reproduces ordinary least squares") {
  rng::DetRng r(101);
  const Matrix X = random_design(r, 60, 8);
  const std::vector<double> y = random_response(r, X, 0.5);
  const std::vector<double> truth = ols_oracle(X, y);

  for (bool standardize : {true, false}) {
    EnetConfig cfg;
    cfg.alpha = 1.0;
    cfg.lambda = 0.0;
    cfg.tol = 1e-12;
    cfg.max_sweeps = 200000;
    cfg.standardize = standardize;
    EnetModel m = fit(X, y, cfg);
    CHECK(std::abs(m.beta0 - truth[0]) <= 1e-8);
    for (std::size_t j = 0; j < X.cols; ++j) {
      CHECK(std::abs(m.beta[j] - truth[j + 1]) <= 1e-8);
    }
  }
}

TEST_CASE("alpha=0 matches the ridge closed form") {
  rng::DetRng r(202);
  const Matrix X = random_design(r, 50, 6);
  const std::vector<double> y = random_response(r, X, 1.0);
  const double lambda = 3.7;

  // Oracle on the internally standardized problem: (Xs'Xs + lambda I) b = Xs'yc.
  const std::size_t n = X.rows, p = X.cols;
  std::vector<double> mean(p, 0.0), sd(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = 0; i < n; ++i) mean[j] += X(i, j);
    mean[j] /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) sd[j] += (X(i, j) - mean[j]) * (X(i, j) - mean[j]);
    sd[j] = std::sqrt(sd[j] / static_cast<double>(n));
  }
  const double ymean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  std::vector<double> A(p * p, 0.0), rhs(p, 0.0);
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t c = 0; c < p; ++c) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        s += (X(i, a) - mean[a]) / sd[a] * (X(i, c) - mean[c]) / sd[c];
      }
      A[a * p + c] = s + (a == c ? lambda : 0.0);
    }
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += (X(i, a) - mean[a]) / sd[a] * (y[i] - ymean);
    rhs[a] = s;
  }
  const std::vector<double> b = solve_dense(std::move(A), std::move(rhs));

  EnetConfig cfg;
  cfg.alpha = 0.0;
  cfg.lambda = lambda;
  cfg.tol = 1e-12;
  cfg.max_sweeps = 200000;
  EnetModel m = fit(X, y, cfg);
  const std::vector<double> got = m.beta_internal();
  for (std::size_t j = 0; j < p; ++j) CHECK(std::abs(got[j] - b[j]) <= 1e-8);
}

TEST_CASE("lambda at or above lambda_max yields the null model") {
  rng::DetRng r(303);
  const Matrix X = random_design(r, 40, 10);
  const std::vector<double> y = random_response(r, X, 0.3);
  const double ymean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());

  for (double alpha : {0.02, 0.5, 1.0}) {
    const std::vector<double> path = lambda_path(X, y, alpha);
    EnetConfig cfg;
    cfg.alpha = alpha;
    cfg.lambda = path.front();
    EnetModel m = fit(X, y, cfg);
    for (double bj : m.beta) CHECK(bj == 0.0);
    CHECK(m.beta0 == doctest::Approx(ymean).epsilon(1e-12));
    CHECK(kkt_residual(m, X, y) <= 1e-9 * static_cast<double>(X.rows));

    // Just below the threshold at least one coefficient activates.
    cfg.lambda = path.front() * 0.98;
    EnetModel m2 = fit(X, y, cfg);
    int active = 0;
    for (double bj : m2.beta) active += bj != 0.0;
    CHECK(active >= 1);
  }
}

TEST_CASE("lambda path shape and alpha=0 rejection") {
  rng::DetRng r(404);
  const Matrix X = random_design(r, 30, 5);
  const std::vector<double> y = random_response(r, X, 0.3);
  const std::vector<double> path = lambda_path(X, y, 0.5, 100, 1e-4);
  CHECK(path.size() == 100);
  for (std::size_t i = 1; i < path.size(); ++i) CHECK(path[i] < path[i - 1]);
  CHECK(path.back() == doctest::Approx(path.front() * 1e-4).epsilon(1e-10));
  CHECK_THROWS_AS(lambda_path(X, y, 0.0), ValidationError);
}

TEST_CASE("orthonormal lasso activates exactly at the analytic thresholds") {
  // Gram-Schmidt an iid design so X'X = I, then the solution at penalty t
  // keeps coordinate j iff |x_j'(y - ybar)| > t.
  rng::DetRng r(505);
  const std::size_t n = 64, p = 6;
  Matrix X = random_design(r, n, p);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t k = 0; k < j; ++k) {
      double d = 0.0;
      for (std::size_t i = 0; i < n; ++i) d += X(i, j) * X(i, k);
      for (std::size_t i = 0; i < n; ++i) X(i, j) -= d * X(i, k);
    }
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) norm += X(i, j) * X(i, j);
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < n; ++i) X(i, j) /= norm;
  }
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = 2.0 + 5.0 * X(i, 0) - 3.0 * X(i, 2) + 1.5 * X(i, 4) + 0.2 * r.next_normal();
  }
  const double ymean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  std::vector<double> thresholds(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += X(i, j) * (y[i] - ymean);
    thresholds[j] = std::abs(s);
  }

  std::vector<double> sorted = thresholds;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t cut = 0; cut + 1 < p; ++cut) {
    const double lambda = 0.5 * (sorted[cut] + sorted[cut + 1]);
    EnetConfig cfg;
    cfg.alpha = 1.0;
    cfg.lambda = lambda;
    cfg.tol = 1e-10;
    cfg.standardize = false;
    EnetModel m = fit(X, y, cfg);
    for (std::size_t j = 0; j < p; ++j) {
      CHECK((m.beta[j] != 0.0) == (thresholds[j] > lambda));
    }
  }
}

TEST_CASE("path sparsity grows monotonically in at least 95% of steps") {
  int pairs = 0, monotone = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    rng::DetRng r(seed);
    const Matrix X = random_design(r, 40, 20);
    std::vector<double> y(X.rows);
    for (std::size_t i = 0; i < X.rows; ++i) {
      y[i] = X(i, 0) - 2.0 * X(i, 5) + 0.5 * X(i, 13) + 0.5 * r.next_normal();
    }
    const std::vector<double> grid = lambda_path(X, y, 1.0, 50, 1e-3);
    EnetConfig cfg;
    cfg.alpha = 1.0;
    const std::vector<EnetModel> path = fit_path(X, y, grid, cfg);
    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
      int nz_hi = 0, nz_lo = 0;
      for (double bj : path[k].beta) nz_hi += bj != 0.0;
      for (double bj : path[k + 1].beta) nz_lo += bj != 0.0;
      ++pairs;
      monotone += nz_lo >= nz_hi;  // smaller lambda keeps at least as many
    }
  }
  CHECK(static_cast<double>(monotone) >= 0.95 * static_cast<double>(pairs));
}

TEST_CASE("pure-lasso solutions scale linearly with the response") {
  rng::DetRng r(606);
  const Matrix X = random_design(r, 50, 10);
  const std::vector<double> y = random_response(r, X, 0.4);
  const double c = 4.0;  // power of two, exactly representable scaling
  std::vector<double> cy(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) cy[i] = c * y[i];

  EnetConfig cfg;
  cfg.alpha = 1.0;
  cfg.lambda = 5.0;
  cfg.tol = 1e-13;
  cfg.max_sweeps = 500000;
  EnetModel base = fit(X, y, cfg);

  EnetConfig scaled = cfg;
  scaled.lambda = c * cfg.lambda;
  EnetModel big = fit(X, cy, scaled);

  CHECK(std::abs(big.beta0 - c * base.beta0) <= 1e-9 * std::max(1.0, std::abs(c * base.beta0)));
  for (std::size_t j = 0; j < X.cols; ++j) {
    CHECK(std::abs(big.beta[j] - c * base.beta[j]) <=
          1e-9 * std::max(1.0, std::abs(c * base.beta[j])));
    CHECK((big.beta[j] == 0.0) == (base.beta[j] == 0.0));
  }
}

TEST_CASE("kkt residual meets the solver contract and detects perturbations") {
  rng::DetRng r(707);
  const Matrix X = random_design(r, 80, 12);
  const std::vector<double> y = random_response(r, X, 0.6);

  EnetConfig cfg;
  cfg.alpha = 0.3;
  cfg.lambda = 2.0;
  EnetModel m = fit(X, y, cfg);
  const double base = kkt_residual(m, X, y);
  CHECK(base <= 1e-6 * std::max(1.0, static_cast<double>(X.rows)));

  EnetModel bent = m;
  bent.beta[3] += 0.1;
  CHECK(kkt_residual(bent, X, y) > base * 10.0);
}

TEST_CASE("non-convergence reports the last iterate") {
  rng::DetRng r(808);
  const std::size_t n = 30;
  Matrix X(n, 4);
  for (std::size_t i = 0; i < n; ++i) {
    const double base = r.next_normal();
    // Strongly correlated columns slow the sweep down.
    for (std::size_t j = 0; j < 4; ++j) X(i, j) = base + 0.01 * r.next_normal();
  }
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = X(i, 0) - X(i, 3) + 0.1 * r.next_normal();

  EnetConfig cfg;
  cfg.alpha = 0.1;
  cfg.lambda = 0.001;
  cfg.tol = 1e-14;
  cfg.max_sweeps = 2;
  try {
    fit(X, y, cfg);
    FAIL("expected EnetConvergenceError");
  } catch (const EnetConvergenceError& e) {
    CHECK(std::string(e.what()).find("converge") != std::string::npos);
    CHECK(e.last_iterate.beta.size() == 4);
    CHECK(e.last_iterate.kkt_residual > 0.0);
  }
}

TEST_CASE("constant predictors are dropped with zero coefficient") {
  rng::DetRng r(909);
  Matrix X(25, 3);
  for (std::size_t i = 0; i < 25; ++i) {
    X(i, 0) = r.next_normal();
    X(i, 1) = 7.0;  // constant
    X(i, 2) = r.next_normal();
  }
  std::vector<double> y(25);
  for (std::size_t i = 0; i < 25; ++i) y[i] = 2.0 * X(i, 0) + 0.1 * r.next_normal();

  EnetConfig cfg;
  cfg.alpha = 0.5;
  cfg.lambda = 0.5;
  EnetModel m = fit(X, y, cfg);
  REQUIRE(m.dropped_columns.size() == 1);
  CHECK(m.dropped_columns[0] == 1);
  CHECK(m.beta[1] == 0.0);
}

TEST_CASE("model JSON round-trips") {
  rng::DetRng r(111);
  const Matrix X = random_design(r, 30, 5);
  const std::vector<double> y = random_response(r, X, 0.5);
  EnetConfig cfg;
  cfg.alpha = 0.4;
  cfg.lambda = 1.25;
  EnetModel m = fit(X, y, cfg, {"c0", "c1", "c2", "c3", "c4"});

  const auto dir = std::filesystem::temp_directory_path() / "rsyield_enet_test";
  std::filesystem::create_directories(dir);
  const auto p = dir / "model.json";
  write_model_json(p, m);
  EnetModel back = read_model_json(p);

  CHECK(back.alpha == m.alpha);
  CHECK(back.lambda == m.lambda);
  CHECK(back.beta0 == m.beta0);
  CHECK(back.beta == m.beta);
  CHECK(back.column_names == m.column_names);
  CHECK(back.feature_means == m.feature_means);
  CHECK(back.feature_scales == m.feature_scales);
  CHECK(back.kkt_residual == m.kkt_residual);

  // Predictions from the reloaded model are identical.
  CHECK(back.predict(X) == m.predict(X));
}
