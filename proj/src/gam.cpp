#include "rsyield/gam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "rsyield/csv.hpp"
#include "rsyield/errors.hpp"
#include "rsyield/timeseries.hpp"

namespace rsyield::gam {

using ordered_json = nlohmann::ordered_json;

std::vector<double> penalty_matrix(std::span<const double> knots) {
  const int r = static_cast<int>(knots.size());
  if (r < 3) throw ValidationError("penalty_matrix: need at least 3 knots");
  const int m = r - 2;
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(m, r);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    const double h0 = knots[i + 1] - knots[i];
    const double h1 = knots[i + 2] - knots[i + 1];
    D(i, i) = 1.0 / h0;
    D(i, i + 1) = -1.0 / h0 - 1.0 / h1;
    D(i, i + 2) = 1.0 / h1;
    B(i, i) = (h0 + h1) / 3.0;
    if (i + 1 < m) {
      B(i, i + 1) = h1 / 6.0;
      B(i + 1, i) = h1 / 6.0;
    }
  }
  const Eigen::MatrixXd S = D.transpose() * B.ldlt().solve(D);
  std::vector<double> out(static_cast<std::size_t>(r) * r);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < r; ++j) out[static_cast<std::size_t>(i) * r + j] = S(i, j);
  }
  return out;
}

int SmoothBasis::n_cols() const {
  switch (kind) {
    case Kind::spline: return static_cast<int>(knots.size()) - 1;
    case Kind::linear: return 1;
    case Kind::dropped: return 0;
  }
  return 0;
}

void SmoothBasis::eval_cardinal(double x, double* out) const {
  const int r = static_cast<int>(knots.size());
  const double lo = knots.front(), hi = knots.back();
  // Clamp into the knot range, then add the boundary-tangent correction for
  // points outside it: the natural spline continues as a straight line.
  double xc = x;
  double slope_scale = 0.0;
  int edge = -1;
  if (x < lo) {
    xc = lo;
    edge = 0;
    slope_scale = x - lo;
  } else if (x > hi) {
    xc = hi;
    edge = r - 2;
    slope_scale = x - hi;
  }

  int i = static_cast<int>(std::upper_bound(knots.begin(), knots.end(), xc) - knots.begin()) - 1;
  i = std::clamp(i, 0, r - 2);
  const double h = knots[i + 1] - knots[i];
  const double a = (knots[i + 1] - xc) / h;
  const double b = (xc - knots[i]) / h;
  const double ca = (a * a * a - a) * h * h / 6.0;
  const double cb = (b * b * b - b) * h * h / 6.0;
  for (int k = 0; k < r; ++k) {
    double v = ca * m2[static_cast<std::size_t>(i) * r + k] +
               cb * m2[static_cast<std::size_t>(i + 1) * r + k];
    if (k == i) v += a;
    if (k == i + 1) v += b;
    out[k] = v;
  }
  if (edge >= 0) {
    // d/dx at the boundary knot of cardinal k, natural-spline form.
    const double he = knots[edge + 1] - knots[edge];
    for (int k = 0; k < r; ++k) {
      const double yk0 = (k == edge) ? 1.0 : 0.0;
      const double yk1 = (k == edge + 1) ? 1.0 : 0.0;
      const double me0 = m2[static_cast<std::size_t>(edge) * r + k];
      const double me1 = m2[static_cast<std::size_t>(edge + 1) * r + k];
      double slope;
      if (x < lo) {
        slope = (yk1 - yk0) / he - he / 6.0 * (2.0 * me0 + me1);
      } else {
        slope = (yk1 - yk0) / he + he / 6.0 * (me0 + 2.0 * me1);
      }
      out[k] += slope_scale * slope;
    }
  }
}

void SmoothBasis::eval_row(double x, double* out) const {
  switch (kind) {
    case Kind::dropped: return;
    case Kind::linear: out[0] = x - center; return;
    case Kind::spline: {
      const int r = static_cast<int>(knots.size());
      std::vector<double> card(static_cast<std::size_t>(r));
      eval_cardinal(x, card.data());
      for (int c = 0; c < r - 1; ++c) {
        double v = 0.0;
        for (int k = 0; k < r; ++k) {
          v += card[static_cast<std::size_t>(k)] * zbasis[static_cast<std::size_t>(k) * (r - 1) + c];
        }
        out[c] = v;
      }
      return;
    }
  }
}

namespace {

// Orthonormal basis of the hyperplane orthogonal to v, via one Householder
// reflection mapping e1 onto v/|v|.
std::vector<double> null_space_basis(const std::vector<double>& v) {
  const int r = static_cast<int>(v.size());
  Eigen::VectorXd u(r);
  for (int i = 0; i < r; ++i) u(i) = v[static_cast<std::size_t>(i)];
  const double norm = u.norm();
  if (!(norm > 0.0)) throw NumericError("degenerate centering constraint");
  u /= norm;
  const double sign = u(0) >= 0.0 ? 1.0 : -1.0;
  u(0) += sign;
  const Eigen::MatrixXd H =
      Eigen::MatrixXd::Identity(r, r) - (2.0 / u.squaredNorm()) * (u * u.transpose());
  std::vector<double> z(static_cast<std::size_t>(r) * (r - 1));
  for (int i = 0; i < r; ++i) {
    for (int c = 0; c < r - 1; ++c) z[static_cast<std::size_t>(i) * (r - 1) + c] = H(i, c + 1);
  }
  return z;
}

}  // namespace

SmoothBasis build_smooth_basis(std::span<const double> values, int w_index, int rank) {
  if (rank < 3) throw ValidationError("build_smooth_basis: rank must be at least 3");
  if (values.empty()) throw ValidationError("build_smooth_basis: no values");
  SmoothBasis basis;
  basis.w_index = w_index;

  std::vector<double> distinct(values.begin(), values.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  const double mean =
      std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());

  if (distinct.size() < 2) {
    basis.kind = SmoothBasis::Kind::dropped;
    basis.center = mean;
    return basis;
  }
  if (distinct.size() < static_cast<std::size_t>(rank)) {
    basis.kind = SmoothBasis::Kind::linear;
    basis.center = mean;
    return basis;
  }

  basis.kind = SmoothBasis::Kind::spline;
  basis.center = mean;
  double var = 0.0;
  for (double x : values) var += (x - mean) * (x - mean);
  basis.scale = std::sqrt(var / static_cast<double>(values.size()));
  basis.knots.resize(static_cast<std::size_t>(rank));
  const std::size_t m = distinct.size();
  for (int k = 0; k < rank; ++k) {
    // Evenly spaced quantiles of the distinct values; ends at the extremes.
    const std::size_t pos = (static_cast<std::size_t>(k) * (m - 1) + (rank - 1) / 2) /
                            static_cast<std::size_t>(rank - 1);
    basis.knots[static_cast<std::size_t>(k)] = distinct[pos];
  }

  // Cardinal splines: one natural-spline solve per unit vector at the knots.
  const int r = rank;
  basis.m2.assign(static_cast<std::size_t>(r) * r, 0.0);
  std::vector<double> unit(static_cast<std::size_t>(r), 0.0);
  for (int k = 0; k < r; ++k) {
    unit.assign(static_cast<std::size_t>(r), 0.0);
    unit[static_cast<std::size_t>(k)] = 1.0;
    const std::vector<double> m2k =
        timeseries::natural_spline_second_derivatives(basis.knots, unit);
    for (int i = 0; i < r; ++i) basis.m2[static_cast<std::size_t>(i) * r + k] = m2k[static_cast<std::size_t>(i)];
  }

  // Centering constraint: the average basis row over the training values.
  basis.constraint.assign(static_cast<std::size_t>(r), 0.0);
  std::vector<double> card(static_cast<std::size_t>(r));
  for (double x : values) {
    basis.eval_cardinal(x, card.data());
    for (int k = 0; k < r; ++k) basis.constraint[static_cast<std::size_t>(k)] += card[static_cast<std::size_t>(k)];
  }
  for (int k = 0; k < r; ++k) basis.constraint[static_cast<std::size_t>(k)] /= static_cast<double>(values.size());

  basis.zbasis = null_space_basis(basis.constraint);
  return basis;
}

double GamSmoothFit::value(double x) const {
  switch (basis.kind) {
    case SmoothBasis::Kind::dropped: return 0.0;
    case SmoothBasis::Kind::linear: return coefficients[0] * (x - basis.center);
    case SmoothBasis::Kind::spline: {
      const int r = static_cast<int>(basis.knots.size());
      std::vector<double> card(static_cast<std::size_t>(r));
      basis.eval_cardinal(x, card.data());
      double v = 0.0;
      for (int k = 0; k < r; ++k) v += card[static_cast<std::size_t>(k)] * coefficients[static_cast<std::size_t>(k)];
      return v;
    }
  }
  return 0.0;
}

namespace {

struct Assembled {
  Eigen::MatrixXd X;                   // n x p full design
  std::vector<SmoothBasis> bases;      // one per dynamic covariate
  std::vector<int> offsets;            // column offset of each smooth block
  std::vector<Eigen::MatrixXd> roots;  // square roots of each block penalty
  std::vector<Eigen::MatrixXd> trans;  // per-block change of coordinates (see assemble)
  std::vector<double> ridge;           // identifiability ridge per smooth block
  int p = 0;
};

// The smoothing penalty is blind to the affine part of every smooth, and the
// lag construction makes those parts exactly dependent across smooths (each
// second-difference lag is a difference of first-difference lags), so the
// bare penalized system is structurally singular on real feature layouts.  A
// tiny fixed ridge on the smooth coefficients resolves the shared directions
// deterministically.  It is scaled per block; after column equilibration it
// lifts a dependent direction to ~sqrt(kIdentRidge), ten orders above the
// factorization noise floor, while shrinking identifiable directions by at
// most ~kIdentRidge relative — far below every fit tolerance.  The intercept
// and control columns stay unridged: degeneracy there is a caller error and
// still reports as singular.
constexpr double kIdentRidge = 1e-12;

Assembled assemble(const Dataset& d, int rank) {
  const std::size_t n = d.n();
  Assembled a;
  a.bases.reserve(features::kNumDynamic);
  a.offsets.resize(features::kNumDynamic);

  int p = 1 + features::kNumControls;
  for (int j = 0; j < features::kNumDynamic; ++j) {
    const std::vector<double> col = d.X.column(static_cast<std::size_t>(features::kNumControls + j));
    SmoothBasis basis = build_smooth_basis(col, j, rank);
    a.offsets[static_cast<std::size_t>(j)] = p;
    p += basis.n_cols();
    a.bases.push_back(std::move(basis));
  }
  a.p = p;

  // Natural coordinates per spline block: eigen-decompose the reduced penalty
  // E = Z'SZ and change basis so the penalty becomes exactly diag(0..0, 1..1).
  // The unpenalized (affine) directions then live in ordinary data columns
  // whose accuracy does not depend on lambda, while each penalized direction
  // owns a single sqrt(lambda) row.  Solving in the raw basis instead loses
  // ~lambda * machine-epsilon of accuracy, which is fatal in the collapse
  // regime.  S is scaled by scale^3 first: substituting x = center + scale*u
  // turns the raw curvature integral into scale^3 times the standardized one,
  // pricing curvature per unit of the covariate's own spread.  Without that
  // factor a wide-range covariate (hundreds of kelvin) is barely smoothed at
  // the same lambda that freezes a narrow one (unit-free vegetation index).
  for (int j = 0; j < features::kNumDynamic; ++j) {
    const SmoothBasis& basis = a.bases[static_cast<std::size_t>(j)];
    if (basis.kind != SmoothBasis::Kind::spline) {
      a.roots.emplace_back(0, 0);
      a.trans.emplace_back(0, 0);
      continue;
    }
    const int r = static_cast<int>(basis.knots.size());
    const std::vector<double> s = penalty_matrix(basis.knots);
    const double unit = std::pow(basis.scale, 3);
    Eigen::MatrixXd S(r, r);
    for (int i = 0; i < r; ++i) {
      for (int k = 0; k < r; ++k) S(i, k) = unit * s[static_cast<std::size_t>(i) * r + k];
    }
    Eigen::MatrixXd Z(r, r - 1);
    for (int i = 0; i < r; ++i) {
      for (int c = 0; c < r - 1; ++c) Z(i, c) = basis.zbasis[static_cast<std::size_t>(i) * (r - 1) + c];
    }
    const Eigen::MatrixXd E = Z.transpose() * S * Z;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(E);  // eigenvalues ascending
    const Eigen::VectorXd& ev = eig.eigenvalues();
    const double e_max = ev(ev.size() - 1);
    int n_null = 0;
    while (n_null < ev.size() && ev(n_null) <= 1e-9 * std::max(e_max, 0.0)) ++n_null;
    Eigen::MatrixXd T = eig.eigenvectors();
    for (int k = n_null; k < ev.size(); ++k) T.col(k) /= std::sqrt(ev(k));
    const Eigen::Index n_pen = ev.size() - n_null;
    Eigen::MatrixXd root = Eigen::MatrixXd::Zero(n_pen, ev.size());
    root.rightCols(n_pen).setIdentity();
    a.trans.push_back(std::move(T));
    a.roots.push_back(std::move(root));
  }

  a.X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), p);
  std::vector<double> row(static_cast<std::size_t>(rank));
  Eigen::VectorXd zrow(static_cast<Eigen::Index>(rank));
  for (std::size_t i = 0; i < n; ++i) {
    a.X(static_cast<Eigen::Index>(i), 0) = 1.0;
    for (int c = 0; c < features::kNumControls; ++c) {
      a.X(static_cast<Eigen::Index>(i), 1 + c) = d.X(i, static_cast<std::size_t>(c));
    }
    for (int j = 0; j < features::kNumDynamic; ++j) {
      const SmoothBasis& basis = a.bases[static_cast<std::size_t>(j)];
      const int cols = basis.n_cols();
      if (cols == 0) continue;
      basis.eval_row(d.X(i, static_cast<std::size_t>(features::kNumControls + j)), row.data());
      const int off = a.offsets[static_cast<std::size_t>(j)];
      if (basis.kind == SmoothBasis::Kind::spline) {
        for (int c = 0; c < cols; ++c) zrow(c) = row[static_cast<std::size_t>(c)];
        const Eigen::VectorXd t = a.trans[static_cast<std::size_t>(j)].transpose() * zrow.head(cols);
        for (int c = 0; c < cols; ++c) a.X(static_cast<Eigen::Index>(i), off + c) = t(c);
      } else {
        for (int c = 0; c < cols; ++c) {
          a.X(static_cast<Eigen::Index>(i), off + c) = row[static_cast<std::size_t>(c)];
        }
      }
    }
  }

  a.ridge.assign(features::kNumDynamic, 0.0);
  for (int j = 0; j < features::kNumDynamic; ++j) {
    const int cols = a.bases[static_cast<std::size_t>(j)].n_cols();
    if (cols == 0) continue;
    const int off = a.offsets[static_cast<std::size_t>(j)];
    const double mean_sq = a.X.middleCols(off, cols).squaredNorm() / cols;
    a.ridge[static_cast<std::size_t>(j)] = std::sqrt(kIdentRidge * mean_sq);
  }
  return a;
}

struct SolveResult {
  Eigen::VectorXd theta;
  double rss = 0.0;
  double edf_total = 0.0;
  std::vector<double> edf_smooth;
  double gcv = 0.0;
};

SolveResult solve_penalized(const Assembled& a, const Eigen::VectorXd& y, double lambda,
                            const std::vector<std::string>& column_names) {
  const Eigen::Index n = a.X.rows();
  Eigen::Index pen_rows = 0;
  for (const Eigen::MatrixXd& c : a.roots) pen_rows += c.rows();
  Eigen::Index ridge_rows = 0;
  for (const SmoothBasis& b : a.bases) ridge_rows += b.n_cols();

  Eigen::MatrixXd stacked = Eigen::MatrixXd::Zero(n + pen_rows + ridge_rows, a.p);
  stacked.topRows(n) = a.X;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(stacked.rows());
  rhs.head(n) = y;
  const double root_lambda = std::sqrt(lambda);
  Eigen::Index row = n;
  for (int j = 0; j < features::kNumDynamic; ++j) {
    const Eigen::MatrixXd& c = a.roots[static_cast<std::size_t>(j)];
    if (c.rows() == 0) continue;
    stacked.block(row, a.offsets[static_cast<std::size_t>(j)], c.rows(), c.cols()) = root_lambda * c;
    row += c.rows();
  }
  for (int j = 0; j < features::kNumDynamic; ++j) {
    const int cols = a.bases[static_cast<std::size_t>(j)].n_cols();
    const int off = a.offsets[static_cast<std::size_t>(j)];
    for (int c = 0; c < cols; ++c) stacked(row++, off + c) = a.ridge[static_cast<std::size_t>(j)];
  }

  // Column equilibration: with heavy smoothing the penalty rows dwarf the
  // data rows and the raw factorization loses ~cond*eps in the fit.  Unit
  // column norms keep the QR accurate across the whole lambda range and make
  // the rank check below scale-invariant.
  Eigen::VectorXd colnorm(a.p);
  for (int k = 0; k < a.p; ++k) {
    const double nk = stacked.col(k).norm();
    colnorm(k) = nk > 0.0 ? nk : 1.0;
    stacked.col(k) /= colnorm(k);
  }

  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(stacked);
  const Eigen::MatrixXd& qrm = qr.matrixQR();
  double max_diag = 0.0, min_diag = std::numeric_limits<double>::infinity();
  int min_col = 0;
  for (int k = 0; k < a.p; ++k) {
    const double dk = std::abs(qrm(k, k));
    max_diag = std::max(max_diag, dk);
    if (dk < min_diag) {
      min_diag = dk;
      min_col = k;
    }
  }
  if (!(min_diag > 1e-10 * max_diag)) {
    std::ostringstream os;
    os << "singular penalized system (column " << min_col;
    if (min_col == 0) {
      os << ", intercept";
    } else if (min_col <= features::kNumControls) {
      os << ", control '" << column_names[static_cast<std::size_t>(min_col - 1)] << "'";
    } else {
      for (int j = 0; j < features::kNumDynamic; ++j) {
        const int off = a.offsets[static_cast<std::size_t>(j)];
        if (min_col >= off && min_col < off + a.bases[static_cast<std::size_t>(j)].n_cols()) {
          os << ", smooth '"
             << column_names[static_cast<std::size_t>(features::kNumControls + j)] << "'";
          break;
        }
      }
    }
    os << ")";
    throw NumericError(os.str());
  }

  SolveResult res;
  res.theta = qr.solve(rhs).cwiseQuotient(colnorm);

  const Eigen::VectorXd fitted = a.X * res.theta;
  res.rss = (y - fitted).squaredNorm();

  // Effective degrees of freedom: diagonal of (X'X + lambda S)^{-1} X'X.
  // The factor R belongs to the equilibrated system A D^{-1} = Q R, so
  // (A'A)^{-1} = D^{-1} (R'R)^{-1} D^{-1} and the scaling re-enters on both
  // sides of the triangular solves.
  const Eigen::MatrixXd R = qrm.topRows(a.p).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd xtx = a.X.transpose() * a.X;
  const Eigen::MatrixXd scaled = colnorm.cwiseInverse().asDiagonal() * xtx;  // D^-1 X'X
  const Eigen::MatrixXd tmp =
      R.triangularView<Eigen::Upper>().transpose().solve(scaled);  // R^-T D^-1 X'X
  const Eigen::MatrixXd G =
      colnorm.cwiseInverse().asDiagonal() *
      R.triangularView<Eigen::Upper>().solve(tmp);  // D^-1 (R'R)^-1 D^-1 X'X
  res.edf_total = G.trace();
  res.edf_smooth.assign(features::kNumDynamic, 0.0);
  for (int j = 0; j < features::kNumDynamic; ++j) {
    const int off = a.offsets[static_cast<std::size_t>(j)];
    for (int c = 0; c < a.bases[static_cast<std::size_t>(j)].n_cols(); ++c) {
      res.edf_smooth[static_cast<std::size_t>(j)] += G(off + c, off + c);
    }
  }

  const double denom = static_cast<double>(n) - res.edf_total;
  if (!(denom > 0.0)) {
    throw NumericError("GCV undefined: effective degrees of freedom exhaust the sample");
  }
  res.gcv = static_cast<double>(n) * res.rss / (denom * denom);
  return res;
}

std::vector<double> default_gcv_grid() {
  std::vector<double> grid;
  for (int k = 0; k <= 24; ++k) grid.push_back(std::pow(10.0, -4.0 + 0.5 * k));
  return grid;
}

}  // namespace

GamModel fit_gam(const Dataset& d, const GamFitOptions& opts) {
  if (d.n() < 30) throw ValidationError("fit_gam: need at least 30 rows");
  if (d.X.cols != features::kNumCovariates) {
    throw ValidationError("fit_gam: dataset must have the full covariate layout");
  }

  const Assembled a = assemble(d, opts.rank);
  Eigen::VectorXd y(static_cast<Eigen::Index>(d.n()));
  for (std::size_t i = 0; i < d.n(); ++i) y(static_cast<Eigen::Index>(i)) = d.y[i];

  double lambda;
  SolveResult chosen;
  if (opts.lambda_s) {
    lambda = *opts.lambda_s;
    if (!(lambda >= 0.0)) throw ValidationError("fit_gam: lambda_s must be non-negative");
    chosen = solve_penalized(a, y, lambda, d.columns);
  } else {
    const std::vector<double> grid = opts.gcv_grid.empty() ? default_gcv_grid() : opts.gcv_grid;
    bool have = false;
    lambda = grid.front();
    std::optional<NumericError> first_failure;
    for (double cand : grid) {
      SolveResult res;
      try {
        res = solve_penalized(a, y, cand, d.columns);
      } catch (const NumericError& e) {
        // A grid point can be individually hopeless (degrees of freedom
        // exhaust the sample at very small lambda); the scan goes on.
        if (!first_failure) first_failure = e;
        continue;
      }
      // Strict improvement keeps the lowest lambda on exact GCV ties because
      // the grid is scanned in ascending order.
      if (!have || res.gcv < chosen.gcv) {
        chosen = std::move(res);
        lambda = cand;
        have = true;
      }
    }
    if (!have) throw *first_failure;
  }

  GamModel m;
  m.lambda_s = lambda;
  m.column_names = d.columns;
  m.theta0 = chosen.theta(0);
  for (int c = 0; c < features::kNumControls; ++c) m.theta[static_cast<std::size_t>(c)] = chosen.theta(1 + c);
  m.smooths.reserve(features::kNumDynamic);
  for (int j = 0; j < features::kNumDynamic; ++j) {
    GamSmoothFit fit;
    fit.basis = a.bases[static_cast<std::size_t>(j)];
    const int off = a.offsets[static_cast<std::size_t>(j)];
    const int cols = fit.basis.n_cols();
    if (fit.basis.kind == SmoothBasis::Kind::spline) {
      // Undo the natural-coordinate change, then map the constrained
      // coefficients back to one weight per knot.
      const int r = static_cast<int>(fit.basis.knots.size());
      const Eigen::VectorXd w =
          a.trans[static_cast<std::size_t>(j)] * chosen.theta.segment(off, cols);
      fit.coefficients.assign(static_cast<std::size_t>(r), 0.0);
      for (int i = 0; i < r; ++i) {
        double v = 0.0;
        for (int c = 0; c < cols; ++c) {
          v += fit.basis.zbasis[static_cast<std::size_t>(i) * (r - 1) + c] * w(c);
        }
        fit.coefficients[static_cast<std::size_t>(i)] = v;
      }
    } else if (fit.basis.kind == SmoothBasis::Kind::linear) {
      fit.coefficients.assign(1, chosen.theta(off));
    }
    m.smooths.push_back(std::move(fit));
  }
  m.edf = chosen.edf_smooth;
  m.edf_total = chosen.edf_total;
  m.gcv = chosen.gcv;
  const Eigen::VectorXd fitted = a.X * chosen.theta;
  m.fitted.assign(fitted.data(), fitted.data() + fitted.size());
  return m;
}

double predict_gam(const GamModel& m, std::span<const double> x) {
  if (x.size() != features::kNumCovariates) {
    throw ValidationError("predict_gam: feature count mismatch");
  }
  double v = m.theta0;
  for (int c = 0; c < features::kNumControls; ++c) v += m.theta[static_cast<std::size_t>(c)] * x[static_cast<std::size_t>(c)];
  for (int j = 0; j < features::kNumDynamic; ++j) {
    v += m.smooths[static_cast<std::size_t>(j)].value(x[static_cast<std::size_t>(features::kNumControls + j)]);
  }
  return v;
}

std::vector<double> predict_gam(const GamModel& m, const Matrix& X) {
  if (X.cols != features::kNumCovariates) {
    throw ValidationError("predict_gam: feature count mismatch");
  }
  std::vector<double> out(X.rows);
  for (std::size_t i = 0; i < X.rows; ++i) {
    out[i] = predict_gam(m, std::span<const double>(X.row(i), X.cols));
  }
  return out;
}

void write_model_json(const std::filesystem::path& path, const GamModel& m) {
  ordered_json j;
  j["model"] = "gam";
  j["theta0"] = m.theta0;
  j["theta"] = std::vector<double>(m.theta.begin(), m.theta.end());
  j["lambda_s"] = m.lambda_s;
  j["gcv"] = m.gcv;
  j["edf_total"] = m.edf_total;
  ordered_json smooths = ordered_json::array();
  for (std::size_t k = 0; k < m.smooths.size(); ++k) {
    const GamSmoothFit& s = m.smooths[k];
    ordered_json sj;
    sj["column"] = m.column_names.empty()
                       ? std::to_string(k)
                       : m.column_names[features::kNumControls + k];
    switch (s.basis.kind) {
      case SmoothBasis::Kind::spline: sj["kind"] = "spline"; break;
      case SmoothBasis::Kind::linear: sj["kind"] = "linear"; break;
      case SmoothBasis::Kind::dropped: sj["kind"] = "dropped"; break;
    }
    sj["knots"] = s.basis.knots;
    sj["coefficients"] = s.coefficients;
    sj["constraint"] = s.basis.constraint;
    sj["center"] = s.basis.center;
    sj["edf"] = m.edf[k];
    smooths.push_back(std::move(sj));
  }
  j["smooths"] = std::move(smooths);
  csv::write_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace rsyield::gam
