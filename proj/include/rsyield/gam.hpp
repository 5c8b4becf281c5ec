#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rsyield/features.hpp"
#include "rsyield/matrix.hpp"

// Additive model: intercept + linear terms in the 9 survey controls + one
// penalized cubic regression spline per dynamic covariate.  Each smooth uses
// rank-5 natural cubic splines on quantile knots with an integrated
// squared-second-derivative penalty, and is centered (its fitted values sum
// to zero over the training rows) so the intercept stays identifiable.  One
// shared smoothing parameter lambda_s multiplies every penalty; it is either
// supplied or chosen by generalized cross-validation.

namespace rsyield::gam {

using features::Dataset;

inline constexpr int kDefaultRank = 5;

struct SmoothBasis {
  enum class Kind { spline, linear, dropped };

  int w_index = 0;  // which of the 72 dynamic covariates
  Kind kind = Kind::spline;
  std::vector<double> knots;       // R distinct knot locations
  std::vector<double> m2;          // R x R: second derivatives of each cardinal spline
  std::vector<double> constraint;  // training-mean basis row (the centering constraint)
  std::vector<double> zbasis;      // R x (R-1): orthonormal null space of the constraint
  double center = 0.0;             // training mean, used by the linear fallback
  double scale = 1.0;              // population SD of the training values; the
                                   // roughness penalty is expressed per unit of
                                   // this scale so one smoothing level weights
                                   // differently scaled covariates uniformly

  int n_cols() const;
  // Raw cardinal natural-spline values b_1(x)..b_R(x); outside the knot range
  // the boundary segments extend linearly.
  void eval_cardinal(double x, double* out) const;
  // Constrained design row (n_cols values): cardinal row times the null-space
  // basis, or the centered value for a linear fallback.
  void eval_row(double x, double* out) const;
};

// Integrated squared second derivative of the natural interpolating spline,
// as a quadratic form on the values at the knots (R x R, row-major).
std::vector<double> penalty_matrix(std::span<const double> knots);

// Knots at evenly spaced quantiles of the distinct observed values.  Fewer
// than `rank` distinct values degrades the smooth to a centered linear term;
// a constant column is dropped (recorded with zero contribution).
SmoothBasis build_smooth_basis(std::span<const double> values, int w_index,
                               int rank = kDefaultRank);

struct GamSmoothFit {
  SmoothBasis basis;
  // One coefficient per knot for splines (already mapped through the
  // constraint null space), a single slope for linear fallbacks, empty for
  // dropped columns.
  std::vector<double> coefficients;

  double value(double x) const;  // the fitted smooth contribution f_j(x)
};

struct GamModel {
  double theta0 = 0.0;
  std::array<double, features::kNumControls> theta{};  // linear control coefficients
  std::vector<GamSmoothFit> smooths;                   // one per dynamic covariate
  double lambda_s = 0.0;
  std::vector<double> edf;  // effective degrees of freedom per smooth
  double edf_total = 0.0;
  double gcv = 0.0;
  std::vector<double> fitted;  // training-row fitted values
  std::vector<std::string> column_names;
};

struct GamFitOptions {
  std::optional<double> lambda_s;  // fixed value; unset selects by GCV
  int rank = kDefaultRank;
  std::vector<double> gcv_grid;  // defaults to a wide log-spaced grid
};

GamModel fit_gam(const Dataset& d, const GamFitOptions& opts = {});

double predict_gam(const GamModel& m, std::span<const double> x);
std::vector<double> predict_gam(const GamModel& m, const Matrix& X);

void write_model_json(const std::filesystem::path& path, const GamModel& m);

}  // namespace rsyield::gam
