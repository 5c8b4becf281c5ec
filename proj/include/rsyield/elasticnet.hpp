#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rsyield/errors.hpp"
#include "rsyield/matrix.hpp"

// Elastic-net linear regression fitted by cyclic coordinate descent.  The
// objective, with residual sums left unnormalized (no 1/N factor), is
//
//   (1/2) sum_i (y_i - beta0 - x_i . beta)^2
//     + lambda * ( (1-alpha)/2 * ||beta||_2^2 + alpha * ||beta||_1 )
//
// The intercept is never penalized.  By default predictors are centered and
// scaled to unit variance internally and coefficients are reported back in
// raw units; the penalty then acts on the standardized scale.

namespace rsyield::elasticnet {

struct EnetConfig {
  double alpha = 0.02;      // 1 = lasso, 0 = ridge
  double lambda = 0.0;
  double tol = 1e-7;        // convergence tolerance on max coefficient change
  int max_sweeps = 10000;
  bool standardize = true;  // unit-variance scaling of predictors
};

struct EnetModel {
  double alpha = 0.0;
  double lambda = 0.0;
  double beta0 = 0.0;
  std::vector<double> beta;  // raw units
  std::vector<std::string> column_names;
  double kkt_residual = 0.0;
  bool standardized = true;
  std::vector<double> feature_means;
  std::vector<double> feature_scales;  // all ones when standardized == false
  std::vector<int> dropped_columns;    // constant predictors, coefficient pinned to 0
  int n_sweeps = 0;

  // Coefficients on the scale the solver worked in (beta[j] * feature_scales[j]).
  std::vector<double> beta_internal() const;
  double predict_row(const double* x) const;
  std::vector<double> predict(const Matrix& X) const;
};

class EnetConvergenceError : public NumericError {
 public:
  EnetConvergenceError(std::string msg, EnetModel last)
      : NumericError(std::move(msg)), last_iterate(std::move(last)) {}
  EnetModel last_iterate;
};

// sign(v) * max(|v| - t, 0)
double soft_threshold(double v, double t);

EnetModel fit(const Matrix& X, const std::vector<double>& y, const EnetConfig& cfg,
              std::vector<std::string> column_names = {});

// Log-uniform grid of n_lambdas values descending from the smallest lambda
// that zeroes every coefficient down to ratio times it.  alpha must be > 0.
std::vector<double> lambda_path(const Matrix& X, const std::vector<double>& y, double alpha,
                                int n_lambdas = 100, double ratio = 1e-4,
                                bool standardize = true);

// Fits the whole descending path, warm-starting each value from the previous
// solution.  `lambdas` must be non-increasing.
std::vector<EnetModel> fit_path(const Matrix& X, const std::vector<double>& y,
                                const std::vector<double>& lambdas, const EnetConfig& cfg,
                                std::vector<std::string> column_names = {});

// Max violation of the stationarity conditions of the fitted objective,
// evaluated on the scale the solver worked in.  Zero at an exact optimum.
double kkt_residual(const EnetModel& m, const Matrix& X, const std::vector<double>& y);

void write_model_json(const std::filesystem::path& path, const EnetModel& m);
EnetModel read_model_json(const std::filesystem::path& path);

}  // namespace rsyield::elasticnet
