#include "rsyield/elasticnet.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rsyield/csv.hpp"

namespace rsyield::elasticnet {

using ordered_json = nlohmann::ordered_json;

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Centered (and optionally unit-variance) copy of the problem.  Kept column
// major: coordinate descent walks one predictor at a time.
struct Standardized {
  std::size_t n = 0, p = 0;
  std::vector<std::vector<double>> cols;
  std::vector<double> means;
  std::vector<double> scales;   // 1.0 everywhere when scaling is off
  std::vector<double> col_sq;   // sum of squares of each working column
  std::vector<char> dropped;    // constant predictors
  double y_mean = 0.0;
  std::vector<double> yc;
};

Standardized standardize_problem(const Matrix& X, const std::vector<double>& y, bool scale) {
  if (X.rows != y.size()) throw ValidationError("fit: X row count does not match y");
  if (X.rows == 0) throw ValidationError("fit: empty design");
  Standardized s;
  s.n = X.rows;
  s.p = X.cols;
  s.means.resize(s.p);
  s.scales.assign(s.p, 1.0);
  s.col_sq.assign(s.p, 0.0);
  s.dropped.assign(s.p, 0);
  s.cols.assign(s.p, {});

  s.y_mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(s.n);
  s.yc.resize(s.n);
  for (std::size_t i = 0; i < s.n; ++i) s.yc[i] = y[i] - s.y_mean;

  for (std::size_t j = 0; j < s.p; ++j) {
    std::vector<double>& col = s.cols[j];
    col.resize(s.n);
    bool constant = true;
    for (std::size_t i = 0; i < s.n; ++i) {
      col[i] = X(i, j);
      constant = constant && col[i] == col[0];
    }
    const double mean = std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(s.n);
    s.means[j] = mean;
    if (constant) {
      s.dropped[j] = 1;
      std::fill(col.begin(), col.end(), 0.0);
      continue;
    }
    double ss = 0.0;
    for (std::size_t i = 0; i < s.n; ++i) {
      col[i] -= mean;
      ss += col[i] * col[i];
    }
    const double sd = std::sqrt(ss / static_cast<double>(s.n));
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
      s.dropped[j] = 1;
      std::fill(col.begin(), col.end(), 0.0);
      continue;
    }
    if (scale) {
      s.scales[j] = sd;
      ss = 0.0;
      for (std::size_t i = 0; i < s.n; ++i) {
        col[i] /= sd;
        ss += col[i] * col[i];
      }
    }
    s.col_sq[j] = ss;
  }
  return s;
}

double objective(const Standardized& s, const std::vector<double>& r,
                 const std::vector<double>& b, double lambda, double alpha) {
  double rss = 0.0;
  for (double v : r) rss += v * v;
  double l1 = 0.0, l2 = 0.0;
  for (double v : b) {
    l1 += std::abs(v);
    l2 += v * v;
  }
  return 0.5 * rss + lambda * (0.5 * (1.0 - alpha) * l2 + alpha * l1);
}

// Stationarity violation on the working (standardized) problem.
double kkt_internal(const Standardized& s, const std::vector<double>& r,
                    const std::vector<double>& b, double lambda, double alpha) {
  double worst = std::abs(std::accumulate(r.begin(), r.end(), 0.0));  // intercept coordinate
  const double t = lambda * alpha;
  for (std::size_t j = 0; j < s.p; ++j) {
    if (s.dropped[j]) continue;
    const double g = dot(s.cols[j], r);
    double v;
    if (b[j] != 0.0) {
      v = std::abs(g - lambda * (1.0 - alpha) * b[j] - t * (b[j] > 0.0 ? 1.0 : -1.0));
    } else {
      v = std::max(0.0, std::abs(g) - t);
    }
    worst = std::max(worst, v);
  }
  return worst;
}

EnetModel finish_model(const Standardized& s, const std::vector<double>& b,
                       const std::vector<double>& r, const EnetConfig& cfg, int sweeps,
                       std::vector<std::string> column_names) {
  EnetModel m;
  m.alpha = cfg.alpha;
  m.lambda = cfg.lambda;
  m.standardized = cfg.standardize;
  m.feature_means = s.means;
  m.feature_scales = s.scales;
  m.n_sweeps = sweeps;
  m.beta.resize(s.p);
  double intercept = s.y_mean;
  for (std::size_t j = 0; j < s.p; ++j) {
    if (s.dropped[j]) {
      m.dropped_columns.push_back(static_cast<int>(j));
      m.beta[j] = 0.0;
      continue;
    }
    m.beta[j] = b[j] / s.scales[j];
    intercept -= s.means[j] * m.beta[j];
  }
  m.beta0 = intercept;
  m.kkt_residual = kkt_internal(s, r, b, cfg.lambda, cfg.alpha);
  m.column_names = std::move(column_names);
  return m;
}

// Core solver on a pre-standardized problem.  `b` holds the warm start on
// entry and the solution on exit.
EnetModel fit_standardized(const Standardized& s, const EnetConfig& cfg, std::vector<double>& b,
                           std::vector<std::string> column_names) {
  if (cfg.alpha < 0.0 || cfg.alpha > 1.0) throw ValidationError("fit: alpha must be in [0, 1]");
  if (cfg.lambda < 0.0) throw ValidationError("fit: lambda must be non-negative");
  if (cfg.tol <= 0.0) throw ValidationError("fit: tol must be positive");

  const double t = cfg.lambda * cfg.alpha;             // soft-threshold level
  const double ridge = cfg.lambda * (1.0 - cfg.alpha); // quadratic shrinkage

  std::vector<double> r = s.yc;
  for (std::size_t j = 0; j < s.p; ++j) {
    if (s.dropped[j]) b[j] = 0.0;
    if (b[j] == 0.0) continue;
    const std::vector<double>& col = s.cols[j];
    for (std::size_t i = 0; i < s.n; ++i) r[i] -= col[i] * b[j];
  }

  // Absolute tolerances inherit the scale of the unnormalized objective, so
  // give the stationarity target a round-off floor tied to the problem size.
  double grad_scale = cfg.lambda;
  for (std::size_t j = 0; j < s.p; ++j) {
    if (!s.dropped[j]) grad_scale = std::max(grad_scale, std::abs(dot(s.cols[j], s.yc)));
  }
  const double kkt_target = std::max(10.0 * cfg.tol, 1e-12 * grad_scale);

#ifndef NDEBUG
  double prev_obj = objective(s, r, b, cfg.lambda, cfg.alpha);
#endif

  int sweeps = 0;
  while (sweeps < cfg.max_sweeps) {
    ++sweeps;
    double max_delta = 0.0;
    for (std::size_t j = 0; j < s.p; ++j) {
      if (s.dropped[j]) continue;
      const std::vector<double>& col = s.cols[j];
      const double old = b[j];
      const double rho = dot(col, r) + s.col_sq[j] * old;
      const double next = soft_threshold(rho, t) / (s.col_sq[j] + ridge);
      if (next != old) {
        const double delta = next - old;
        for (std::size_t i = 0; i < s.n; ++i) r[i] -= col[i] * delta;
        b[j] = next;
        max_delta = std::max(max_delta, std::abs(delta));
      }
    }
#ifndef NDEBUG
    {
      const double obj = objective(s, r, b, cfg.lambda, cfg.alpha);
      assert(obj <= prev_obj * (1.0 + 1e-12) + 1e-12 && "coordinate sweep increased objective");
      prev_obj = obj;
    }
#endif
    if (max_delta <= cfg.tol &&
        kkt_internal(s, r, b, cfg.lambda, cfg.alpha) <= kkt_target) {
      return finish_model(s, b, r, cfg, sweeps, std::move(column_names));
    }
  }

  EnetModel partial = finish_model(s, b, r, cfg, sweeps, std::move(column_names));
  std::ostringstream os;
  os << "coordinate descent did not converge in " << cfg.max_sweeps
     << " sweeps (kkt_residual=" << partial.kkt_residual << ", target=" << kkt_target << ")";
  throw EnetConvergenceError(os.str(), std::move(partial));
}

}  // namespace

EnetModel fit(const Matrix& X, const std::vector<double>& y, const EnetConfig& cfg,
              std::vector<std::string> column_names) {
  if (!column_names.empty() && column_names.size() != X.cols) {
    throw ValidationError("fit: column_names length does not match design width");
  }
  const Standardized s = standardize_problem(X, y, cfg.standardize);
  std::vector<double> b(s.p, 0.0);
  return fit_standardized(s, cfg, b, std::move(column_names));
}

std::vector<double> lambda_path(const Matrix& X, const std::vector<double>& y, double alpha,
                                int n_lambdas, double ratio, bool standardize) {
  if (!(alpha > 0.0)) {
    throw ValidationError("lambda_path: alpha must be positive (the path is unbounded at 0)");
  }
  if (n_lambdas < 2) throw ValidationError("lambda_path: need at least 2 grid points");
  if (!(ratio > 0.0 && ratio < 1.0)) throw ValidationError("lambda_path: ratio must be in (0, 1)");
  const Standardized s = standardize_problem(X, y, standardize);
  double top = 0.0;
  for (std::size_t j = 0; j < s.p; ++j) {
    if (!s.dropped[j]) top = std::max(top, std::abs(dot(s.cols[j], s.yc)));
  }
  if (top == 0.0) {
    throw ValidationError("lambda_path: response or predictors have no variation");
  }
  // Nudge the quotient up until lambda_max * alpha >= top holds in floating
  // point, so a fit at the head of the path provably zeroes every coefficient.
  double lambda_max = top / alpha;
  while (lambda_max * alpha < top) {
    lambda_max = std::nextafter(lambda_max, std::numeric_limits<double>::infinity());
  }
  std::vector<double> grid(n_lambdas);
  const double log_max = std::log(lambda_max);
  const double step = std::log(ratio) / static_cast<double>(n_lambdas - 1);
  for (int k = 0; k < n_lambdas; ++k) {
    grid[k] = std::exp(log_max + step * static_cast<double>(k));
  }
  grid[0] = lambda_max;  // exact at the top of the path
  return grid;
}

std::vector<EnetModel> fit_path(const Matrix& X, const std::vector<double>& y,
                                const std::vector<double>& lambdas, const EnetConfig& cfg,
                                std::vector<std::string> column_names) {
  for (std::size_t k = 1; k < lambdas.size(); ++k) {
    if (lambdas[k] > lambdas[k - 1]) {
      throw ValidationError("fit_path: lambdas must be non-increasing for warm starts");
    }
  }
  const Standardized s = standardize_problem(X, y, cfg.standardize);
  std::vector<EnetModel> models;
  models.reserve(lambdas.size());
  std::vector<double> b(s.p, 0.0);
  for (double lambda : lambdas) {
    EnetConfig step = cfg;
    step.lambda = lambda;
    models.push_back(fit_standardized(s, step, b, column_names));
  }
  return models;
}

std::vector<double> EnetModel::beta_internal() const {
  std::vector<double> out(beta.size());
  for (std::size_t j = 0; j < beta.size(); ++j) out[j] = beta[j] * feature_scales[j];
  return out;
}

double EnetModel::predict_row(const double* x) const {
  double v = beta0;
  for (std::size_t j = 0; j < beta.size(); ++j) v += x[j] * beta[j];
  return v;
}

std::vector<double> EnetModel::predict(const Matrix& X) const {
  if (X.cols != beta.size()) throw ValidationError("predict: feature count mismatch");
  std::vector<double> out(X.rows);
  for (std::size_t i = 0; i < X.rows; ++i) out[i] = predict_row(X.row(i));
  return out;
}

double kkt_residual(const EnetModel& m, const Matrix& X, const std::vector<double>& y) {
  if (X.cols != m.beta.size()) throw ValidationError("kkt_residual: feature count mismatch");
  if (X.rows != y.size()) throw ValidationError("kkt_residual: X row count does not match y");
  const std::size_t n = X.rows, p = X.cols;
  // The raw-scale residual equals the working-scale residual, so it can be
  // formed directly from the reported coefficients.
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = y[i] - m.predict_row(X.row(i));

  double worst = std::abs(std::accumulate(r.begin(), r.end(), 0.0));
  const double t = m.lambda * m.alpha;
  std::vector<char> dropped(p, 0);
  for (int j : m.dropped_columns) dropped[static_cast<std::size_t>(j)] = 1;
  for (std::size_t j = 0; j < p; ++j) {
    if (dropped[j]) continue;
    double g = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      g += (X(i, j) - m.feature_means[j]) / m.feature_scales[j] * r[i];
    }
    const double bj = m.beta[j] * m.feature_scales[j];
    double v;
    if (bj != 0.0) {
      v = std::abs(g - m.lambda * (1.0 - m.alpha) * bj - t * (bj > 0.0 ? 1.0 : -1.0));
    } else {
      v = std::max(0.0, std::abs(g) - t);
    }
    worst = std::max(worst, v);
  }
  return worst;
}

void write_model_json(const std::filesystem::path& path, const EnetModel& m) {
  ordered_json j;
  j["model"] = "enet";
  j["alpha"] = m.alpha;
  j["lambda"] = m.lambda;
  j["beta0"] = m.beta0;
  j["beta"] = m.beta;
  j["column_names"] = m.column_names;
  j["kkt_residual"] = m.kkt_residual;
  j["standardize"] = m.standardized;
  j["feature_means"] = m.feature_means;
  j["feature_scales"] = m.feature_scales;
  j["dropped_columns"] = m.dropped_columns;
  j["n_sweeps"] = m.n_sweeps;
  csv::write_file_atomic(path, j.dump(2) + "\n");
}

EnetModel read_model_json(const std::filesystem::path& path) {
  const std::vector<std::string> lines = csv::read_lines(path);
  std::string text;
  for (const std::string& l : lines) text += l + "\n";
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw ValidationError(path.string() + ": invalid JSON: " + e.what());
  }
  if (!j.contains("model") || j["model"] != "enet") {
    throw ValidationError(path.string() + ": not an elastic-net model file");
  }
  EnetModel m;
  try {
    m.alpha = j.at("alpha").get<double>();
    m.lambda = j.at("lambda").get<double>();
    m.beta0 = j.at("beta0").get<double>();
    m.beta = j.at("beta").get<std::vector<double>>();
    m.column_names = j.at("column_names").get<std::vector<std::string>>();
    m.kkt_residual = j.at("kkt_residual").get<double>();
    m.standardized = j.at("standardize").get<bool>();
    m.feature_means = j.at("feature_means").get<std::vector<double>>();
    m.feature_scales = j.at("feature_scales").get<std::vector<double>>();
    m.dropped_columns = j.at("dropped_columns").get<std::vector<int>>();
    m.n_sweeps = j.at("n_sweeps").get<int>();
  } catch (const std::exception& e) {
    throw ValidationError(path.string() + ": missing or malformed field: " + e.what());
  }
  if (m.beta.size() != m.column_names.size() || m.beta.size() != m.feature_means.size() ||
      m.beta.size() != m.feature_scales.size()) {
    throw ValidationError(path.string() + ": inconsistent coefficient arrays");
  }
  return m;
}

}  // namespace rsyield::elasticnet
