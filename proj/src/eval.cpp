#include "rsyield/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "rsyield/csv.hpp"
#include "rsyield/errors.hpp"
#include "rsyield/rng.hpp"

namespace rsyield::eval {

using ordered_json = nlohmann::ordered_json;

std::vector<std::vector<int>> kfold_split(int n, int k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("kfold_split: k must be at least 2");
  if (k > n) throw ValidationError("kfold_split: k exceeds the number of rows");
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  rng::DetRng r(seed);
  r.shuffle(perm);
  // Round-robin assignment keeps fold sizes within one of each other.
  std::vector<std::vector<int>> folds(static_cast<std::size_t>(k));
  for (int i = 0; i < n; ++i) {
    folds[static_cast<std::size_t>(i % k)].push_back(perm[static_cast<std::size_t>(i)]);
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

SplitIndices train_test_split(int n, double ratio, std::uint64_t seed) {
  if (n < 2) throw ValidationError("train_test_split: need at least 2 rows");
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw ValidationError("train_test_split: ratio must be in (0, 1)");
  }
  const int n_train = static_cast<int>(std::ceil(ratio * static_cast<double>(n)));
  if (n_train >= n) throw ValidationError("train_test_split: ratio leaves no test rows");
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  rng::DetRng r(seed);
  r.shuffle(perm);
  SplitIndices out;
  out.train.assign(perm.begin(), perm.begin() + n_train);
  out.test.assign(perm.begin() + n_train, perm.end());
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

double mse(std::span<const double> y, std::span<const double> predicted) {
  if (y.size() != predicted.size()) throw ValidationError("mse: length mismatch");
  if (y.empty()) throw ValidationError("mse: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double e = y[i] - predicted[i];
    s += e * e;
  }
  return s / static_cast<double>(y.size());
}

Matrix take_rows(const Matrix& X, std::span<const int> rows) {
  Matrix out(rows.size(), X.cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double* src = X.row(static_cast<std::size_t>(rows[i]));
    std::copy(src, src + X.cols, out.row(i));
  }
  return out;
}

std::vector<double> take(std::span<const double> v, std::span<const int> rows) {
  std::vector<double> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = v[static_cast<std::size_t>(rows[i])];
  return out;
}

namespace {

void check_folds(std::size_t n, const std::vector<std::vector<int>>& folds) {
  if (folds.size() < 2) throw ValidationError("cv_curve: need at least 2 folds");
  std::vector<char> seen(n, 0);
  for (const auto& f : folds) {
    for (int i : f) {
      if (i < 0 || static_cast<std::size_t>(i) >= n || seen[static_cast<std::size_t>(i)]) {
        throw ValidationError("cv_curve: folds are not a partition of the rows");
      }
      seen[static_cast<std::size_t>(i)] = 1;
    }
  }
  for (char c : seen) {
    if (!c) throw ValidationError("cv_curve: folds are not a partition of the rows");
  }
}

// Runs fn(fold_index) over the folds with at most `threads` workers; results
// land in per-fold slots so scheduling never changes the output.
void for_each_fold(std::size_t n_folds, int threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n_folds < 2) {
    for (std::size_t f = 0; f < n_folds; ++f) fn(f);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n_folds);
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t f = next.fetch_add(1);
        if (f >= n_folds) return;
        fn(f);
      }
    });
  }
  for (std::thread& t : pool) t.join();
}

CvCurve summarize(std::vector<double> grid, const std::vector<std::vector<double>>& fold_mse,
                  int k, std::uint64_t seed) {
  CvCurve curve;
  curve.grid = std::move(grid);
  curve.k = k;
  curve.seed = seed;
  const std::size_t g = curve.grid.size();
  curve.mean_mse.resize(g);
  curve.stderr_mse.resize(g);
  for (std::size_t i = 0; i < g; ++i) {
    double mean = 0.0;
    for (const auto& fm : fold_mse) mean += fm[i];
    mean /= static_cast<double>(fold_mse.size());
    double var = 0.0;
    for (const auto& fm : fold_mse) {
      const double d = fm[i] - mean;
      var += d * d;
    }
    var /= static_cast<double>(fold_mse.size() - 1);
    curve.mean_mse[i] = mean;
    curve.stderr_mse[i] = std::sqrt(var / static_cast<double>(fold_mse.size()));
  }
  return curve;
}

}  // namespace

CvCurve cv_curve_enet_folds(const Matrix& X, const std::vector<double>& y, double alpha,
                            const std::vector<double>& grid,
                            const std::vector<std::vector<int>>& folds,
                            const elasticnet::EnetConfig& base, int n_threads) {
  if (grid.empty()) throw ValidationError("cv_curve: empty grid");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (grid[i] > grid[i - 1]) {
      throw ValidationError("cv_curve: lambda grid must be non-increasing");
    }
  }
  check_folds(X.rows, folds);

  const std::size_t n = X.rows;
  std::vector<std::vector<double>> fold_mse(folds.size(),
                                            std::vector<double>(grid.size(), 0.0));
  for_each_fold(folds.size(), n_threads, [&](std::size_t f) {
    const std::vector<int>& holdout = folds[f];
    std::vector<char> in_holdout(n, 0);
    for (int i : holdout) in_holdout[static_cast<std::size_t>(i)] = 1;
    std::vector<int> train_rows;
    train_rows.reserve(n - holdout.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_holdout[i]) train_rows.push_back(static_cast<int>(i));
    }
    const Matrix x_train = take_rows(X, train_rows);
    const std::vector<double> y_train = take(y, train_rows);
    const Matrix x_val = take_rows(X, holdout);
    const std::vector<double> y_val = take(y, holdout);

    elasticnet::EnetConfig cfg = base;
    cfg.alpha = alpha;
    const std::vector<elasticnet::EnetModel> path =
        elasticnet::fit_path(x_train, y_train, grid, cfg);
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
      fold_mse[f][gi] = mse(y_val, path[gi].predict(x_val));
    }
  });
  return summarize(grid, fold_mse, static_cast<int>(folds.size()), 0);
}

CvCurve cv_curve_enet(const Matrix& X, const std::vector<double>& y, double alpha,
                      const std::vector<double>& grid, int k, std::uint64_t seed,
                      const elasticnet::EnetConfig& base, int n_threads) {
  const auto folds = kfold_split(static_cast<int>(X.rows), k, seed);
  CvCurve curve = cv_curve_enet_folds(X, y, alpha, grid, folds, base, n_threads);
  curve.seed = seed;
  return curve;
}

CvCurve cv_curve_gbt_rounds(const Matrix& X, const std::vector<double>& y,
                            const gbt::GbtConfig& cfg, const std::vector<int>& rounds, int k,
                            std::uint64_t seed, int n_threads) {
  if (rounds.empty()) throw ValidationError("cv_curve: empty rounds grid");
  for (std::size_t i = 1; i < rounds.size(); ++i) {
    if (rounds[i] <= rounds[i - 1]) {
      throw ValidationError("cv_curve: rounds grid must be increasing");
    }
  }
  const auto folds = kfold_split(static_cast<int>(X.rows), k, seed);
  const std::size_t n = X.rows;
  std::vector<std::vector<double>> fold_mse(folds.size(),
                                            std::vector<double>(rounds.size(), 0.0));
  for_each_fold(folds.size(), n_threads, [&](std::size_t f) {
    const std::vector<int>& holdout = folds[f];
    std::vector<char> in_holdout(n, 0);
    for (int i : holdout) in_holdout[static_cast<std::size_t>(i)] = 1;
    std::vector<int> train_rows;
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_holdout[i]) train_rows.push_back(static_cast<int>(i));
    }
    const Matrix x_train = take_rows(X, train_rows);
    const std::vector<double> y_train = take(y, train_rows);
    const Matrix x_val = take_rows(X, holdout);
    const std::vector<double> y_val = take(y, holdout);

    gbt::GbtConfig full = cfg;
    full.n_rounds = rounds.back();
    const gbt::TreeEnsemble model = gbt::fit_ensemble(x_train, y_train, full);

    // Prefix ensembles: accumulate round by round, reading off the grid.
    std::vector<double> pred(holdout.size(), model.base_score);
    std::size_t next_grid = 0;
    for (int round = 0; round < full.n_rounds && next_grid < rounds.size(); ++round) {
      const gbt::Tree& tree = model.trees[static_cast<std::size_t>(round)];
      for (std::size_t i = 0; i < holdout.size(); ++i) {
        pred[i] += full.learning_rate * tree.predict_row(x_val.row(i));
      }
      if (round + 1 == rounds[next_grid]) {
        fold_mse[f][next_grid] = mse(y_val, pred);
        ++next_grid;
      }
    }
  });
  std::vector<double> grid(rounds.size());
  for (std::size_t i = 0; i < rounds.size(); ++i) grid[i] = static_cast<double>(rounds[i]);
  CvCurve curve = summarize(std::move(grid), fold_mse, static_cast<int>(folds.size()), seed);
  curve.seed = seed;
  return curve;
}

SelectRule select_rule_from_name(std::string_view name) {
  if (name == "min") return SelectRule::min;
  if (name == "one_se") return SelectRule::one_se;
  throw ValidationError("unknown selection rule: '" + std::string(name) + "'");
}

double select_lambda(const CvCurve& curve, SelectRule rule) {
  if (curve.grid.empty()) throw ValidationError("select_lambda: empty curve");
  std::size_t best = 0;
  for (std::size_t i = 1; i < curve.grid.size(); ++i) {
    const bool better = curve.mean_mse[i] < curve.mean_mse[best] ||
                        (curve.mean_mse[i] == curve.mean_mse[best] &&
                         curve.grid[i] > curve.grid[best]);
    if (better) best = i;
  }
  if (rule == SelectRule::min) return curve.grid[best];
  const double limit = curve.mean_mse[best] + curve.stderr_mse[best];
  std::size_t pick = best;
  for (std::size_t i = 0; i < curve.grid.size(); ++i) {
    if (curve.mean_mse[i] <= limit && curve.grid[i] > curve.grid[pick]) pick = i;
  }
  return curve.grid[pick];
}

void write_cv_curve_csv(const std::filesystem::path& path, const CvCurve& curve) {
  std::ostringstream out;
  out << "lambda,mean_mse,stderr_mse\n";
  for (std::size_t i = 0; i < curve.grid.size(); ++i) {
    out << csv::fmt_double(curve.grid[i]) << ',' << csv::fmt_double(curve.mean_mse[i]) << ','
        << csv::fmt_double(curve.stderr_mse[i]) << "\n";
  }
  csv::write_file_atomic(path, out.str());
}

void write_split_json(const std::filesystem::path& path, const SplitIndices& split,
                      std::uint64_t seed, double ratio) {
  ordered_json j;
  j["seed"] = seed;
  j["ratio"] = ratio;
  j["n_train"] = split.train.size();
  j["n_test"] = split.test.size();
  j["train"] = split.train;
  j["test"] = split.test;
  csv::write_file_atomic(path, j.dump(2) + "\n");
}

void write_mse_table_csv(const std::filesystem::path& path, std::span<const MseRow> rows) {
  std::ostringstream out;
  out << "model,train,validation\n";
  for (const MseRow& r : rows) {
    out << r.model << ',' << csv::fmt_double(r.train) << ',' << csv::fmt_double(r.validation)
        << "\n";
  }
  csv::write_file_atomic(path, out.str());
}

}  // namespace rsyield::eval
