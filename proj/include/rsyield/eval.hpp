#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rsyield/elasticnet.hpp"
#include "rsyield/gbt.hpp"
#include "rsyield/matrix.hpp"

// Resampling and model selection: seeded k-fold partitions, cross-validation
// curves over hyperparameter grids, the train/test split, and the error
// tables the pipeline reports.

namespace rsyield::eval {

// k disjoint, exhaustive index sets whose sizes differ by at most one, from a
// seeded permutation of 0..n-1.  Indices within each fold are sorted.
std::vector<std::vector<int>> kfold_split(int n, int k, std::uint64_t seed);

struct SplitIndices {
  std::vector<int> train;
  std::vector<int> test;
};

// Deterministic shuffle split; the training side gets ceil(ratio * n) rows.
SplitIndices train_test_split(int n, double ratio, std::uint64_t seed);

double mse(std::span<const double> y, std::span<const double> predicted);

struct CvCurve {
  std::vector<double> grid;        // hyperparameter values, as supplied
  std::vector<double> mean_mse;    // mean validation MSE across folds
  std::vector<double> stderr_mse;  // sd of fold MSEs / sqrt(k)
  int k = 0;
  std::uint64_t seed = 0;
};

// Validation curve for the elastic net over a lambda grid.  Within each fold
// the grid is fitted as a warm-started descending path.  `grid` must be
// non-increasing.
CvCurve cv_curve_enet(const Matrix& X, const std::vector<double>& y, double alpha,
                      const std::vector<double>& grid, int k, std::uint64_t seed,
                      const elasticnet::EnetConfig& base = {}, int n_threads = 1);
// Same computation on caller-supplied folds (exposed so fold construction and
// curve evaluation can be tested independently).
CvCurve cv_curve_enet_folds(const Matrix& X, const std::vector<double>& y, double alpha,
                            const std::vector<double>& grid,
                            const std::vector<std::vector<int>>& folds,
                            const elasticnet::EnetConfig& base = {}, int n_threads = 1);

// Validation curve for boosting over a grid of round counts.  Each fold fits
// the largest count once and reads the smaller counts off the prefix
// ensembles.  `rounds` must be increasing.
CvCurve cv_curve_gbt_rounds(const Matrix& X, const std::vector<double>& y,
                            const gbt::GbtConfig& cfg, const std::vector<int>& rounds, int k,
                            std::uint64_t seed, int n_threads = 1);

enum class SelectRule { min, one_se };
SelectRule select_rule_from_name(std::string_view name);

// min: smallest mean MSE, ties to the larger hyperparameter value.
// one_se: largest value whose mean is within one standard error of the best.
double select_lambda(const CvCurve& curve, SelectRule rule);

void write_cv_curve_csv(const std::filesystem::path& path, const CvCurve& curve);
void write_split_json(const std::filesystem::path& path, const SplitIndices& split,
                      std::uint64_t seed, double ratio);

struct MseRow {
  std::string model;
  double train = 0.0;
  double validation = 0.0;
};
void write_mse_table_csv(const std::filesystem::path& path, std::span<const MseRow> rows);

// Row subsets of a design/response pair.
Matrix take_rows(const Matrix& X, std::span<const int> rows);
std::vector<double> take(std::span<const double> v, std::span<const int> rows);

}  // namespace rsyield::eval
