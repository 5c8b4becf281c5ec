#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rsyield/matrix.hpp"

// Gradient tree boosting for squared-error regression with exact greedy
// splits.  The second-order machinery is specialized to this loss: per node,
// G is the sum of residuals and H the row count.  A split's score is
//
//   gain = 1/2 * ( G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - G^2/(H+lambda) ) - gamma
//
// and a leaf predicts G/(H+lambda).  Candidate thresholds are midpoints
// between consecutive distinct sorted feature values; rows with value below
// the threshold go left.  Ties in gain resolve to the lowest feature index,
// then the lowest threshold.

namespace rsyield::gbt {

struct GbtConfig {
  double gamma = 0.1;        // per-leaf split penalty
  double lambda = 0.6;       // L2 penalty on leaf weights
  int max_depth = 5;
  int n_rounds = 100;
  double learning_rate = 0.1;
  std::optional<double> base_score;  // defaults to mean(y) at fit time
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double leaf_weight = 0.0;

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // node 0 is the root

  double predict_row(const double* x) const;
  int leaf_count() const;
};

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

// Best split over the given rows; exposed so the exhaustive oracle in the
// test suite can be compared against the production search.
SplitChoice best_split(const Matrix& X, std::span<const double> residuals,
                       std::span<const int> rows, const GbtConfig& cfg);

Tree fit_tree(const Matrix& X, std::span<const double> residuals, const GbtConfig& cfg);

struct TreeEnsemble {
  double base_score = 0.0;
  GbtConfig config;
  std::vector<Tree> trees;
  std::vector<double> train_mse_trace;  // after each boosting round
  std::vector<std::string> column_names;

  double predict_row(const double* x) const;
  std::vector<double> predict(const Matrix& X) const;
};

TreeEnsemble fit_ensemble(const Matrix& X, const std::vector<double>& y, const GbtConfig& cfg,
                          std::vector<std::string> column_names = {});

void write_model_json(const std::filesystem::path& path, const TreeEnsemble& m);

}  // namespace rsyield::gbt
