#include "rsyield/gbt.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "rsyield/csv.hpp"
#include "rsyield/errors.hpp"

namespace rsyield::gbt {

using ordered_json = nlohmann::ordered_json;

namespace {

double leaf_score(double g, double h, double lambda) { return g * g / (h + lambda); }

struct Builder {
  const Matrix& X;
  std::span<const double> residuals;
  const GbtConfig& cfg;
  std::vector<TreeNode> nodes;

  int build(std::vector<int>& rows, int depth) {
    double g = 0.0;
    for (int i : rows) g += residuals[static_cast<std::size_t>(i)];
    const double h = static_cast<double>(rows.size());

    SplitChoice split;
    if (depth < cfg.max_depth && rows.size() >= 2) {
      split = best_split(X, residuals, rows, cfg);
    }
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    if (!split.found) {
      nodes[id].leaf_weight = g / (h + cfg.lambda);
      return id;
    }
    std::vector<int> left, right;
    for (int i : rows) {
      (X(static_cast<std::size_t>(i), static_cast<std::size_t>(split.feature)) < split.threshold
           ? left
           : right)
          .push_back(i);
    }
    rows.clear();
    rows.shrink_to_fit();
    nodes[id].feature = split.feature;
    nodes[id].threshold = split.threshold;
    const int l = build(left, depth + 1);
    nodes[id].left = l;
    const int r = build(right, depth + 1);
    nodes[id].right = r;
    return id;
  }
};

}  // namespace

SplitChoice best_split(const Matrix& X, std::span<const double> residuals,
                       std::span<const int> rows, const GbtConfig& cfg) {
  SplitChoice best;
  const std::size_t n = rows.size();
  if (n < 2) return best;

  double g_total = 0.0;
  for (int i : rows) g_total += residuals[static_cast<std::size_t>(i)];
  const double h_total = static_cast<double>(n);
  const double parent = leaf_score(g_total, h_total, cfg.lambda);

  std::vector<std::pair<double, double>> vals(n);  // (feature value, residual)
  for (std::size_t f = 0; f < X.cols; ++f) {
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = static_cast<std::size_t>(rows[k]);
      vals[k] = {X(i, f), residuals[i]};
    }
    std::sort(vals.begin(), vals.end());

    double g_left = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      g_left += vals[k].second;
      if (vals[k + 1].first == vals[k].first) continue;  // not a boundary
      const double threshold = (vals[k].first + vals[k + 1].first) / 2.0;
      const double h_left = static_cast<double>(k + 1);
      const double g_right = g_total - g_left;
      const double h_right = h_total - h_left;
      const double gain = 0.5 * (leaf_score(g_left, h_left, cfg.lambda) +
                                 leaf_score(g_right, h_right, cfg.lambda) - parent) -
                          cfg.gamma;
      // best.gain starts at zero, so candidates must strictly improve: this
      // both enforces the positive-gain rule and, because features and
      // thresholds scan in ascending order, resolves exact ties to the lowest
      // feature index and then the lowest threshold.
      if (gain > best.gain) {
        best.found = true;
        best.feature = static_cast<int>(f);
        best.threshold = threshold;
        best.gain = gain;
      }
    }
  }
  return best;
}

Tree fit_tree(const Matrix& X, std::span<const double> residuals, const GbtConfig& cfg) {
  if (X.rows != residuals.size()) throw ValidationError("fit_tree: residual length mismatch");
  if (X.rows == 0) throw ValidationError("fit_tree: empty design");
  if (cfg.max_depth < 0) throw ValidationError("fit_tree: max_depth must be non-negative");
  for (double r : residuals) {
    if (!std::isfinite(r)) throw ValidationError("fit_tree: non-finite residual");
  }
  Builder builder{X, residuals, cfg, {}};
  std::vector<int> rows(X.rows);
  std::iota(rows.begin(), rows.end(), 0);
  builder.build(rows, 0);
  Tree t;
  t.nodes = std::move(builder.nodes);
  return t;
}

double Tree::predict_row(const double* x) const {
  int id = 0;
  while (!nodes[static_cast<std::size_t>(id)].is_leaf()) {
    const TreeNode& nd = nodes[static_cast<std::size_t>(id)];
    id = x[nd.feature] < nd.threshold ? nd.left : nd.right;
  }
  return nodes[static_cast<std::size_t>(id)].leaf_weight;
}

int Tree::leaf_count() const {
  int c = 0;
  for (const TreeNode& nd : nodes) c += nd.is_leaf();
  return c;
}

double TreeEnsemble::predict_row(const double* x) const {
  double v = base_score;
  for (const Tree& t : trees) v += config.learning_rate * t.predict_row(x);
  return v;
}

std::vector<double> TreeEnsemble::predict(const Matrix& X) const {
  if (!trees.empty()) {
    for (const Tree& t : trees) {
      for (const TreeNode& nd : t.nodes) {
        if (!nd.is_leaf() && nd.feature >= static_cast<int>(X.cols)) {
          throw ValidationError("predict: feature count mismatch");
        }
      }
    }
  }
  std::vector<double> out(X.rows);
  for (std::size_t i = 0; i < X.rows; ++i) out[i] = predict_row(X.row(i));
  return out;
}

TreeEnsemble fit_ensemble(const Matrix& X, const std::vector<double>& y, const GbtConfig& cfg,
                          std::vector<std::string> column_names) {
  if (X.rows != y.size()) throw ValidationError("fit_ensemble: X row count does not match y");
  if (X.rows == 0) throw ValidationError("fit_ensemble: empty design");
  if (cfg.n_rounds < 0) throw ValidationError("fit_ensemble: n_rounds must be non-negative");
  if (!(cfg.learning_rate > 0.0)) throw ValidationError("fit_ensemble: learning_rate must be positive");
  if (!column_names.empty() && column_names.size() != X.cols) {
    throw ValidationError("fit_ensemble: column_names length does not match design width");
  }

  TreeEnsemble model;
  model.config = cfg;
  model.column_names = std::move(column_names);
  model.base_score =
      cfg.base_score.value_or(std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size()));

  const std::size_t n = X.rows;
  std::vector<double> pred(n, model.base_score);
  std::vector<double> residual(n);
  model.trees.reserve(static_cast<std::size_t>(cfg.n_rounds));
  model.train_mse_trace.reserve(static_cast<std::size_t>(cfg.n_rounds));

  double prev_mse = std::numeric_limits<double>::infinity();
  for (int round = 0; round < cfg.n_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - pred[i];
    Tree tree = fit_tree(X, residual, cfg);
    double mse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] += cfg.learning_rate * tree.predict_row(X.row(i));
      const double e = y[i] - pred[i];
      mse += e * e;
    }
    mse /= static_cast<double>(n);
    model.trees.push_back(std::move(tree));
    model.train_mse_trace.push_back(mse);
    // With learning_rate <= 1 each round shrinks every leaf's residual sum,
    // so the training MSE cannot rise beyond round-off.
    assert(mse <= prev_mse * (1.0 + 1e-12) + 1e-15 && "boosting round increased training MSE");
    prev_mse = mse;
  }
  return model;
}

namespace {

ordered_json node_to_json(const Tree& t, int id) {
  const TreeNode& nd = t.nodes[static_cast<std::size_t>(id)];
  ordered_json j;
  if (nd.is_leaf()) {
    j["leaf_weight"] = nd.leaf_weight;
  } else {
    j["feature"] = nd.feature;
    j["threshold"] = nd.threshold;
    j["left"] = node_to_json(t, nd.left);
    j["right"] = node_to_json(t, nd.right);
  }
  return j;
}

}  // namespace

void write_model_json(const std::filesystem::path& path, const TreeEnsemble& m) {
  ordered_json j;
  j["model"] = "gbt";
  j["base_score"] = m.base_score;
  j["learning_rate"] = m.config.learning_rate;
  j["gamma"] = m.config.gamma;
  j["lambda"] = m.config.lambda;
  j["max_depth"] = m.config.max_depth;
  j["n_rounds"] = static_cast<int>(m.trees.size());
  j["column_names"] = m.column_names;
  ordered_json trees = ordered_json::array();
  for (const Tree& t : m.trees) trees.push_back(node_to_json(t, 0));
  j["trees"] = std::move(trees);
  j["train_mse_trace"] = m.train_mse_trace;
  csv::write_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace rsyield::gbt
