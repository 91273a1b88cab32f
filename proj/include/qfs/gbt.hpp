#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "qfs/error.hpp"
#include "qfs/random.hpp"

// Depth-limited gradient-boosted regression trees with exact greedy splits
// and second-order (Newton) leaf values, in the style of XGBoost.
namespace qfs::gbt {

enum class Task { Classification, Regression };

inline std::string_view to_string(Task t) { return t == Task::Classification ? "classification" : "regression"; }

inline Task parse_task(std::string_view s) {
  if (s == "classification") return Task::Classification;
  if (s == "regression") return Task::Regression;
  throw ConfigError("unknown task '" + std::string(s) + "'");
}

struct GbtConfig {
  std::size_t n_trees = 100;
  std::size_t max_depth = 3;
  double learning_rate = 0.1;
  std::size_t min_leaf = 5;
  double l2 = 1.0;         // leaf weight regularization
  double subsample = 1.0;  // row fraction per tree; < 1 draws rows from `seed`
  Task task = Task::Regression;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_trees < 1) throw ConfigError("gbt: n_trees must be >= 1");
    if (max_depth < 1) throw ConfigError("gbt: max_depth must be >= 1");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw ConfigError("gbt: learning_rate must lie in (0, 1]");
    if (min_leaf < 1) throw ConfigError("gbt: min_leaf must be >= 1");
    if (!(l2 >= 0.0)) throw ConfigError("gbt: l2 must be non-negative");
    if (!(subsample > 0.0 && subsample <= 1.0)) throw ConfigError("gbt: subsample must lie in (0, 1]");
  }
};

struct Node {
  int feature = -1;  // -1: leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct Tree {
  std::vector<Node> nodes;

  template <typename Row>
  double predict(const Row& x) const {
    int i = 0;
    while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
      const auto& nd = nodes[static_cast<std::size_t>(i)];
      i = x(nd.feature) <= nd.threshold ? nd.left : nd.right;
    }
    return nodes[static_cast<std::size_t>(i)].value;
  }
};

class Model {
 public:
  Model(Task task, double base, std::vector<Tree> trees) : task_(task), base_(base), trees_(std::move(trees)) {}

  Task task() const { return task_; }
  std::size_t n_trees() const { return trees_.size(); }

  // Raw additive score: the prediction for regression, the log-odds for
  // classification.
  Eigen::VectorXd predict_raw(const Eigen::MatrixXd& X) const {
    Eigen::VectorXd out = Eigen::VectorXd::Constant(X.rows(), base_);
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
      const auto row = X.row(r);
      for (const auto& t : trees_) out(r) += t.predict(row);
    }
    return out;
  }

  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const {
    auto raw = predict_raw(X);
    if (task_ == Task::Classification)
      for (auto& v : raw) v = v > 0.0 ? 1.0 : 0.0;
    return raw;
  }

  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X) const {
    if (task_ != Task::Classification) throw ConfigError("predict_proba needs a classification model");
    auto raw = predict_raw(X);
    for (auto& v : raw) v = 1.0 / (1.0 + std::exp(-v));
    return raw;
  }

 private:
  Task task_;
  double base_;
  std::vector<Tree> trees_;
};

namespace detail {

struct Split {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

struct Stats {
  double g = 0.0, h = 0.0;
  std::size_t n = 0;
};

inline double score(double g, double h, double l2) { return g * g / (h + l2); }

// Grows one tree level by level. Candidate thresholds sit midway between
// consecutive distinct feature values; among equal gains the first
// (feature, threshold) encountered wins.
inline Tree grow_tree(const Eigen::MatrixXd& X, const std::vector<std::vector<std::uint32_t>>& sorted,
                      std::span<const double> grad, std::span<const double> hess, std::vector<int> node_of,
                      const GbtConfig& cfg) {
  Tree tree;
  tree.nodes.emplace_back();
  std::vector<int> active{0};
  const std::size_t n = node_of.size();

  for (std::size_t depth = 0; depth < cfg.max_depth && !active.empty(); ++depth) {
    const std::size_t nn = tree.nodes.size();
    std::vector<Stats> total(nn);
    for (std::size_t i = 0; i < n; ++i) {
      if (node_of[i] < 0) continue;
      auto& s = total[static_cast<std::size_t>(node_of[i])];
      s.g += grad[i];
      s.h += hess[i];
      ++s.n;
    }
    std::vector<Split> best(nn);
    std::vector<Stats> left(nn);
    std::vector<double> last(nn);
    std::vector<bool> is_active(nn, false);
    for (int a : active) is_active[static_cast<std::size_t>(a)] = true;

    for (Eigen::Index f = 0; f < X.cols(); ++f) {
      for (int a : active) left[static_cast<std::size_t>(a)] = {};
      for (auto row : sorted[static_cast<std::size_t>(f)]) {
        const int nd = node_of[row];
        if (nd < 0 || !is_active[static_cast<std::size_t>(nd)]) continue;
        const auto u = static_cast<std::size_t>(nd);
        const double x = X(static_cast<Eigen::Index>(row), f);
        auto& l = left[u];
        if (l.n > 0 && x > last[u] && l.n >= cfg.min_leaf && total[u].n - l.n >= cfg.min_leaf) {
          const double gr = total[u].g - l.g;
          const double hr = total[u].h - l.h;
          const double gain = score(l.g, l.h, cfg.l2) + score(gr, hr, cfg.l2) - score(total[u].g, total[u].h, cfg.l2);
          if (gain > best[u].gain + 1e-12) best[u] = {gain, static_cast<int>(f), last[u] + (x - last[u]) / 2.0};
        }
        l.g += grad[row];
        l.h += hess[row];
        ++l.n;
        last[u] = x;
      }
    }

    std::vector<int> next;
    for (int a : active) {
      const auto u = static_cast<std::size_t>(a);
      if (best[u].feature < 0) continue;
      const int li = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      tree.nodes[u].feature = best[u].feature;
      tree.nodes[u].threshold = best[u].threshold;
      tree.nodes[u].left = li;
      tree.nodes[u].right = li + 1;
      next.push_back(li);
      next.push_back(li + 1);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (node_of[i] < 0) continue;
      const auto& nd = tree.nodes[static_cast<std::size_t>(node_of[i])];
      if (nd.feature < 0) continue;
      node_of[i] = X(static_cast<Eigen::Index>(i), nd.feature) <= nd.threshold ? nd.left : nd.right;
    }
    active = std::move(next);
  }

  std::vector<Stats> leaf(tree.nodes.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (node_of[i] < 0) continue;
    auto& s = leaf[static_cast<std::size_t>(node_of[i])];
    s.g += grad[i];
    s.h += hess[i];
    ++s.n;
  }
  for (std::size_t u = 0; u < tree.nodes.size(); ++u)
    if (tree.nodes[u].feature < 0 && leaf[u].n > 0) tree.nodes[u].value = -cfg.learning_rate * leaf[u].g / (leaf[u].h + cfg.l2);
  return tree;
}

}  // namespace detail

inline Model gbt_train(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GbtConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(X.rows());
  if (X.cols() < 1) throw DataError("gbt_train: empty feature set");
  if (n < 10) throw DataError("gbt_train: need at least 10 rows, got " + std::to_string(n));
  if (static_cast<std::size_t>(y.size()) != n) throw DataError("gbt_train: X and y row counts differ");

  double base = y.mean();
  if (cfg.task == Task::Classification) {
    std::size_t ones = 0;
    for (double v : y) {
      if (v != 0.0 && v != 1.0) throw DataError("gbt_train: classification labels must be 0 or 1");
      ones += v == 1.0;
    }
    if (ones == 0 || ones == n) throw DataError("gbt_train: training labels contain a single class");
    const double p = static_cast<double>(ones) / static_cast<double>(n);
    base = std::log(p / (1.0 - p));
  }

  std::vector<std::vector<std::uint32_t>> sorted(static_cast<std::size_t>(X.cols()));
  for (Eigen::Index f = 0; f < X.cols(); ++f) {
    auto& s = sorted[static_cast<std::size_t>(f)];
    s.resize(n);
    std::iota(s.begin(), s.end(), std::uint32_t{0});
    std::stable_sort(s.begin(), s.end(), [&](auto a, auto b) { return X(a, f) < X(b, f); });
  }

  Eigen::VectorXd raw = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), base);
  std::vector<double> grad(n), hess(n);
  std::vector<Tree> trees;
  trees.reserve(cfg.n_trees);
  Rng rng(cfg.seed);
  for (std::size_t t = 0; t < cfg.n_trees; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      if (cfg.task == Task::Classification) {
        const double p = 1.0 / (1.0 + std::exp(-raw(r)));
        grad[i] = p - y(r);
        hess[i] = std::max(p * (1.0 - p), 1e-16);
      } else {
        grad[i] = raw(r) - y(r);
        hess[i] = 1.0;
      }
    }
    std::vector<int> node_of(n, 0);
    if (cfg.subsample < 1.0)
      for (auto& v : node_of) v = rng.uniform() < cfg.subsample ? 0 : -1;
    auto tree = detail::grow_tree(X, sorted, grad, hess, std::move(node_of), cfg);
    for (std::size_t i = 0; i < n; ++i) raw(static_cast<Eigen::Index>(i)) += tree.predict(X.row(static_cast<Eigen::Index>(i)));
    trees.push_back(std::move(tree));
  }
  return Model(cfg.task, base, std::move(trees));
}

}  // namespace qfs::gbt
