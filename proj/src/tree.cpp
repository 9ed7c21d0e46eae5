#include "fleetrisk/tree.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <numeric>

namespace fleetrisk {

double RegressionTree::predict(const FeatureMatrix& m, std::size_t row) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& n = nodes_[i];
    i = static_cast<std::size_t>(m.at(row, static_cast<std::size_t>(n.column)) <= n.threshold ? n.left : n.right);
  }
  return nodes_[i].value;
}

double RegressionTree::predict(std::span<const double> dense_row) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& n = nodes_[i];
    i = static_cast<std::size_t>(dense_row[static_cast<std::size_t>(n.column)] <= n.threshold ? n.left : n.right);
  }
  return nodes_[i].value;
}

int RegressionTree::depth() const {
  if (nodes_.empty()) return 0;
  std::vector<int> d(nodes_.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (n.is_leaf()) continue;
    d[static_cast<std::size_t>(n.left)] = d[i] + 1;
    d[static_cast<std::size_t>(n.right)] = d[i] + 1;
    best = std::max(best, d[i] + 1);
  }
  return best;
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

namespace {

struct Best {
  double reduction = -std::numeric_limits<double>::infinity();
  int column = -1;
  double threshold = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& m, std::span<const double> targets, const TreeParams& params, Rng& rng)
      : m_(m), y_(targets), params_(params), rng_(rng), columns_(m.width()) {}

  RegressionTree build(std::vector<std::size_t> sample) {
    idx_ = std::move(sample);
    struct Task {
      std::size_t node, begin, end;
      int depth;
    };
    std::deque<Task> queue;
    nodes_.push_back(TreeNode{-1, 0.0, -1, -1, mean(0, idx_.size())});
    queue.push_back({0, 0, idx_.size(), 0});
    while (!queue.empty()) {
      const Task t = queue.front();
      queue.pop_front();
      const std::size_t n = t.end - t.begin;
      if (params_.max_depth > 0 && t.depth >= params_.max_depth) continue;
      if (n < 2 * static_cast<std::size_t>(std::max(1, params_.min_leaf))) continue;
      if (constant(t.begin, t.end)) continue;
      const Best best = find_split(t.begin, t.end);
      if (best.column < 0 || !(best.reduction > 1e-12 * node_sse(t.begin, t.end))) continue;

      const auto col = static_cast<std::size_t>(best.column);
      auto mid = std::stable_partition(idx_.begin() + static_cast<std::ptrdiff_t>(t.begin),
                                       idx_.begin() + static_cast<std::ptrdiff_t>(t.end),
                                       [&](std::size_t r) { return m_.at(r, col) <= best.threshold; });
      const std::size_t split = static_cast<std::size_t>(mid - idx_.begin());
      const auto left = nodes_.size();
      nodes_.push_back(TreeNode{-1, 0.0, -1, -1, mean(t.begin, split)});
      nodes_.push_back(TreeNode{-1, 0.0, -1, -1, mean(split, t.end)});
      auto& node = nodes_[t.node];
      node.column = best.column;
      node.threshold = best.threshold;
      node.left = static_cast<int>(left);
      node.right = static_cast<int>(left + 1);
      queue.push_back({left, t.begin, split, t.depth + 1});
      queue.push_back({left + 1, split, t.end, t.depth + 1});
    }
    return RegressionTree(std::move(nodes_));
  }

 private:
  double mean(std::size_t b, std::size_t e) const {
    if (b == e) return 0.0;
    double s = 0.0;
    for (std::size_t i = b; i < e; ++i) s += y_[idx_[i]];
    return s / static_cast<double>(e - b);
  }

  bool constant(std::size_t b, std::size_t e) const {
    const double first = y_[idx_[b]];
    for (std::size_t i = b + 1; i < e; ++i) {
      if (y_[idx_[i]] != first) return false;
    }
    return true;
  }

  double node_sse(std::size_t b, std::size_t e) const {
    const double mu = mean(b, e);
    double ss = 0.0;
    for (std::size_t i = b; i < e; ++i) {
      const double d = y_[idx_[i]] - mu;
      ss += d * d;
    }
    return ss;
  }

  std::vector<std::size_t> sample_columns() {
    const std::size_t width = m_.width();
    std::iota(columns_.begin(), columns_.end(), std::size_t{0});
    const auto k = params_.max_features <= 0 ? width : std::min<std::size_t>(width, static_cast<std::size_t>(params_.max_features));
    if (k < width) {
      for (std::size_t i = 0; i < k; ++i) {
        const auto j = i + static_cast<std::size_t>(rng_.index(width - i));
        std::swap(columns_[i], columns_[j]);
      }
      std::sort(columns_.begin(), columns_.begin() + static_cast<std::ptrdiff_t>(k));
    }
    return {columns_.begin(), columns_.begin() + static_cast<std::ptrdiff_t>(k)};
  }

  Best find_split(std::size_t b, std::size_t e) {
    const std::size_t n = e - b;
    const std::size_t min_leaf = static_cast<std::size_t>(std::max(1, params_.min_leaf));
    double total = 0.0;
    for (std::size_t i = b; i < e; ++i) total += y_[idx_[i]];
    const double parent = total * total / static_cast<double>(n);

    Best best;
    auto consider = [&](double reduction, std::size_t col, double threshold) {
      if (reduction > best.reduction) {
        best = {reduction, static_cast<int>(col), threshold};
      }
    };

    for (const auto col : sample_columns()) {
      if (m_.columns()[col].kind == ColumnKind::OneHot) {
        // values are 0 or 1/scale
        double sum_on = 0.0;
        std::size_t n_on = 0;
        for (std::size_t i = b; i < e; ++i) {
          if (m_.raw(idx_[i], col) != 0.0) {
            sum_on += y_[idx_[i]];
            ++n_on;
          }
        }
        const std::size_t n_off = n - n_on;
        if (n_on < min_leaf || n_off < min_leaf) continue;
        const double sum_off = total - sum_on;
        const double red = sum_off * sum_off / static_cast<double>(n_off) + sum_on * sum_on / static_cast<double>(n_on) - parent;
        consider(red, col, 0.5 / m_.columns()[col].scale);
        continue;
      }
      pairs_.clear();
      for (std::size_t i = b; i < e; ++i) pairs_.emplace_back(m_.at(idx_[i], col), y_[idx_[i]]);
      std::sort(pairs_.begin(), pairs_.end());
      double left_sum = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_sum += pairs_[i].second;
        const double lo = pairs_[i].first;
        const double hi = pairs_[i + 1].first;
        if (!(lo < hi)) continue;
        const std::size_t nl = i + 1;
        const std::size_t nr = n - nl;
        if (nl < min_leaf) continue;
        if (nr < min_leaf) break;
        const double right_sum = total - left_sum;
        const double red = left_sum * left_sum / static_cast<double>(nl) + right_sum * right_sum / static_cast<double>(nr) - parent;
        double threshold = lo + (hi - lo) / 2.0;
        if (!(threshold < hi)) threshold = lo;
        consider(red, col, threshold);
      }
    }
    return best;
  }

  const FeatureMatrix& m_;
  std::span<const double> y_;
  TreeParams params_;
  Rng& rng_;
  std::vector<std::size_t> columns_;
  std::vector<std::size_t> idx_;
  std::vector<TreeNode> nodes_;
  std::vector<std::pair<double, double>> pairs_;
};

}  // namespace

RegressionTree fit_tree(const FeatureMatrix& m, std::span<const double> targets,
                        std::span<const std::size_t> sample, const TreeParams& params, Rng& rng) {
  if (targets.size() != m.rows()) throw Error(ErrorCode::LengthMismatch, "targets/rows size mismatch");
  if (sample.empty()) throw Error(ErrorCode::EmptyDataset, "fit_tree needs at least one row");
  return TreeBuilder(m, targets, params, rng).build({sample.begin(), sample.end()});
}

RegressionTree fit_tree(const FeatureMatrix& m, std::span<const double> targets, const TreeParams& params,
                        Rng& rng) {
  std::vector<std::size_t> all(m.rows());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return fit_tree(m, targets, all, params, rng);
}

}  // namespace fleetrisk
