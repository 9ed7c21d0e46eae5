#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fleetrisk/features.hpp"
#include "fleetrisk/rng.hpp"

namespace fleetrisk {

/// Split when column >= 0 (rows with value <= threshold go left), leaf otherwise.
struct TreeNode {
  int column = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool is_leaf() const { return column < 0; }
  bool operator==(const TreeNode&) const = default;
};

/// Flat node array, root at index 0.
class RegressionTree {
 public:
  RegressionTree() = default;
  explicit RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  double predict(const FeatureMatrix& m, std::size_t row) const;
  double predict(std::span<const double> dense_row) const;
  int depth() const;
  std::size_t leaf_count() const;

  bool operator==(const RegressionTree&) const = default;

 private:
  std::vector<TreeNode> nodes_;
};

struct TreeParams {
  int max_depth = 0;     // 0 = unlimited
  int max_features = 0;  // columns sampled per split; 0 or >= width = all
  int min_leaf = 1;
};

/// CART regression tree minimizing within-node squared error. `sample`
/// lists training row indices and may repeat rows (bootstrap).
RegressionTree fit_tree(const FeatureMatrix& m, std::span<const double> targets,
                        std::span<const std::size_t> sample, const TreeParams& params, Rng& rng);

RegressionTree fit_tree(const FeatureMatrix& m, std::span<const double> targets, const TreeParams& params,
                        Rng& rng);

}  // namespace fleetrisk
