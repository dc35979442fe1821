#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "lbarn/data.hpp"

namespace lbarn {

// Node of a binary regression tree over binary predictors. Internal nodes send
// samples with predictor `split_var` equal to 0 to `left` and 1 to `right`.
struct TreeNode {
  static constexpr std::uint32_t kLeaf = std::numeric_limits<std::uint32_t>::max();

  std::uint32_t split_var = kLeaf;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  // Leaf value (log-odds increment, unshrunken). Unused on internal nodes.
  double gamma = 0.0;
  // Objective improvement accepted when this node was split.
  double gain = 0.0;

  bool is_leaf() const { return split_var == kLeaf; }

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

// J-terminal regression tree. Nodes are stored in pre-order; nodes[0] is the
// root and child indices are explicit.
struct RegressionTree {
  std::vector<TreeNode> nodes;

  static RegressionTree single_leaf(double gamma);

  std::size_t n_leaves() const;

  // Index of the leaf reached by a sample; `bit_at(var)` returns the sample's
  // value of predictor `var`.
  template <class BitAt>
  std::uint32_t find_leaf(BitAt&& bit_at) const {
    std::uint32_t i = 0;
    while (!nodes[i].is_leaf()) {
      i = bit_at(nodes[i].split_var) ? nodes[i].right : nodes[i].left;
    }
    return i;
  }

  // Throws std::out_of_range if the prefix is shorter than a split needs.
  double predict(std::span<const std::uint8_t> prefix) const;

  // Smallest prefix length every path can be evaluated on.
  std::size_t required_prefix() const;

  // Split gains summed per predictor index.
  std::map<std::size_t, double> accrued_gain_per_var() const;
  double total_gain() const;

  // Structural invariants: single root, pre-order layout, two children per
  // internal node, no predictor split twice along a path, finite values.
  // Throws InvariantError.
  void validate() const;

  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;
};

// Pseudoresiduals y - p and curvature weights p(1 - p) of the Bernoulli
// log-likelihood, with p clamped to [eps, 1 - eps].
struct FitWeights {
  std::vector<double> residuals;
  std::vector<double> weights;

  static FitWeights from_log_odds(BitColumn targets, std::span<const double> log_odds,
                                  double eps);

  std::size_t size() const { return residuals.size(); }
};

struct TreeParams {
  std::size_t max_leaves = 8;
  double min_leaf_weight = 1e-4;
  double gamma_cap = 4.0;
  double gain_tolerance = 0.0;
};

// (sum r)^2 / (sum w); 0 for an empty region.
double region_objective(double residual_sum, double weight_sum);

// Newton step for one leaf, clamped to [-gamma_cap, gamma_cap].
double leaf_value(double residual_sum, double weight_sum, double gamma_cap);

// obj(R & x=0) + obj(R & x=1) - obj(R) for the samples listed in `region`.
double split_gain(std::span<const std::uint32_t> region, BitColumn predictor,
                  const FitWeights& fw);

struct TreeFit {
  RegressionTree tree;
  // Leaf node index per training sample.
  std::vector<std::uint32_t> leaf_of_sample;
  double root_objective = 0.0;
};

// Greedy best-first growth: repeatedly applies the (region, predictor) split
// with the largest gain until max_leaves is reached or no split has gain above
// the tolerance with both children non-empty and at least min_leaf_weight.
// Ties go to the lowest predictor index, then the oldest region.
TreeFit grow_tree(std::span<const BitColumn> predictors, const FitWeights& fw,
                  const TreeParams& params);

RegressionTree fit_tree(std::span<const BitColumn> predictors, const FitWeights& fw,
                        const TreeParams& params);

// Leaf index of every sample when routed through the tree.
std::vector<std::uint32_t> route_samples(const RegressionTree& tree,
                                         std::span<const BitColumn> predictors,
                                         std::size_t n_samples);

// Recomputes every reached leaf with leaf_value(); leaves no sample reaches
// keep their current value. Sums run in ascending sample order.
void set_leaf_values(RegressionTree& tree, std::span<const std::uint32_t> leaf_of_sample,
                     const FitWeights& fw, double gamma_cap);

}  // namespace lbarn
