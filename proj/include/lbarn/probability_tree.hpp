#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lbarn/data.hpp"
#include "lbarn/tree.hpp"

namespace lbarn {

// Single probability estimation tree: leaves predict the smoothed frequency
// (ones + a) / (count + 2a). Every node keeps its region counts and the rank of
// its split in the greedy growth sequence, so the tree with the first k splits
// (k + 1 leaves) can be read off without refitting.
struct ProbabilityTreeNode {
  std::uint32_t split_var = TreeNode::kLeaf;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  std::uint32_t split_rank = TreeNode::kLeaf;
  double gain = 0.0;
  std::size_t ones = 0;
  std::size_t count = 0;

  bool is_leaf() const { return split_var == TreeNode::kLeaf; }
};

struct ProbabilityTree {
  std::vector<ProbabilityTreeNode> nodes;  // pre-order
  double pseudocount = 1.0;

  std::size_t n_splits() const;

  double node_probability(std::uint32_t node) const;

  // Node reached when only splits with rank < active_splits are applied.
  template <class BitAt>
  std::uint32_t find_region(BitAt&& bit_at, std::size_t active_splits) const {
    std::uint32_t i = 0;
    while (!nodes[i].is_leaf() && nodes[i].split_rank < active_splits) {
      i = bit_at(nodes[i].split_var) ? nodes[i].right : nodes[i].left;
    }
    return i;
  }

  double probability(std::span<const std::uint8_t> prefix) const;

  // Tree with the first max_leaves - 1 splits of the growth sequence.
  ProbabilityTree truncated(std::size_t max_leaves) const;

  // Same partition with leaf values logit(p); a conditional with shrinkage 1
  // and this single tree reproduces the probability tree exactly.
  RegressionTree to_log_odds_tree() const;
};

// Smoothed Bernoulli negative log-likelihood of a region.
double smoothed_region_nll(std::size_t ones, std::size_t count, double pseudocount);

// Greedy growth by largest reduction of the smoothed negative log-likelihood,
// up to max_leaves leaves; ties go to the lowest predictor, then oldest region.
ProbabilityTree fit_probability_tree(std::span<const BitColumn> predictors, BitColumn targets,
                                     std::size_t max_leaves, double pseudocount);

// Summed log-likelihood of (predictors, targets) under the tree truncated to
// k splits, for every k = 0..n_splits().
std::vector<double> log_likelihood_by_splits(const ProbabilityTree& tree,
                                             std::span<const BitColumn> predictors,
                                             BitColumn targets);

}  // namespace lbarn
