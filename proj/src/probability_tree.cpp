#include "lbarn/probability_tree.hpp"

#include <cmath>
#include <functional>
#include <string>

#include "lbarn/errors.hpp"

namespace lbarn {

std::size_t ProbabilityTree::n_splits() const {
  std::size_t splits = 0;
  for (const auto& n : nodes) splits += n.is_leaf() ? 0 : 1;
  return splits;
}

double ProbabilityTree::node_probability(std::uint32_t node) const {
  const auto& n = nodes[node];
  return (static_cast<double>(n.ones) + pseudocount) /
         (static_cast<double>(n.count) + 2.0 * pseudocount);
}

double ProbabilityTree::probability(std::span<const std::uint8_t> prefix) const {
  const auto node = find_region(
      [&](std::uint32_t var) {
        if (var >= prefix.size()) throw std::out_of_range("prefix too short for tree");
        return prefix[var];
      },
      nodes.size());
  return node_probability(node);
}

ProbabilityTree ProbabilityTree::truncated(std::size_t max_leaves) const {
  if (max_leaves == 0) throw ConfigError("leaf budget must be at least 1");
  const std::size_t active = max_leaves - 1;
  ProbabilityTree out;
  out.pseudocount = pseudocount;
  std::function<std::uint32_t(std::uint32_t)> visit = [&](std::uint32_t i) {
    const auto idx = static_cast<std::uint32_t>(out.nodes.size());
    out.nodes.push_back(nodes[i]);
    if (nodes[i].is_leaf() || nodes[i].split_rank >= active) {
      auto& leaf = out.nodes[idx];
      leaf.split_var = TreeNode::kLeaf;
      leaf.split_rank = TreeNode::kLeaf;
      leaf.left = leaf.right = 0;
      leaf.gain = 0.0;
      return idx;
    }
    const auto left = visit(nodes[i].left);
    const auto right = visit(nodes[i].right);
    out.nodes[idx].left = left;
    out.nodes[idx].right = right;
    return idx;
  };
  visit(0);
  return out;
}

RegressionTree ProbabilityTree::to_log_odds_tree() const {
  RegressionTree tree;
  tree.nodes.reserve(nodes.size());
  for (std::uint32_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    TreeNode out;
    if (n.is_leaf()) {
      const double ones = static_cast<double>(n.ones);
      const double zeros = static_cast<double>(n.count - n.ones);
      out.gamma = std::log(ones + pseudocount) - std::log(zeros + pseudocount);
    } else {
      out.split_var = n.split_var;
      out.left = n.left;
      out.right = n.right;
      out.gain = n.gain;
    }
    tree.nodes.push_back(out);
  }
  return tree;
}

double smoothed_region_nll(std::size_t ones, std::size_t count, double pseudocount) {
  if (count == 0) return 0.0;
  const double c1 = static_cast<double>(ones);
  const double c0 = static_cast<double>(count - ones);
  const double total = static_cast<double>(count) + 2.0 * pseudocount;
  double nll = 0.0;
  if (c1 > 0) nll -= c1 * std::log((c1 + pseudocount) / total);
  if (c0 > 0) nll -= c0 * std::log((c0 + pseudocount) / total);
  return nll;
}

namespace {

struct Region {
  std::uint32_t id = 0;
  std::uint32_t node = 0;
  std::vector<std::uint32_t> samples;
  std::vector<std::uint8_t> used;
  std::size_t ones = 0;
  std::uint32_t best_var = TreeNode::kLeaf;
  double best_gain = 0.0;
};

void find_best_split(Region& region, std::span<const BitColumn> predictors, BitColumn targets,
                     double pseudocount) {
  const std::size_t count = region.samples.size();
  const double parent = smoothed_region_nll(region.ones, count, pseudocount);
  region.best_var = TreeNode::kLeaf;
  region.best_gain = 0.0;
  for (std::uint32_t var = 0; var < predictors.size(); ++var) {
    if (region.used[var]) continue;
    const BitColumn col = predictors[var];
    std::size_t c1 = 0, ones1 = 0;
    for (auto s : region.samples) {
      c1 += col[s];
      ones1 += col[s] & targets[s];
    }
    if (c1 == 0 || c1 == count) continue;
    const double gain = parent - smoothed_region_nll(ones1, c1, pseudocount) -
                        smoothed_region_nll(region.ones - ones1, count - c1, pseudocount);
    if (gain > 0.0 && gain > region.best_gain) {
      region.best_gain = gain;
      region.best_var = var;
    }
  }
}

}  // namespace

ProbabilityTree fit_probability_tree(std::span<const BitColumn> predictors, BitColumn targets,
                                     std::size_t max_leaves, double pseudocount) {
  if (max_leaves == 0) throw ConfigError("leaf budget must be at least 1");
  if (!(pseudocount > 0.0)) throw ConfigError("pseudocount must be positive");
  const std::size_t n = targets.size();
  for (const auto& col : predictors) {
    if (col.size() != n) throw DataError("predictor length does not match targets");
  }

  // Nodes are built in creation order and renumbered to pre-order at the end.
  std::vector<ProbabilityTreeNode> nodes(1);
  std::vector<Region> leaves(1);
  Region& root = leaves.front();
  root.samples.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    root.samples[i] = i;
    root.ones += targets[i];
  }
  root.used.assign(predictors.size(), 0);
  nodes[0].ones = root.ones;
  nodes[0].count = n;
  if (max_leaves > 1) find_best_split(root, predictors, targets, pseudocount);

  std::uint32_t next_id = 1;
  std::uint32_t rank = 0;
  while (leaves.size() < max_leaves) {
    auto chosen = leaves.end();
    for (auto it = leaves.begin(); it != leaves.end(); ++it) {
      if (it->best_var == TreeNode::kLeaf) continue;
      if (chosen == leaves.end() || it->best_gain > chosen->best_gain ||
          (it->best_gain == chosen->best_gain &&
           (it->best_var < chosen->best_var ||
            (it->best_var == chosen->best_var && it->id < chosen->id)))) {
        chosen = it;
      }
    }
    if (chosen == leaves.end()) break;
    Region parent = std::move(*chosen);
    leaves.erase(chosen);

    Region zero, one;
    zero.id = next_id++;
    one.id = next_id++;
    const BitColumn col = predictors[parent.best_var];
    for (auto s : parent.samples) {
      Region& child = col[s] ? one : zero;
      child.samples.push_back(s);
      child.ones += targets[s];
    }
    zero.used = parent.used;
    zero.used[parent.best_var] = 1;
    one.used = zero.used;
    zero.node = static_cast<std::uint32_t>(nodes.size());
    one.node = zero.node + 1;
    for (const Region* child : {&zero, &one}) {
      ProbabilityTreeNode node;
      node.ones = child->ones;
      node.count = child->samples.size();
      nodes.push_back(node);
    }
    auto& internal = nodes[parent.node];
    internal.split_var = parent.best_var;
    internal.split_rank = rank++;
    internal.gain = parent.best_gain;
    internal.left = zero.node;
    internal.right = one.node;

    const bool can_grow = leaves.size() + 2 < max_leaves;
    for (Region* child : {&zero, &one}) {
      if (can_grow) find_best_split(*child, predictors, targets, pseudocount);
      leaves.push_back(std::move(*child));
    }
  }

  ProbabilityTree tree;
  tree.pseudocount = pseudocount;
  std::function<std::uint32_t(std::uint32_t)> visit = [&](std::uint32_t old) {
    const auto idx = static_cast<std::uint32_t>(tree.nodes.size());
    tree.nodes.push_back(nodes[old]);
    if (!nodes[old].is_leaf()) {
      const auto left = visit(nodes[old].left);
      const auto right = visit(nodes[old].right);
      tree.nodes[idx].left = left;
      tree.nodes[idx].right = right;
    }
    return idx;
  };
  visit(0);
  return tree;
}

std::vector<double> log_likelihood_by_splits(const ProbabilityTree& tree,
                                             std::span<const BitColumn> predictors,
                                             BitColumn targets) {
  const std::size_t splits = tree.n_splits();
  std::vector<double> log_p(tree.nodes.size()), log_q(tree.nodes.size());
  for (std::uint32_t i = 0; i < tree.nodes.size(); ++i) {
    const double p = tree.node_probability(i);
    log_p[i] = std::log(p);
    log_q[i] = std::log1p(-p);
  }
  std::vector<double> ll(splits + 1, 0.0);
  std::vector<std::uint32_t> path;
  for (std::size_t s = 0; s < targets.size(); ++s) {
    path.clear();
    std::uint32_t i = 0;
    path.push_back(i);
    while (!tree.nodes[i].is_leaf()) {
      i = predictors[tree.nodes[i].split_var][s] ? tree.nodes[i].right : tree.nodes[i].left;
      path.push_back(i);
    }
    // With k active splits the sample stops at the first path node whose split
    // rank is >= k (or at the leaf).
    std::size_t depth = 0;
    for (std::size_t k = 0; k <= splits; ++k) {
      while (depth + 1 < path.size() && tree.nodes[path[depth]].split_rank < k) ++depth;
      const auto node = path[depth];
      ll[k] += targets[s] ? log_p[node] : log_q[node];
    }
  }
  return ll;
}

}  // namespace lbarn
