#include "lbarn/tree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "lbarn/errors.hpp"
#include "lbarn/math.hpp"

namespace lbarn {

RegressionTree RegressionTree::single_leaf(double gamma) {
  RegressionTree tree;
  TreeNode leaf;
  leaf.gamma = gamma;
  tree.nodes.push_back(leaf);
  return tree;
}

std::size_t RegressionTree::n_leaves() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

double RegressionTree::predict(std::span<const std::uint8_t> prefix) const {
  const auto leaf = find_leaf([&](std::uint32_t var) {
    if (var >= prefix.size()) {
      throw std::out_of_range("prefix of length " + std::to_string(prefix.size()) +
                              " has no predictor " + std::to_string(var));
    }
    return prefix[var];
  });
  return nodes[leaf].gamma;
}

std::size_t RegressionTree::required_prefix() const {
  std::size_t needed = 0;
  for (const auto& n : nodes) {
    if (!n.is_leaf()) needed = std::max<std::size_t>(needed, n.split_var + 1);
  }
  return needed;
}

std::map<std::size_t, double> RegressionTree::accrued_gain_per_var() const {
  std::map<std::size_t, double> gains;
  for (const auto& n : nodes) {
    if (!n.is_leaf()) gains[n.split_var] += n.gain;
  }
  return gains;
}

double RegressionTree::total_gain() const {
  double total = 0.0;
  for (const auto& n : nodes) {
    if (!n.is_leaf()) total += n.gain;
  }
  return total;
}

void RegressionTree::validate() const {
  if (nodes.empty()) throw InvariantError("tree has no nodes");
  std::vector<std::uint32_t> path;
  std::uint32_t expected = 0;
  // Pre-order walk; children must appear exactly where pre-order puts them.
  std::function<void(std::uint32_t)> visit = [&](std::uint32_t i) {
    if (i != expected || i >= nodes.size()) {
      throw InvariantError("tree nodes are not in pre-order");
    }
    ++expected;
    const TreeNode& n = nodes[i];
    if (n.is_leaf()) {
      if (!std::isfinite(n.gamma)) throw InvariantError("non-finite leaf value");
      return;
    }
    if (std::find(path.begin(), path.end(), n.split_var) != path.end()) {
      throw InvariantError("predictor " + std::to_string(n.split_var) +
                           " split twice on one path");
    }
    if (!std::isfinite(n.gain) || n.gain < 0.0) throw InvariantError("invalid split gain");
    path.push_back(n.split_var);
    visit(n.left);
    visit(n.right);
    path.pop_back();
  };
  visit(0);
  if (expected != nodes.size()) throw InvariantError("tree has unreachable nodes");
}

FitWeights FitWeights::from_log_odds(BitColumn targets, std::span<const double> log_odds,
                                     double eps) {
  FitWeights fw;
  fw.residuals.resize(targets.size());
  fw.weights.resize(targets.size());
  for (std::size_t n = 0; n < targets.size(); ++n) {
    const double p = clamp_probability(sigmoid(log_odds[n]), eps);
    fw.residuals[n] = static_cast<double>(targets[n]) - p;
    fw.weights[n] = p * (1.0 - p);
  }
  return fw;
}

double region_objective(double residual_sum, double weight_sum) {
  if (weight_sum <= 0.0) return 0.0;
  return residual_sum * residual_sum / weight_sum;
}

double leaf_value(double residual_sum, double weight_sum, double gamma_cap) {
  if (weight_sum <= 0.0) return 0.0;
  return std::clamp(residual_sum / weight_sum, -gamma_cap, gamma_cap);
}

double split_gain(std::span<const std::uint32_t> region, BitColumn predictor,
                  const FitWeights& fw) {
  double r0 = 0, w0 = 0, r1 = 0, w1 = 0;
  for (auto s : region) {
    if (predictor[s]) {
      r1 += fw.residuals[s];
      w1 += fw.weights[s];
    } else {
      r0 += fw.residuals[s];
      w0 += fw.weights[s];
    }
  }
  return region_objective(r0, w0) + region_objective(r1, w1) -
         region_objective(r0 + r1, w0 + w1);
}

namespace {

struct Candidate {
  std::uint32_t var = TreeNode::kLeaf;
  double gain = 0.0;
  double ones_residual = 0.0;
  double ones_weight = 0.0;

  bool valid() const { return var != TreeNode::kLeaf; }
};

struct Region {
  std::uint32_t id = 0;
  std::uint32_t node = 0;
  std::vector<std::uint32_t> samples;
  std::vector<std::uint8_t> used;  // predictors split on along the path
  double residual_sum = 0.0;
  double weight_sum = 0.0;
  Candidate best;
};

void find_best_split(Region& region, std::span<const BitColumn> predictors,
                     const FitWeights& fw, const TreeParams& params) {
  const std::size_t count = region.samples.size();
  std::vector<double> rr(count), ww(count);
  for (std::size_t i = 0; i < count; ++i) {
    rr[i] = fw.residuals[region.samples[i]];
    ww[i] = fw.weights[region.samples[i]];
  }
  const double parent = region_objective(region.residual_sum, region.weight_sum);
  region.best = Candidate{};
  for (std::uint32_t var = 0; var < predictors.size(); ++var) {
    if (region.used[var]) continue;
    const std::uint8_t* col = predictors[var].data();
    double r1 = 0.0, w1 = 0.0;
    std::size_t c1 = 0;
    for (std::size_t i = 0; i < count; ++i) {
      const std::uint8_t bit = col[region.samples[i]];
      r1 += bit * rr[i];
      w1 += bit * ww[i];
      c1 += bit;
    }
    if (c1 == 0 || c1 == count) continue;
    const double r0 = region.residual_sum - r1;
    const double w0 = region.weight_sum - w1;
    if (w1 < params.min_leaf_weight || w0 < params.min_leaf_weight) continue;
    const double gain = region_objective(r0, w0) + region_objective(r1, w1) - parent;
    if (gain > params.gain_tolerance && gain > region.best.gain) {
      region.best = Candidate{var, gain, r1, w1};
    }
  }
}

// Best-first: larger gain, then lower predictor index, then older region.
bool preferred(const Region& a, const Region& b) {
  if (a.best.gain != b.best.gain) return a.best.gain > b.best.gain;
  if (a.best.var != b.best.var) return a.best.var < b.best.var;
  return a.id < b.id;
}

// Renumbers nodes into pre-order and returns the old -> new index map.
std::vector<std::uint32_t> to_preorder(std::vector<TreeNode>& nodes) {
  std::vector<TreeNode> ordered;
  ordered.reserve(nodes.size());
  std::vector<std::uint32_t> remap(nodes.size());
  std::function<std::uint32_t(std::uint32_t)> visit = [&](std::uint32_t old) {
    const auto idx = static_cast<std::uint32_t>(ordered.size());
    remap[old] = idx;
    ordered.push_back(nodes[old]);
    if (!nodes[old].is_leaf()) {
      const auto left = visit(nodes[old].left);
      const auto right = visit(nodes[old].right);
      ordered[idx].left = left;
      ordered[idx].right = right;
    }
    return idx;
  };
  visit(0);
  nodes = std::move(ordered);
  return remap;
}

}  // namespace

TreeFit grow_tree(std::span<const BitColumn> predictors, const FitWeights& fw,
                  const TreeParams& params) {
  if (params.max_leaves == 0) throw ConfigError("leaf budget must be at least 1");
  const std::size_t n = fw.size();
  for (const auto& col : predictors) {
    if (col.size() != n) throw DataError("predictor length does not match fit weights");
  }

  std::vector<TreeNode> nodes(1);
  std::vector<Region> leaves(1);
  {
    Region& root = leaves.front();
    root.samples.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) root.samples[i] = i;
    root.used.assign(predictors.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      root.residual_sum += fw.residuals[i];
      root.weight_sum += fw.weights[i];
    }
  }
  TreeFit fit;
  fit.root_objective = region_objective(leaves.front().residual_sum, leaves.front().weight_sum);
  std::uint32_t next_region_id = 1;

  if (params.max_leaves > 1 && !predictors.empty() && n > 0) {
    find_best_split(leaves.front(), predictors, fw, params);
  }
  while (leaves.size() < params.max_leaves) {
    auto chosen = leaves.end();
    for (auto it = leaves.begin(); it != leaves.end(); ++it) {
      if (!it->best.valid()) continue;
      if (chosen == leaves.end() || preferred(*it, *chosen)) chosen = it;
    }
    if (chosen == leaves.end()) break;

    Region parent = std::move(*chosen);
    leaves.erase(chosen);
    const Candidate split = parent.best;
    const BitColumn col = predictors[split.var];

    Region zero, one;
    zero.id = next_region_id++;
    one.id = next_region_id++;
    for (auto s : parent.samples) (col[s] ? one.samples : zero.samples).push_back(s);
    zero.used = parent.used;
    zero.used[split.var] = 1;
    one.used = zero.used;
    one.residual_sum = split.ones_residual;
    one.weight_sum = split.ones_weight;
    zero.residual_sum = parent.residual_sum - split.ones_residual;
    zero.weight_sum = parent.weight_sum - split.ones_weight;

    zero.node = static_cast<std::uint32_t>(nodes.size());
    one.node = zero.node + 1;
    nodes.emplace_back();
    nodes.emplace_back();
    TreeNode& internal = nodes[parent.node];
    internal.split_var = split.var;
    internal.gain = split.gain;
    internal.left = zero.node;
    internal.right = one.node;

    const bool can_grow = leaves.size() + 2 < params.max_leaves;
    for (Region* child : {&zero, &one}) {
      if (can_grow) find_best_split(*child, predictors, fw, params);
      leaves.push_back(std::move(*child));
    }
  }

  fit.leaf_of_sample.assign(n, 0);
  for (const auto& leaf : leaves) {
    for (auto s : leaf.samples) fit.leaf_of_sample[s] = leaf.node;
  }
  const auto remap = to_preorder(nodes);
  for (auto& leaf : fit.leaf_of_sample) leaf = remap[leaf];
  fit.tree.nodes = std::move(nodes);
  set_leaf_values(fit.tree, fit.leaf_of_sample, fw, params.gamma_cap);
  return fit;
}

RegressionTree fit_tree(std::span<const BitColumn> predictors, const FitWeights& fw,
                        const TreeParams& params) {
  return grow_tree(predictors, fw, params).tree;
}

std::vector<std::uint32_t> route_samples(const RegressionTree& tree,
                                         std::span<const BitColumn> predictors,
                                         std::size_t n_samples) {
  const std::size_t required = tree.required_prefix();
  if (predictors.size() < required) {
    throw std::out_of_range("tree needs " + std::to_string(required) + " predictors, got " +
                            std::to_string(predictors.size()));
  }
  std::vector<std::uint32_t> leaf(n_samples, 0);
  if (tree.nodes.size() == 1) return leaf;
  for (std::size_t s = 0; s < n_samples; ++s) {
    leaf[s] = tree.find_leaf([&](std::uint32_t var) { return predictors[var][s]; });
  }
  return leaf;
}

void set_leaf_values(RegressionTree& tree, std::span<const std::uint32_t> leaf_of_sample,
                     const FitWeights& fw, double gamma_cap) {
  if (leaf_of_sample.size() != fw.size()) {
    throw InvariantError("leaf assignment does not match fit weights");
  }
  std::vector<double> r(tree.nodes.size(), 0.0), w(tree.nodes.size(), 0.0);
  std::vector<std::size_t> count(tree.nodes.size(), 0);
  for (std::size_t s = 0; s < fw.size(); ++s) {
    const auto leaf = leaf_of_sample[s];
    r[leaf] += fw.residuals[s];
    w[leaf] += fw.weights[s];
    ++count[leaf];
  }
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    if (tree.nodes[i].is_leaf() && count[i] > 0) {
      tree.nodes[i].gamma = leaf_value(r[i], w[i], gamma_cap);
    }
  }
}

}  // namespace lbarn
