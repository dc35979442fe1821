#include <cmath>
#include <random>

#include "doctest.h"
#include "lbarn/errors.hpp"
#include "lbarn/tree.hpp"
#include "support/fixtures.hpp"

using namespace lbarn;
using testing::leaf_node;
using testing::split_node;

namespace {

struct Problem {
  std::vector<std::vector<std::uint8_t>> columns;
  std::vector<std::uint8_t> target;
  FitWeights fw;

  std::vector<BitColumn> predictors() const {
    std::vector<BitColumn> out;
    for (const auto& c : columns) out.emplace_back(c);
    return out;
  }
};

Problem random_problem(std::size_t n, std::size_t d, std::mt19937_64& rng) {
  Problem p;
  p.columns.assign(d, std::vector<std::uint8_t>(n));
  for (auto& c : p.columns)
    for (auto& v : c) v = rng() & 1u;
  p.target.resize(n);
  std::vector<double> z(n);
  std::normal_distribution<double> g(0.0, 1.5);
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = g(rng);
    p.target[i] = rng() & 1u;
  }
  p.fw = FitWeights::from_log_odds(p.target, z, 1e-5);
  return p;
}

// Gain from separately enumerated masks.
double brute_gain(const std::vector<std::uint32_t>& region, BitColumn x, const FitWeights& fw) {
  double r[2] = {0, 0}, w[2] = {0, 0}, rt = 0, wt = 0;
  for (auto i : region) {
    rt += fw.residuals[i];
    wt += fw.weights[i];
  }
  for (int side = 0; side < 2; ++side) {
    for (auto i : region) {
      if (x[i] == side) {
        r[side] += fw.residuals[i];
        w[side] += fw.weights[i];
      }
    }
  }
  auto obj = [](double a, double b) { return b > 0 ? a * a / b : 0.0; };
  return obj(r[0], w[0]) + obj(r[1], w[1]) - obj(rt, wt);
}

}  // namespace

TEST_CASE("region_objective") {
  CHECK(region_objective(0.0, 5.0) == 0.0);
  CHECK(region_objective(2.0, 1.0) == 4.0);
  CHECK(region_objective(0.0, 0.0) == 0.0);
  // Four samples at p = 0.5, y = 1.
  const std::vector<std::uint8_t> y{1, 1, 1, 1};
  const std::vector<double> z(4, 0.0);
  const auto fw = FitWeights::from_log_odds(y, z, 1e-5);
  double r = 0, w = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    r += fw.residuals[i];
    w += fw.weights[i];
  }
  CHECK(region_objective(r, w) == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("FitWeights stay in range under clamping") {
  const std::vector<std::uint8_t> y{0, 1, 0, 1};
  const std::vector<double> z{-100, 100, 100, -100};
  const auto fw = FitWeights::from_log_odds(y, z, 1e-5);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(fw.weights[i] > 0.0);
    CHECK(std::abs(fw.residuals[i]) <= 1.0);
  }
}

TEST_CASE("split_gain examples") {
  FitWeights fw{{0.5, 0.5, -0.5, -0.5}, {1, 1, 1, 1}};
  const std::vector<std::uint32_t> region{0, 1, 2, 3};
  const std::vector<std::uint8_t> x{0, 0, 1, 1};
  // Unit weights: each child has residual sum +-1 over weight 2.
  CHECK(split_gain(region, x, fw) == doctest::Approx(1.0));
  // Half weights: child objectives 1 + 1.
  FitWeights unit{{0.5, 0.5, -0.5, -0.5}, {0.5, 0.5, 0.5, 0.5}};
  CHECK(split_gain(region, x, unit) == doctest::Approx(2.0));
  const std::vector<std::uint8_t> constant{1, 1, 1, 1};
  CHECK(split_gain(region, constant, fw) == 0.0);
}

TEST_CASE("split_gain matches the mask oracle and is non-negative") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = 1 + rng() % 40;
    auto p = random_problem(n, 3, rng);
    std::vector<std::uint32_t> region;
    for (std::uint32_t i = 0; i < n; ++i)
      if (rng() % 3) region.push_back(i);
    for (const auto& c : p.columns) {
      const double g = split_gain(region, c, p.fw);
      CHECK(g == doctest::Approx(brute_gain(region, c, p.fw)).epsilon(1e-12).scale(1.0));
      CHECK(g >= -1e-12);
    }
  }
}

TEST_CASE("leaf_value") {
  CHECK(leaf_value(0.5 * 4, 0.25 * 4, 4.0) == 2.0);
  CHECK(leaf_value(0.0, 3.0, 4.0) == 0.0);
  CHECK(leaf_value(100.0, 1.0, 4.0) == 4.0);
  CHECK(leaf_value(-100.0, 1.0, 4.0) == -4.0);
}

TEST_CASE("tree predict") {
  const auto single = RegressionTree::single_leaf(1.5);
  CHECK(single.predict(std::vector<std::uint8_t>{}) == 1.5);
  CHECK(single.predict(std::vector<std::uint8_t>{1, 0, 1}) == 1.5);

  RegressionTree stump;
  stump.nodes = {split_node(2, 1, 2), leaf_node(-1.0), leaf_node(1.0)};
  CHECK(stump.predict(std::vector<std::uint8_t>{0, 0, 1}) == 1.0);
  CHECK(stump.predict(std::vector<std::uint8_t>{1, 1, 0}) == -1.0);
  CHECK_THROWS_AS(stump.predict(std::vector<std::uint8_t>{0, 1}), std::out_of_range);
  CHECK(stump.required_prefix() == 3);
}

TEST_CASE("predict agrees with the region-indicator oracle on random trees") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 1 + rng() % 5;
    const auto tree = testing::random_tree(k, 4, rng);
    REQUIRE_NOTHROW(tree.validate());
    // Conditions defining each leaf's region.
    std::vector<std::pair<std::uint32_t, std::vector<std::pair<std::uint32_t, int>>>> leaves;
    std::vector<std::pair<std::uint32_t, int>> path;
    auto walk = [&](auto&& self, std::uint32_t i) -> void {
      const auto& node = tree.nodes[i];
      if (node.is_leaf()) {
        leaves.emplace_back(i, path);
        return;
      }
      path.emplace_back(node.split_var, 0);
      self(self, node.left);
      path.back().second = 1;
      self(self, node.right);
      path.pop_back();
    };
    walk(walk, 0);
    CHECK(leaves.size() == tree.n_leaves());
    for (std::uint32_t mask = 0; mask < (1u << k); ++mask) {
      std::vector<std::uint8_t> x(k);
      for (std::size_t j = 0; j < k; ++j) x[j] = (mask >> j) & 1u;
      int hits = 0;
      double value = 0.0;
      for (const auto& [leaf, conds] : leaves) {
        bool in = true;
        for (auto [var, bit] : conds) in = in && x[var] == bit;
        if (in) {
          ++hits;
          value = tree.nodes[leaf].gamma;
        }
      }
      CHECK(hits == 1);
      CHECK(tree.predict(x) == value);
    }
  }
}

TEST_CASE("validate rejects malformed trees") {
  RegressionTree repeated;
  repeated.nodes = {split_node(0, 1, 2), split_node(0, 2, 3), leaf_node(0), leaf_node(0), leaf_node(0)};
  CHECK_THROWS_AS(repeated.validate(), InvariantError);

  RegressionTree nan_leaf;
  nan_leaf.nodes = {leaf_node(std::nan(""))};
  CHECK_THROWS_AS(nan_leaf.validate(), InvariantError);

  RegressionTree repeat_on_path;
  repeat_on_path.nodes = {split_node(1, 1, 4), split_node(1, 2, 3), leaf_node(0), leaf_node(0),
                          leaf_node(0)};
  CHECK_THROWS_AS(repeat_on_path.validate(), InvariantError);
}

TEST_CASE("grow_tree with no predictors fits the intercept") {
  const std::vector<std::uint8_t> y{1, 1, 1, 1};
  const std::vector<double> z(4, 0.0);
  const auto fw = FitWeights::from_log_odds(y, z, 1e-5);
  const auto tree = fit_tree({}, fw, TreeParams{});
  REQUIRE(tree.n_leaves() == 1);
  CHECK(tree.nodes[0].gamma == doctest::Approx(2.0));

  const std::vector<std::uint8_t> many{1, 1, 1, 1, 1, 1, 1, 1, 1, 1};
  const std::vector<double> z10(10, 0.0);
  const auto fw10 = FitWeights::from_log_odds(many, z10, 1e-5);
  CHECK(fit_tree({}, fw10, TreeParams{}).nodes[0].gamma == doctest::Approx(2.0));
}

TEST_CASE("greedy tree recovers an XNOR partition") {
  // Cell sizes (x0, x1): 00 -> 4, 01 -> 2, 10 -> 2, 11 -> 1, target x0 == x1.
  // Unequal cell sizes make the root gain strictly positive.
  std::vector<std::uint8_t> x0, x1, y;
  auto add = [&](int a, int b, int count) {
    for (int i = 0; i < count; ++i) {
      x0.push_back(a);
      x1.push_back(b);
      y.push_back(a == b);
    }
  };
  add(0, 0, 4);
  add(0, 1, 2);
  add(1, 0, 2);
  add(1, 1, 1);
  const std::vector<double> z(y.size(), 0.0);
  const auto fw = FitWeights::from_log_odds(y, z, 1e-5);
  const std::vector<BitColumn> preds{x0, x1};
  TreeParams params;
  params.max_leaves = 4;
  const auto fit = grow_tree(preds, fw, params);
  CHECK(fit.tree.n_leaves() == 4);
  const double expected[2][2] = {{2.0, -2.0}, {-2.0, 2.0}};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      CHECK(fit.tree.predict(std::vector<std::uint8_t>{std::uint8_t(a), std::uint8_t(b)}) ==
            doctest::Approx(expected[a][b]));

  // Every two-level structure over {x0, x1} has at most the objective of
  // the four-cell partition; greedy must attain it.
  auto leaf_obj = [&](auto&& in_region) {
    double r = 0, w = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
      if (in_region(i)) {
        r += fw.residuals[i];
        w += fw.weights[i];
      }
    return region_objective(r, w);
  };
  double best = 0.0;
  for (int root = 0; root < 2; ++root) {
    const auto& rc = root == 0 ? x0 : x1;
    const auto& oc = root == 0 ? x1 : x0;
    for (int split_left = 0; split_left < 2; ++split_left)
      for (int split_right = 0; split_right < 2; ++split_right) {
        double obj = 0.0;
        for (int side = 0; side < 2; ++side) {
          const bool split = side == 0 ? split_left : split_right;
          if (!split) {
            obj += leaf_obj([&](std::size_t i) { return rc[i] == side; });
          } else {
            for (int o = 0; o < 2; ++o)
              obj += leaf_obj([&](std::size_t i) { return rc[i] == side && oc[i] == o; });
          }
        }
        best = std::max(best, obj);
      }
  }
  double got = 0.0;
  for (std::size_t leaf = 0; leaf < fit.tree.nodes.size(); ++leaf) {
    if (!fit.tree.nodes[leaf].is_leaf()) continue;
    got += leaf_obj([&](std::size_t i) { return fit.leaf_of_sample[i] == leaf; });
  }
  CHECK(got == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("two-leaf tree splits on the best single variable") {
  std::mt19937_64 rng(3);
  const std::size_t n = 300;
  std::vector<std::vector<std::uint8_t>> cols(6, std::vector<std::uint8_t>(n));
  std::vector<std::uint8_t> y(n);
  std::bernoulli_distribution flip(0.1);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& c : cols) c[i] = rng() & 1u;
    y[i] = cols[3][i] ^ flip(rng);
  }
  const std::vector<double> z(n, 0.0);
  const auto fw = FitWeights::from_log_odds(y, z, 1e-5);
  std::vector<BitColumn> preds(cols.begin(), cols.end());
  std::vector<std::uint32_t> all(n);
  for (std::uint32_t i = 0; i < n; ++i) all[i] = i;
  std::size_t argmax = 0;
  double best = -1.0;
  for (std::size_t v = 0; v < preds.size(); ++v) {
    const double g = brute_gain(all, preds[v], fw);
    if (g > best) {
      best = g;
      argmax = v;
    }
  }
  REQUIRE(argmax == 3);
  TreeParams params;
  params.max_leaves = 2;
  const auto tree = fit_tree(preds, fw, params);
  REQUIRE(tree.n_leaves() == 2);
  CHECK(tree.nodes[0].split_var == 3);
  CHECK(tree.nodes[0].gain == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("ties go to the lowest variable index") {
  // Columns 1 and 2 are identical copies of the signal.
  std::vector<std::uint8_t> noise{0, 1, 0, 1, 0, 1, 0, 1};
  std::vector<std::uint8_t> signal{0, 0, 0, 0, 1, 1, 1, 1};
  std::vector<std::uint8_t> y{0, 0, 0, 1, 1, 1, 1, 1};
  const std::vector<double> z(8, 0.0);
  const auto fw = FitWeights::from_log_odds(y, z, 1e-5);
  const std::vector<BitColumn> preds{noise, signal, signal};
  TreeParams params;
  params.max_leaves = 2;
  CHECK(fit_tree(preds, fw, params).nodes[0].split_var == 1);
}

TEST_CASE("fitted trees respect structure and bookkeeping") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    const auto n = 20 + rng() % 200;
    const auto d = rng() % 7;
    auto p = random_problem(n, d, rng);
    TreeParams params;
    params.max_leaves = 1 + rng() % 16;
    const auto preds = p.predictors();
    const auto fit = grow_tree(preds, p.fw, params);
    CHECK(fit.tree.n_leaves() <= params.max_leaves);
    CHECK_NOTHROW(fit.tree.validate());

    std::vector<double> r(fit.tree.nodes.size()), w(fit.tree.nodes.size());
    for (std::size_t i = 0; i < n; ++i) {
      r[fit.leaf_of_sample[i]] += p.fw.residuals[i];
      w[fit.leaf_of_sample[i]] += p.fw.weights[i];
    }
    double leaf_sum = 0.0;
    for (std::size_t k = 0; k < fit.tree.nodes.size(); ++k)
      if (fit.tree.nodes[k].is_leaf()) leaf_sum += region_objective(r[k], w[k]);
    const double expected = fit.root_objective + fit.tree.total_gain();
    CHECK(std::abs(leaf_sum - expected) <= 1e-9 * std::max(1.0, std::abs(expected)));

    double accrued = 0.0;
    for (const auto& [var, g] : fit.tree.accrued_gain_per_var()) {
      CHECK(var < d);
      accrued += g;
    }
    CHECK(accrued == doctest::Approx(fit.tree.total_gain()).epsilon(1e-12));

    // Routing agrees with the recorded assignment.
    CHECK(route_samples(fit.tree, preds, n) == fit.leaf_of_sample);
  }
}

TEST_CASE("set_leaf_values keeps unreached leaves") {
  RegressionTree stump;
  stump.nodes = {split_node(0, 1, 2), leaf_node(-3.0), leaf_node(0.7)};
  const std::vector<std::uint8_t> x{1, 1};
  const std::vector<std::uint8_t> y{1, 1};
  const std::vector<double> z(2, 0.0);
  const auto fw = FitWeights::from_log_odds(y, z, 1e-5);
  const std::vector<BitColumn> preds{x};
  const auto leaves = route_samples(stump, preds, 2);
  set_leaf_values(stump, leaves, fw, 4.0);
  CHECK(stump.nodes[1].gamma == -3.0);
  CHECK(stump.nodes[2].gamma == doctest::Approx(2.0));
  CHECK_THROWS(set_leaf_values(stump, std::vector<std::uint32_t>{2}, fw, 4.0));
}
