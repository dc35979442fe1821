#include <cmath>
#include <random>

#include "doctest.h"
#include "lbarn/errors.hpp"
#include "lbarn/math.hpp"
#include "lbarn/network.hpp"
#include "lbarn/pipeline.hpp"
#include "support/fixtures.hpp"

using namespace lbarn;
using testing::leaf_node;
using testing::split_node;

namespace {

ConditionalModel conditional(std::size_t position, std::size_t column,
                             std::vector<TreeNode> nodes, double shrinkage = 1.0) {
  ConditionalModel c;
  c.position = position;
  c.column = column;
  c.shrinkage = shrinkage;
  RegressionTree tree;
  tree.nodes = std::move(nodes);
  c.trees.push_back(tree);
  c.truncation = 1;
  return c;
}

// Column 2 first, then column 1 given column 2, then column 0 given both.
ArnModel reversed_model() {
  ArnModel m;
  m.ordering = {2, 1, 0};
  m.conditionals.push_back(conditional(0, 2, {leaf_node(1.0)}));
  m.conditionals.push_back(conditional(1, 1, {split_node(0, 1, 2), leaf_node(-2.0), leaf_node(3.0)}));
  m.conditionals.push_back(conditional(2, 0, {split_node(1, 1, 2), leaf_node(0.5), leaf_node(-1.5)}));
  return m;
}

double sum_exp_over_all_rows(const ArnModel& m) {
  const auto d = m.dims();
  double total = 0.0;
  std::vector<std::uint8_t> x(d);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << d); ++mask) {
    for (std::size_t j = 0; j < d; ++j) x[j] = (mask >> j) & 1u;
    total += std::exp(joint_log_likelihood(m, x));
  }
  return total;
}

ArnModel trained(const testing::Splits& fx, std::vector<std::size_t> ordering, std::size_t rounds) {
  BoostConfig cfg;
  cfg.rounds = rounds;
  cfg.shrinkage = 0.1;
  cfg.max_leaves = 4;
  return train_logitboost(fx.train, fx.valid, ordering, cfg, SelectionMethod::kIndividual, 1).model;
}

}  // namespace

TEST_CASE("base model") {
  const auto m = base_model(5);
  CHECK_NOTHROW(m.validate());
  const std::vector<std::uint8_t> x{1, 0, 0, 1, 1};
  CHECK(joint_log_likelihood(m, x) == doctest::Approx(5 * std::log(0.5)).epsilon(1e-15));
  CHECK_THROWS(joint_log_likelihood(m, std::vector<std::uint8_t>{1, 0}));
}

TEST_CASE("two-dimensional hand product") {
  auto m = base_model(2);
  m.conditionals[0].trees.push_back(RegressionTree::single_leaf(std::log(3.0)));
  m.conditionals[0].shrinkage = 1.0;
  m.conditionals[0].truncation = 1;
  for (std::uint8_t b : {0, 1})
    CHECK(joint_log_likelihood(m, std::vector<std::uint8_t>{1, b}) ==
          doctest::Approx(std::log(0.75) + std::log(0.5)).epsilon(1e-14));
}

TEST_CASE("permuted models read the permuted prefix") {
  const auto m = reversed_model();
  REQUIRE_NOTHROW(m.validate());
  for (std::uint32_t mask = 0; mask < 8; ++mask) {
    const std::uint8_t x0 = mask & 1, x1 = (mask >> 1) & 1, x2 = (mask >> 2) & 1;
    const double expected = bernoulli_log_prob(1.0, x2) +
                            bernoulli_log_prob(x2 ? 3.0 : -2.0, x1) +
                            bernoulli_log_prob(x1 ? -1.5 : 0.5, x0);
    CHECK(joint_log_likelihood(m, std::vector<std::uint8_t>{x0, x1, x2}) ==
          doctest::Approx(expected).epsilon(1e-14));
  }
  CHECK(sum_exp_over_all_rows(m) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("validate catches inconsistent networks") {
  auto m = reversed_model();
  m.ordering = {0, 0, 1};
  CHECK_THROWS_AS(m.validate(), InvariantError);
  m = reversed_model();
  m.conditionals[1].trees[0].nodes[0].split_var = 1;  // reads its own position
  CHECK_THROWS_AS(m.validate(), InvariantError);
  m = reversed_model();
  m.conditionals[0].truncation = 2;
  CHECK_THROWS_AS(m.validate(), InvariantError);
}

TEST_CASE("trained networks normalize") {
  for (const auto& fx : testing::small_fixtures()) {
    const auto d = fx.train.n_dims();
    auto ordering = natural_ordering(d);
    std::mt19937_64 rng(d);
    std::shuffle(ordering.begin(), ordering.end(), rng);
    const auto m = trained(fx, ordering, 15);
    CHECK(std::abs(sum_exp_over_all_rows(m) - 1.0) <= 1e-9);
  }
}

TEST_CASE("dataset likelihoods agree with per-row evaluation") {
  const auto fx = testing::random_network_splits("net", 6, 2, 31, 300, 100, 200);
  const auto m = trained(fx, {3, 1, 5, 0, 2, 4}, 20);
  const auto lls = dataset_log_likelihoods(m, fx.test, 3);
  const auto by_pos = position_log_probs(m, fx.test, 1);
  for (std::size_t n = 0; n < fx.test.n_samples(); ++n) {
    const double joint = joint_log_likelihood(m, fx.test.row(n));
    CHECK(lls[n] == doctest::Approx(joint).epsilon(1e-13));
    double s = 0.0;
    for (const auto& pos : by_pos) s += pos[n];
    CHECK(s == doctest::Approx(joint).epsilon(1e-13));
  }
}

TEST_CASE("cumulative log-likelihood") {
  const auto fx = testing::random_network_splits("net", 6, 2, 31, 300, 100, 200);
  SUBCASE("base model") {
    const auto cum = cumulative_log_likelihood(base_model(6), fx.test);
    for (std::size_t k = 0; k < 6; ++k)
      CHECK(cum[k] == doctest::Approx((k + 1) * std::log(0.5)).epsilon(1e-14));
  }
  SUBCASE("trained model") {
    const auto m = trained(fx, natural_ordering(6), 20);
    const auto cum = cumulative_log_likelihood(m, fx.test, 2);
    REQUIRE(cum.size() == 6);
    for (std::size_t k = 1; k < 6; ++k) CHECK(cum[k] <= cum[k - 1]);
    const auto lls = dataset_log_likelihoods(m, fx.test);
    double mean = 0.0;
    for (double v : lls) mean += v;
    mean /= static_cast<double>(lls.size());
    CHECK(std::abs(cum.back() - mean) <= 1e-12);
  }
}

TEST_CASE("sampling") {
  SUBCASE("base model marginals") {
    const auto s = sample(base_model(6), 123, 10000);
    CHECK(s.n_samples() == 10000);
    for (std::size_t d = 0; d < 6; ++d) {
      double ones = 0;
      for (auto v : s.column(d)) ones += v;
      CHECK(std::abs(ones / 10000 - 0.5) <= 0.02);
    }
  }
  SUBCASE("fixed seed is reproducible") {
    const auto m = reversed_model();
    CHECK(sample(m, 77, 500) == sample(m, 77, 500));
    CHECK(!(sample(m, 77, 500) == sample(m, 78, 500)));
  }
  SUBCASE("joint frequencies match exact probabilities") {
    ArnModel m;
    m.ordering = {1, 0};
    m.conditionals.push_back(conditional(0, 1, {leaf_node(0.8)}));
    m.conditionals.push_back(conditional(1, 0, {split_node(0, 1, 2), leaf_node(-1.2), leaf_node(2.0)}));
    const std::size_t n = 100000;
    const auto s = sample(m, 2024, n);
    double counts[4] = {0, 0, 0, 0};
    for (std::size_t i = 0; i < n; ++i) counts[s(i, 0) + 2 * s(i, 1)] += 1;
    for (std::uint8_t cell = 0; cell < 4; ++cell) {
      const double p = std::exp(joint_log_likelihood(
          m, std::vector<std::uint8_t>{std::uint8_t(cell & 1), std::uint8_t(cell >> 1)}));
      const double sigma = std::sqrt(n * p * (1 - p));
      CHECK(std::abs(counts[cell] - n * p) <= 3 * sigma);
    }
  }
}

TEST_CASE("imputation") {
  const auto m = reversed_model();
  SUBCASE("nothing missing") {
    const PartialRow row{1, 0, 1};
    const auto out = impute(m, row, 5, 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(out.row(i) == std::vector<std::uint8_t>{1, 0, 1});
  }
  SUBCASE("everything missing behaves like sampling") {
    const PartialRow row(3);
    const auto a = impute(m, row, 9, 40000);
    const auto b = sample(m, 10, 40000);
    for (std::size_t d = 0; d < 3; ++d) {
      double fa = 0, fb = 0;
      for (auto v : a.column(d)) fa += v;
      for (auto v : b.column(d)) fb += v;
      CHECK(std::abs(fa - fb) / 40000 < 0.02);
    }
  }
  SUBCASE("completed coordinate follows its conditional") {
    // Observed: columns 2 and 1 (the first two positions).
    const PartialRow row{std::nullopt, 1, 0};
    const std::size_t n = 100000;
    const auto out = impute(m, row, 31, n);
    double ones = 0;
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(out(i, 1) == 1);
      CHECK(out(i, 2) == 0);
      ones += out(i, 0);
    }
    const double p = sigmoid(-1.5);
    CHECK(std::abs(ones - n * p) <= 3 * std::sqrt(n * p * (1 - p)));
  }
  SUBCASE("observations outside an ordering prefix are rejected") {
    const PartialRow row{1, std::nullopt, std::nullopt};
    CHECK_THROWS_AS(impute(m, row, 1, 1), ConfigError);
    CHECK_THROWS_AS(impute(m, PartialRow{1, 0}, 1, 1), DataError);
  }
}
