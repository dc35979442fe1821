#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lbarn/data.hpp"
#include "lbarn/tree.hpp"

namespace lbarn {

struct BoostConfig {
  std::size_t rounds = 1000;
  std::size_t max_leaves = 8;
  double shrinkage = 0.02;
  // Probabilities are clamped to [prob_clamp, 1 - prob_clamp] when forming
  // residuals and weights.
  double prob_clamp = 1e-5;
  double gamma_cap = 4.0;
  double min_leaf_weight = 1e-4;
  // Stop a dimension after `early_exit_patience` consecutive rounds whose
  // train log-likelihood gain is below `early_exit_tolerance`.
  bool early_exit = true;
  std::size_t early_exit_patience = 25;
  double early_exit_tolerance = 1e-9;

  TreeParams tree_params() const {
    return TreeParams{max_leaves, min_leaf_weight, gamma_cap, 0.0};
  }
  // Throws ConfigError on out-of-range values.
  void validate() const;
};

// LogitBoost model of one conditional P(x_target | prefix). Log-odds with t
// active trees is shrinkage * sum of the first t trees; with t = 0 it is 0.
struct ConditionalModel {
  std::size_t position = 0;  // index in the model ordering
  std::size_t column = 0;    // original dataset column of the target
  double shrinkage = 1.0;
  std::vector<RegressionTree> trees;
  std::size_t truncation = 0;  // active trees

  std::size_t fitted_rounds() const { return trees.size(); }

  template <class BitAt>
  double log_odds(BitAt&& bit_at, std::size_t rounds) const {
    double sum = 0.0;
    for (std::size_t t = 0; t < rounds; ++t) {
      const auto& tree = trees[t];
      sum += tree.nodes[tree.find_leaf(bit_at)].gamma;
    }
    return shrinkage * sum;
  }

  template <class BitAt>
  double log_odds(BitAt&& bit_at) const {
    return log_odds(bit_at, truncation);
  }
};

// Summed train / validation log-likelihood of one conditional after every
// round t = 0..fitted_rounds().
struct SelectionTrace {
  std::size_t position = 0;
  std::size_t rounds_requested = 0;
  std::vector<double> train_ll;
  std::vector<double> valid_ll;

  std::size_t fitted_rounds() const { return train_ll.empty() ? 0 : train_ll.size() - 1; }
};

struct BoostResult {
  ConditionalModel model;  // truncation = fitted_rounds()
  SelectionTrace trace;
};

// LogitBoost on one conditional. `valid` may be empty (no validation trace,
// valid_ll stays all-zero).
BoostResult boost_conditional(const PrefixView& train, const PrefixView* valid,
                              const BoostConfig& cfg);

BoostResult boost_dimension(const BinaryDataset& train, const BinaryDataset& valid,
                            std::span<const std::size_t> ordering, std::size_t position,
                            const BoostConfig& cfg);

// Natural ordering.
BoostResult boost_dimension(const BinaryDataset& train, const BinaryDataset& valid,
                            std::size_t position, const BoostConfig& cfg);

// log P_t(x_d = bit | prefix). Requires t <= fitted_rounds().
double conditional_log_prob(const ConditionalModel& m, std::span<const std::uint8_t> prefix,
                            std::uint8_t bit, std::size_t rounds);

// Per-sample log-odds of the first `rounds` trees on a prefix view.
std::vector<double> conditional_log_odds(const ConditionalModel& m, const PrefixView& view,
                                         std::size_t rounds);

// Analytic vs. central finite-difference derivatives of
// L(delta) = sum_n log P(y_n | z_n + delta) at delta = 0, where z_n are the
// log-odds after rounds - 1 trees (the quantities driving round `rounds`).
struct DerivativeReport {
  double first_analytic = 0.0;
  double first_numeric = 0.0;
  double second_analytic = 0.0;
  double second_numeric = 0.0;
  double max_relative_error = 0.0;
  bool ok = false;
};

DerivativeReport newton_derivative_check(std::span<const double> log_odds,
                                         BitColumn targets, double step = 1e-4,
                                         double tolerance = 1e-5);

DerivativeReport newton_derivative_check(const ConditionalModel& m, const PrefixView& samples,
                                         std::size_t rounds, double step = 1e-4,
                                         double tolerance = 1e-5);

}  // namespace lbarn
