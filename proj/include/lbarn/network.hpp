#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lbarn/booster.hpp"
#include "lbarn/data.hpp"

namespace lbarn {

enum class ConditionalKind { kLogitBoost, kSingleTree };

const char* to_string(ConditionalKind kind);
ConditionalKind conditional_kind_from_string(const std::string& s);

struct ModelMetadata {
  ConditionalKind kind = ConditionalKind::kLogitBoost;
  std::size_t max_leaves = 0;
  double shrinkage = 0.0;
  double prob_clamp = 1e-5;
  double gamma_cap = 4.0;
  double pseudocount = 0.0;  // single-tree networks only
  std::string dataset;
  std::string selection;
};

// Autoregressive network: conditionals[k] models column ordering[k] given
// columns ordering[0..k). Datasets stay in original column order; the
// permutation is applied when rows are read.
struct ArnModel {
  std::vector<std::size_t> ordering;
  std::vector<ConditionalModel> conditionals;
  ModelMetadata metadata;

  std::size_t dims() const { return ordering.size(); }

  // Active tree counts by position.
  std::vector<std::size_t> truncations() const;
  void set_truncations(std::span<const std::size_t> truncations);

  // Bijective ordering, positions/columns consistent, every tree of position
  // k reads only predictors < k, truncations within fitted rounds.
  // Throws InvariantError.
  void validate() const;
};

// Model with no trees: every conditional is Bernoulli(1/2).
ArnModel base_model(std::size_t dims);

double joint_log_likelihood(const ArnModel& m, std::span<const std::uint8_t> x);

// Log-probability of every (position, row): result[k][n].
std::vector<std::vector<double>> position_log_probs(const ArnModel& m, const BinaryDataset& ds,
                                                    std::size_t workers = 1);

// Joint log-likelihood of every row.
std::vector<double> dataset_log_likelihoods(const ArnModel& m, const BinaryDataset& ds,
                                            std::size_t workers = 1);

// Entry k is the dataset average of the summed log-probabilities of positions
// 0..k; the last entry is the average joint log-likelihood.
std::vector<double> cumulative_log_likelihood(const ArnModel& m, const BinaryDataset& ds,
                                              std::size_t workers = 1);

// Ancestral sampling in ordering order; deterministic given the seed.
BinaryDataset sample(const ArnModel& m, std::uint64_t seed, std::size_t count);

using PartialRow = std::vector<std::optional<std::uint8_t>>;

// Completes a partially observed row `count` times. Observed entries must be
// exactly the columns ordering[0..m) for some m; anything else throws
// ConfigError.
BinaryDataset impute(const ArnModel& m, std::span<const std::optional<std::uint8_t>> partial,
                     std::uint64_t seed, std::size_t count);

}  // namespace lbarn
