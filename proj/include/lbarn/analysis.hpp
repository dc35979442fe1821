#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lbarn/booster.hpp"
#include "lbarn/data.hpp"
#include "lbarn/network.hpp"

namespace lbarn {

// Split gains of one conditional's active trees, keyed by original column.
struct ImportanceReport {
  std::size_t target_position = 0;
  std::size_t target_column = 0;
  std::map<std::size_t, double> gains;
  std::map<std::size_t, double> normalized;  // empty when total_gain == 0
  double total_gain = 0.0;

  bool empty() const { return normalized.empty(); }
};

ImportanceReport variable_importance(const ArnModel& m, std::size_t position);

// kIncreasing is the greedy sequence itself: each step adds the variable with
// the highest estimated entropy given the variables already chosen, so the
// conditional entropies along the permutation fall off towards the end.
// kDecreasing is that sequence reversed.
enum class EntropyDirection { kIncreasing, kDecreasing };

const char* to_string(EntropyDirection direction);

struct ProbeConfig {
  BoostConfig boost{.rounds = 50, .max_leaves = 4, .shrinkage = 0.1};
  // When non-zero, each greedy step scores only this many randomly chosen
  // candidates.
  std::size_t max_candidates = 0;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

struct OrderingResult {
  std::vector<std::size_t> permutation;
  // Estimated conditional entropy (nats) recorded when each variable was
  // chosen, listed in permutation order.
  std::vector<double> per_step_entropy;
};

// Plug-in estimate of H(x_target | x_given): the average train negative
// log-likelihood of a small LogitBoost probe.
double estimate_conditional_entropy(const BinaryDataset& train, std::size_t target,
                                    std::span<const std::size_t> given, const BoostConfig& probe);

OrderingResult entropy_ordering(const BinaryDataset& train, EntropyDirection direction,
                                const ProbeConfig& cfg = {});

// N x (k D) dataset: the original columns followed by k - 1 copies whose rows
// are independently shuffled. Copies are seeded from (seed, copy index).
BinaryDataset stacked_copies(const BinaryDataset& ds, std::size_t copies, std::uint64_t seed);

// Average log-likelihood contributed by each block of `block_size`
// consecutive positions.
std::vector<double> block_log_likelihoods(const ArnModel& m, const BinaryDataset& ds,
                                          std::size_t block_size, std::size_t workers = 1);

}  // namespace lbarn
