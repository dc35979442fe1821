#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lbarn/booster.hpp"
#include "lbarn/data.hpp"
#include "lbarn/network.hpp"

namespace lbarn {

enum class SelectionMethod { kIndividual, kCommon, kLinearizedForward, kLinearizedBackward };

const char* to_string(SelectionMethod method);
// Accepts individual, common, linearized-forward, linearized-backward
// ("linearized" alone means forward). Throws ConfigError.
SelectionMethod selection_method_from_string(const std::string& s);

// One activation (forward) or deactivation (backward) along a linearization.
struct LinearizationStep {
  std::size_t position = 0;
  std::size_t round = 0;      // 1-based index of the tree in its dimension
  double train_delta = 0.0;   // change of the joint train log-likelihood
  double train_ll = 0.0;      // joint train log-likelihood after the step
  double valid_ll = 0.0;      // joint validation log-likelihood after the step
};

struct SelectionResult {
  SelectionMethod method = SelectionMethod::kIndividual;
  std::vector<std::size_t> truncations;  // by position
  double valid_ll_at_choice = 0.0;
  // Linearized methods only: the full step sequence and the chosen prefix
  // length s*.
  std::vector<LinearizationStep> linearization;
  std::size_t chosen_step = 0;
};

// Joint validation log-likelihood sum_d valid_ll[d][t_d].
double joint_valid_ll(std::span<const SelectionTrace> traces,
                      std::span<const std::size_t> truncations);

// Per-dimension argmax of the validation trace; ties go to fewer rounds.
SelectionResult select_individual(std::span<const SelectionTrace> traces);

// One round count for all dimensions maximising the summed validation trace.
// Dimensions that stopped early keep their last model for later rounds. Throws
// ConfigError when the dimensions were trained with different round budgets.
SelectionResult select_common(std::span<const SelectionTrace> traces);

enum class LinearizationDirection { kForward, kBackward };

// Greedy global ordering of all trees by train log-likelihood change (largest
// increase first when adding, smallest decrease first when removing; within a
// dimension trees follow boosting order; ties go to the lower position), then
// the prefix with the best joint validation log-likelihood (ties: smaller s).
SelectionResult select_linearized(std::span<const SelectionTrace> traces,
                                  LinearizationDirection direction);

SelectionResult select(std::span<const SelectionTrace> traces, SelectionMethod method);

// Re-estimates every leaf value on `pooled` with tree structures fixed,
// replaying rounds in order so round t sees the pooled-data probabilities
// after t - 1 rounds. Truncations are kept. Single-tree networks recompute the
// smoothed leaf frequencies instead.
ArnModel refit_leaves(const ArnModel& m, const BinaryDataset& pooled, std::size_t workers = 1);

}  // namespace lbarn
