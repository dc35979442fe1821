#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "lbarn/analysis.hpp"
#include "lbarn/booster.hpp"
#include "lbarn/data.hpp"
#include "lbarn/model_io.hpp"
#include "lbarn/network.hpp"
#include "lbarn/selection.hpp"

namespace lbarn {

enum class OrderingMode { kNatural, kFile, kEntropyIncreasing, kEntropyDecreasing };

struct RunConfig {
  std::filesystem::path train;
  std::filesystem::path valid;
  std::filesystem::path test;
  std::filesystem::path model;
  std::filesystem::path order_file;

  // Several values trigger a scan; the best validation result is kept.
  std::vector<std::size_t> leaves{8};
  double shrinkage = 0.02;
  std::size_t rounds = 1000;
  double prob_clamp = 1e-5;
  double gamma_cap = 4.0;
  double min_leaf_weight = 1e-4;
  // Single-tree baseline: smoothing grid, chosen on validation.
  std::vector<double> pseudocounts{0.1, 0.5, 1.0, 2.0};

  SelectionMethod selection = SelectionMethod::kIndividual;
  OrderingMode ordering = OrderingMode::kNatural;
  ProbeConfig probe;
  std::uint64_t seed = 0;
  std::size_t workers = 0;  // 0: hardware concurrency
  bool refit = false;
  bool baseline_tree = false;
  bool early_exit = true;
  std::string dataset_name;

  BoostConfig boost_config(std::size_t max_leaves) const;
  // Throws ConfigError.
  void validate() const;
  nlohmann::json to_json() const;
};

// "natural", "file:PATH", "entropy-increasing", "entropy-decreasing".
void parse_ordering_mode(const std::string& spec, RunConfig& cfg);

struct TrainedNetwork {
  ArnModel model;
  std::vector<SelectionTrace> traces;  // empty for single-tree networks
  SelectionResult selection;
};

// Boosts every position independently (parallel over positions), then applies
// the selection method.
TrainedNetwork train_logitboost(const BinaryDataset& train, const BinaryDataset& valid,
                                std::span<const std::size_t> ordering, const BoostConfig& cfg,
                                SelectionMethod method, std::size_t workers);

// One probability estimation tree per position. Each tree's leaf count
// (1..max_leaves) is chosen on validation; the pseudocount is shared by all
// trees and chosen from `pseudocounts` on the summed validation likelihood.
TrainedNetwork train_single_tree_network(const BinaryDataset& train, const BinaryDataset& valid,
                                         std::span<const std::size_t> ordering,
                                         std::size_t max_leaves,
                                         std::span<const double> pseudocounts,
                                         std::size_t workers);

struct LikelihoodSummary {
  double mean = 0.0;
  double standard_error = 0.0;  // sample stdev / sqrt(N)
  std::size_t count = 0;
};

LikelihoodSummary summarize(std::span<const double> per_sample);

LikelihoodSummary evaluate(const ArnModel& m, const BinaryDataset& ds, std::size_t workers = 1);

std::vector<std::size_t> resolve_ordering(const RunConfig& cfg, const BinaryDataset& train);

struct RunOutcome {
  ModelFile model_file;
  nlohmann::json report;
};

// Full train command: load splits, resolve the ordering, train (scanning
// leaves when several are given), select, optionally refit on train + valid,
// and evaluate on the test split when one is configured.
RunOutcome run_training(const RunConfig& cfg);

}  // namespace lbarn
