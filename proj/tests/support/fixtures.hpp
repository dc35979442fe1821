#pragma once

// Synthetic datasets with known generating processes, shared by the unit and
// acceptance suites.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "lbarn/data.hpp"
#include "lbarn/network.hpp"
#include "lbarn/tree.hpp"

namespace lbarn::testing {

struct Splits {
  std::string name;
  BinaryDataset train;
  BinaryDataset valid;
  BinaryDataset test;
};

// Rows from a random sparse Bayesian network: column d has up to
// `max_parents` earlier parents and a conditional probability table with
// entries in [0.05, 0.95]. The same `structure_seed` gives the same network.
inline BinaryDataset sample_random_network(std::size_t dims, std::size_t rows,
                                           std::size_t max_parents,
                                           std::uint64_t structure_seed,
                                           std::uint64_t sample_seed) {
  std::mt19937_64 structure(structure_seed);
  std::uniform_real_distribution<double> prob(0.05, 0.95);
  std::vector<std::vector<std::size_t>> parents(dims);
  std::vector<std::vector<double>> tables(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    const std::size_t k = std::min<std::size_t>(d, max_parents);
    std::vector<std::size_t> pool(d);
    for (std::size_t i = 0; i < d; ++i) pool[i] = i;
    std::shuffle(pool.begin(), pool.end(), structure);
    parents[d].assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
    tables[d].resize(std::size_t{1} << k);
    for (auto& p : tables[d]) p = prob(structure);
  }
  std::mt19937_64 rng(sample_seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::uint8_t> values(rows * dims);
  std::vector<std::uint8_t> row(dims);
  for (std::size_t n = 0; n < rows; ++n) {
    for (std::size_t d = 0; d < dims; ++d) {
      std::size_t cell = 0;
      for (std::size_t i = 0; i < parents[d].size(); ++i) cell |= std::size_t{row[parents[d][i]]} << i;
      row[d] = u(rng) < tables[d][cell] ? 1 : 0;
      values[d * rows + n] = row[d];
    }
  }
  return BinaryDataset(rows, dims, std::move(values));
}

inline Splits random_network_splits(const std::string& name, std::size_t dims,
                                    std::size_t max_parents, std::uint64_t seed,
                                    std::size_t n_train = 1000, std::size_t n_valid = 300,
                                    std::size_t n_test = 1000) {
  return Splits{name,
                sample_random_network(dims, n_train, max_parents, seed, seed * 3 + 1)
                    .with_split(Split::kTrain),
                sample_random_network(dims, n_valid, max_parents, seed, seed * 3 + 2)
                    .with_split(Split::kValid),
                sample_random_network(dims, n_test, max_parents, seed, seed * 3 + 3)
                    .with_split(Split::kTest)};
}

// Independent fair coins.
inline BinaryDataset fair_coins(std::size_t dims, std::size_t rows, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> values(rows * dims);
  for (auto& v : values) v = static_cast<std::uint8_t>(rng() & 1u);
  return BinaryDataset(rows, dims, std::move(values));
}

// x0, x1 fair and independent, x2 = x0 XOR x1.
inline BinaryDataset xor_triplet(std::size_t rows, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::uint8_t>> out;
  for (std::size_t n = 0; n < rows; ++n) {
    const auto a = static_cast<std::uint8_t>(rng() & 1u);
    const auto b = static_cast<std::uint8_t>(rng() & 1u);
    out.push_back({a, b, static_cast<std::uint8_t>(a ^ b)});
  }
  return BinaryDataset::from_rows(out);
}

// The fixture family used for "every fixture" properties (all D <= 12).
inline std::vector<Splits> small_fixtures() {
  std::vector<Splits> out;
  out.push_back(random_network_splits("net4", 4, 2, 11, 600, 200, 400));
  out.push_back(random_network_splits("net6", 6, 2, 7));
  out.push_back(random_network_splits("net8", 8, 3, 23));
  out.push_back(random_network_splits("net12", 12, 3, 5, 1500, 400, 800));
  out.push_back(Splits{"coins5", fair_coins(5, 800, 1), fair_coins(5, 200, 2), fair_coins(5, 400, 3)});
  out.push_back(Splits{"xor3", xor_triplet(800, 4), xor_triplet(200, 5), xor_triplet(400, 6)});
  return out;
}

// Leaf with the given value.
inline TreeNode leaf_node(double gamma) {
  TreeNode n;
  n.gamma = gamma;
  return n;
}

inline TreeNode split_node(std::uint32_t var, std::uint32_t left, std::uint32_t right,
                           double gain = 0.0) {
  TreeNode n;
  n.split_var = var;
  n.left = left;
  n.right = right;
  n.gain = gain;
  return n;
}

// Random valid regression tree over `n_predictors` predictors (pre-order).
inline RegressionTree random_tree(std::size_t n_predictors, std::size_t max_depth,
                                  std::mt19937_64& rng) {
  RegressionTree tree;
  std::uniform_real_distribution<double> value(-3.0, 3.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::uint32_t> path;
  auto build = [&](auto&& self, std::size_t depth) -> std::uint32_t {
    const auto idx = static_cast<std::uint32_t>(tree.nodes.size());
    std::vector<std::uint32_t> free_vars;
    for (std::uint32_t v = 0; v < n_predictors; ++v) {
      if (std::find(path.begin(), path.end(), v) == path.end()) free_vars.push_back(v);
    }
    if (depth >= max_depth || free_vars.empty() || u(rng) < 0.3) {
      tree.nodes.push_back(leaf_node(value(rng)));
      return idx;
    }
    const auto var = free_vars[rng() % free_vars.size()];
    tree.nodes.push_back(split_node(var, 0, 0, u(rng)));
    path.push_back(var);
    const auto left = self(self, depth + 1);
    const auto right = self(self, depth + 1);
    path.pop_back();
    tree.nodes[idx].left = left;
    tree.nodes[idx].right = right;
    return idx;
  };
  build(build, 0);
  return tree;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("lbarn_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace lbarn::testing
