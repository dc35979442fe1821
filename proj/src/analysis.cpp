#include "lbarn/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "lbarn/errors.hpp"
#include "lbarn/parallel.hpp"

namespace lbarn {

ImportanceReport variable_importance(const ArnModel& m, std::size_t position) {
  if (position >= m.dims()) throw std::out_of_range("dimension index out of range");
  const auto& cond = m.conditionals[position];
  ImportanceReport report;
  report.target_position = position;
  report.target_column = m.ordering[position];
  for (std::size_t t = 0; t < cond.truncation; ++t) {
    for (const auto& [var, gain] : cond.trees[t].accrued_gain_per_var()) {
      report.gains[m.ordering[var]] += gain;
    }
  }
  for (const auto& [col, gain] : report.gains) report.total_gain += gain;
  if (report.total_gain > 0.0) {
    for (const auto& [col, gain] : report.gains) {
      report.normalized[col] = gain / report.total_gain;
    }
  }
  return report;
}

const char* to_string(EntropyDirection direction) {
  return direction == EntropyDirection::kIncreasing ? "increasing" : "decreasing";
}

double estimate_conditional_entropy(const BinaryDataset& train, std::size_t target,
                                    std::span<const std::size_t> given,
                                    const BoostConfig& probe) {
  PrefixView view;
  view.target = train.column(target);
  for (auto g : given) view.predictors.push_back(train.column(g));
  const BoostResult fit = boost_conditional(view, nullptr, probe);
  return -fit.trace.train_ll.back() / static_cast<double>(train.n_samples());
}

OrderingResult entropy_ordering(const BinaryDataset& train, EntropyDirection direction,
                                const ProbeConfig& cfg) {
  const std::size_t d = train.n_dims();
  std::vector<std::size_t> chosen;
  std::vector<double> entropies;
  std::vector<bool> used(d, false);
  std::mt19937_64 rng(cfg.seed);

  while (chosen.size() < d) {
    std::vector<std::size_t> candidates;
    for (std::size_t v = 0; v < d; ++v) {
      if (!used[v]) candidates.push_back(v);
    }
    if (cfg.max_candidates > 0 && candidates.size() > cfg.max_candidates) {
      std::shuffle(candidates.begin(), candidates.end(), rng);
      candidates.resize(cfg.max_candidates);
      std::sort(candidates.begin(), candidates.end());
    }
    std::vector<double> scores(candidates.size());
    parallel_for(candidates.size(), cfg.workers, [&](std::size_t i) {
      scores[i] = estimate_conditional_entropy(train, candidates[i], chosen, cfg.boost);
    });
    // Candidates are ascending, so strict comparison keeps the lowest index on ties.
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
      if (scores[i] > scores[best]) best = i;
    }
    chosen.push_back(candidates[best]);
    entropies.push_back(scores[best]);
    used[candidates[best]] = true;
  }

  if (direction == EntropyDirection::kDecreasing) {
    std::reverse(chosen.begin(), chosen.end());
    std::reverse(entropies.begin(), entropies.end());
  }
  return OrderingResult{std::move(chosen), std::move(entropies)};
}

BinaryDataset stacked_copies(const BinaryDataset& ds, std::size_t copies, std::uint64_t seed) {
  if (copies == 0) throw ConfigError("need at least one copy");
  const std::size_t n = ds.n_samples();
  const std::size_t d = ds.n_dims();
  std::vector<std::uint8_t> values(n * d * copies);
  for (std::size_t j = 0; j < d; ++j) {
    const auto col = ds.column(j);
    std::copy(col.begin(), col.end(), values.begin() + j * n);
  }
  for (std::size_t c = 1; c < copies; ++c) {
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(c)};
    std::mt19937_64 rng(seq);
    std::shuffle(rows.begin(), rows.end(), rng);
    for (std::size_t j = 0; j < d; ++j) {
      const auto col = ds.column(j);
      auto out = values.begin() + (c * d + j) * n;
      for (std::size_t i = 0; i < n; ++i) out[i] = col[rows[i]];
    }
  }
  return BinaryDataset(n, d * copies, std::move(values), ds.split());
}

std::vector<double> block_log_likelihoods(const ArnModel& m, const BinaryDataset& ds,
                                          std::size_t block_size, std::size_t workers) {
  if (block_size == 0 || m.dims() % block_size != 0) {
    throw ConfigError("block size must divide the model dimension");
  }
  const auto per_position = position_log_probs(m, ds, workers);
  std::vector<double> blocks(m.dims() / block_size, 0.0);
  for (std::size_t k = 0; k < per_position.size(); ++k) {
    double sum = 0.0;
    for (double v : per_position[k]) sum += v;
    blocks[k / block_size] += sum / static_cast<double>(ds.n_samples());
  }
  return blocks;
}

}  // namespace lbarn
