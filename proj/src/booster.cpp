#include "lbarn/booster.hpp"

#include <algorithm>
#include <cmath>

#include "lbarn/errors.hpp"
#include "lbarn/math.hpp"

namespace lbarn {

void BoostConfig::validate() const {
  if (max_leaves == 0) throw ConfigError("number of leaves must be at least 1");
  if (!(shrinkage > 0.0 && shrinkage <= 1.0)) throw ConfigError("shrinkage must lie in (0, 1]");
  if (!(prob_clamp > 0.0 && prob_clamp < 0.5)) {
    throw ConfigError("probability clamp must lie in (0, 0.5)");
  }
  if (!(gamma_cap > 0.0)) throw ConfigError("leaf value cap must be positive");
  if (!(min_leaf_weight > 0.0)) throw ConfigError("minimum leaf weight must be positive");
}

namespace {

double summed_log_likelihood(std::span<const double> log_odds, BitColumn targets) {
  double ll = 0.0;
  for (std::size_t n = 0; n < targets.size(); ++n) {
    ll += bernoulli_log_prob(log_odds[n], targets[n]);
  }
  return ll;
}

}  // namespace

BoostResult boost_conditional(const PrefixView& train, const PrefixView* valid,
                              const BoostConfig& cfg) {
  cfg.validate();
  const std::size_t n = train.n_samples();
  const std::size_t n_valid = valid ? valid->n_samples() : 0;
  if (valid && valid->predictors.size() != train.predictors.size()) {
    throw DataError("train and validation prefixes differ in length");
  }
  const TreeParams params = cfg.tree_params();

  BoostResult result;
  result.model.shrinkage = cfg.shrinkage;
  result.trace.rounds_requested = cfg.rounds;

  std::vector<double> z(n, 0.0);
  std::vector<double> z_valid(n_valid, 0.0);
  result.trace.train_ll.push_back(summed_log_likelihood(z, train.target));
  result.trace.valid_ll.push_back(valid ? summed_log_likelihood(z_valid, valid->target) : 0.0);

  std::size_t stalled = 0;
  for (std::size_t t = 0; t < cfg.rounds; ++t) {
    const FitWeights fw = FitWeights::from_log_odds(train.target, z, cfg.prob_clamp);
    TreeFit fit = grow_tree(train.predictors, fw, params);
    const auto& nodes = fit.tree.nodes;
    for (std::size_t s = 0; s < n; ++s) z[s] += cfg.shrinkage * nodes[fit.leaf_of_sample[s]].gamma;
    for (std::size_t s = 0; s < n_valid; ++s) {
      const auto leaf =
          fit.tree.find_leaf([&](std::uint32_t var) { return valid->predictors[var][s]; });
      z_valid[s] += cfg.shrinkage * nodes[leaf].gamma;
    }
    result.model.trees.push_back(std::move(fit.tree));

    const double train_ll = summed_log_likelihood(z, train.target);
    const double gain = train_ll - result.trace.train_ll.back();
    result.trace.train_ll.push_back(train_ll);
    result.trace.valid_ll.push_back(valid ? summed_log_likelihood(z_valid, valid->target) : 0.0);

    if (cfg.early_exit) {
      stalled = gain < cfg.early_exit_tolerance ? stalled + 1 : 0;
      if (stalled >= cfg.early_exit_patience) break;
    }
  }
  result.model.truncation = result.model.trees.size();
  return result;
}

BoostResult boost_dimension(const BinaryDataset& train, const BinaryDataset& valid,
                            std::span<const std::size_t> ordering, std::size_t position,
                            const BoostConfig& cfg) {
  if (train.n_dims() != valid.n_dims()) {
    throw DataError("train and validation data differ in dimension");
  }
  const PrefixView train_view = column_prefix_view(train, ordering, position);
  const PrefixView valid_view = column_prefix_view(valid, ordering, position);
  BoostResult result = boost_conditional(train_view, &valid_view, cfg);
  result.model.position = position;
  result.model.column = ordering[position];
  result.trace.position = position;
  return result;
}

BoostResult boost_dimension(const BinaryDataset& train, const BinaryDataset& valid,
                            std::size_t position, const BoostConfig& cfg) {
  const auto ordering = natural_ordering(train.n_dims());
  return boost_dimension(train, valid, ordering, position, cfg);
}

double conditional_log_prob(const ConditionalModel& m, std::span<const std::uint8_t> prefix,
                            std::uint8_t bit, std::size_t rounds) {
  if (rounds > m.fitted_rounds()) {
    throw std::out_of_range("requested " + std::to_string(rounds) + " rounds, model has " +
                            std::to_string(m.fitted_rounds()));
  }
  double sum = 0.0;
  for (std::size_t t = 0; t < rounds; ++t) sum += m.trees[t].predict(prefix);
  return bernoulli_log_prob(m.shrinkage * sum, bit);
}

std::vector<double> conditional_log_odds(const ConditionalModel& m, const PrefixView& view,
                                         std::size_t rounds) {
  if (rounds > m.fitted_rounds()) throw std::out_of_range("more rounds than fitted trees");
  std::vector<double> z(view.n_samples(), 0.0);
  for (std::size_t t = 0; t < rounds; ++t) {
    const auto& tree = m.trees[t];
    if (tree.required_prefix() > view.predictors.size()) {
      throw std::out_of_range("tree references predictors beyond the prefix");
    }
    for (std::size_t s = 0; s < z.size(); ++s) {
      z[s] += tree.nodes[tree.find_leaf([&](std::uint32_t var) {
                            return view.predictors[var][s];
                          })].gamma;
    }
  }
  for (auto& v : z) v *= m.shrinkage;
  return z;
}

DerivativeReport newton_derivative_check(std::span<const double> log_odds, BitColumn targets,
                                         double step, double tolerance) {
  if (log_odds.size() != targets.size()) throw DataError("log-odds and targets differ in length");
  DerivativeReport report;
  double residual_mass = 0.0;
  for (std::size_t n = 0; n < targets.size(); ++n) {
    const double p = sigmoid(log_odds[n]);
    report.first_analytic += static_cast<double>(targets[n]) - p;
    residual_mass += std::abs(static_cast<double>(targets[n]) - p);
    report.second_analytic -= p * (1.0 - p);
  }
  // L is additive over samples, so differences are taken per sample and then
  // summed; differencing the full sum would cancel most significant digits.
  for (std::size_t n = 0; n < targets.size(); ++n) {
    const double up = bernoulli_log_prob(log_odds[n] + step, targets[n]);
    const double mid = bernoulli_log_prob(log_odds[n], targets[n]);
    const double down = bernoulli_log_prob(log_odds[n] - step, targets[n]);
    report.first_numeric += (up - down) / (2.0 * step);
    report.second_numeric += (up - 2.0 * mid + down) / (step * step);
  }

  // The gradient is a sum of signed terms; near a stationary point it is
  // measured against the size of those terms, not their cancelled total.
  auto relative = [](double a, double b, double floor) {
    const double scale = std::max({std::abs(a), std::abs(b), floor, 1e-300});
    return std::abs(a - b) / scale;
  };
  report.max_relative_error =
      std::max(relative(report.first_analytic, report.first_numeric, residual_mass),
               relative(report.second_analytic, report.second_numeric, 0.0));
  report.ok = report.max_relative_error < tolerance;
  return report;
}

DerivativeReport newton_derivative_check(const ConditionalModel& m, const PrefixView& samples,
                                         std::size_t rounds, double step, double tolerance) {
  if (rounds == 0) throw ConfigError("derivative check needs rounds >= 1");
  const auto z = conditional_log_odds(m, samples, rounds - 1);
  return newton_derivative_check(z, samples.target, step, tolerance);
}

}  // namespace lbarn
