#include "lbarn/network.hpp"

#include <random>
#include <string>

#include "lbarn/errors.hpp"
#include "lbarn/math.hpp"
#include "lbarn/parallel.hpp"

namespace lbarn {

const char* to_string(ConditionalKind kind) {
  return kind == ConditionalKind::kSingleTree ? "single-tree" : "logitboost";
}

ConditionalKind conditional_kind_from_string(const std::string& s) {
  if (s == "logitboost") return ConditionalKind::kLogitBoost;
  if (s == "single-tree") return ConditionalKind::kSingleTree;
  throw DataError("unknown conditional kind '" + s + "'");
}

std::vector<std::size_t> ArnModel::truncations() const {
  std::vector<std::size_t> out;
  out.reserve(conditionals.size());
  for (const auto& c : conditionals) out.push_back(c.truncation);
  return out;
}

void ArnModel::set_truncations(std::span<const std::size_t> truncations) {
  if (truncations.size() != conditionals.size()) {
    throw InvariantError("truncation count does not match model dimension");
  }
  for (std::size_t k = 0; k < conditionals.size(); ++k) {
    if (truncations[k] > conditionals[k].fitted_rounds()) {
      throw InvariantError("truncation " + std::to_string(truncations[k]) + " at position " +
                           std::to_string(k) + " exceeds fitted rounds");
    }
    conditionals[k].truncation = truncations[k];
  }
}

void ArnModel::validate() const {
  try {
    check_permutation(ordering, ordering.size());
  } catch (const DataError& e) {
    throw InvariantError(e.what());
  }
  if (ordering.empty()) throw InvariantError("model has no dimensions");
  if (conditionals.size() != ordering.size()) {
    throw InvariantError("model has " + std::to_string(conditionals.size()) +
                         " conditionals for " + std::to_string(ordering.size()) + " dimensions");
  }
  for (std::size_t k = 0; k < conditionals.size(); ++k) {
    const auto& c = conditionals[k];
    if (c.position != k || c.column != ordering[k]) {
      throw InvariantError("conditional " + std::to_string(k) + " does not match ordering");
    }
    if (c.truncation > c.fitted_rounds()) {
      throw InvariantError("truncation exceeds fitted rounds at position " + std::to_string(k));
    }
    if (!(c.shrinkage > 0.0)) throw InvariantError("non-positive shrinkage");
    for (const auto& tree : c.trees) {
      tree.validate();
      if (tree.required_prefix() > k) {
        throw InvariantError("tree at position " + std::to_string(k) +
                             " reads a later dimension");
      }
    }
  }
}

ArnModel base_model(std::size_t dims) {
  ArnModel m;
  m.ordering = natural_ordering(dims);
  m.conditionals.resize(dims);
  for (std::size_t k = 0; k < dims; ++k) {
    m.conditionals[k].position = k;
    m.conditionals[k].column = k;
  }
  return m;
}

double joint_log_likelihood(const ArnModel& m, std::span<const std::uint8_t> x) {
  if (x.size() != m.dims()) {
    throw DataError("vector has " + std::to_string(x.size()) + " entries, model expects " +
                    std::to_string(m.dims()));
  }
  std::vector<std::uint8_t> permuted(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) permuted[k] = x[m.ordering[k]];
  double ll = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const auto& c = m.conditionals[k];
    ll += conditional_log_prob(c, std::span(permuted).first(k), permuted[k], c.truncation);
  }
  return ll;
}

std::vector<std::vector<double>> position_log_probs(const ArnModel& m, const BinaryDataset& ds,
                                                    std::size_t workers) {
  if (ds.n_dims() != m.dims()) {
    throw DataError("dataset has " + std::to_string(ds.n_dims()) + " dimensions, model expects " +
                    std::to_string(m.dims()));
  }
  std::vector<std::vector<double>> out(m.dims());
  parallel_for(m.dims(), workers, [&](std::size_t k) {
    const auto& c = m.conditionals[k];
    const BitColumn target = ds.column(m.ordering[k]);
    auto& row_ll = out[k];
    row_ll.resize(ds.n_samples());
    for (std::size_t n = 0; n < ds.n_samples(); ++n) {
      const double z =
          c.log_odds([&](std::uint32_t var) { return ds(n, m.ordering[var]); });
      row_ll[n] = bernoulli_log_prob(z, target[n]);
    }
  });
  return out;
}

std::vector<double> dataset_log_likelihoods(const ArnModel& m, const BinaryDataset& ds,
                                            std::size_t workers) {
  const auto per_position = position_log_probs(m, ds, workers);
  std::vector<double> ll(ds.n_samples(), 0.0);
  for (const auto& row_ll : per_position) {
    for (std::size_t n = 0; n < ll.size(); ++n) ll[n] += row_ll[n];
  }
  return ll;
}

std::vector<double> cumulative_log_likelihood(const ArnModel& m, const BinaryDataset& ds,
                                              std::size_t workers) {
  const auto per_position = position_log_probs(m, ds, workers);
  std::vector<double> running(ds.n_samples(), 0.0);
  std::vector<double> out;
  out.reserve(m.dims());
  for (const auto& row_ll : per_position) {
    double total = 0.0;
    for (std::size_t n = 0; n < running.size(); ++n) {
      running[n] += row_ll[n];
      total += running[n];
    }
    out.push_back(total / static_cast<double>(ds.n_samples()));
  }
  return out;
}

namespace {

// Fills permuted[from..D) by ancestral sampling given permuted[0..from).
void complete_row(const ArnModel& m, std::vector<std::uint8_t>& permuted, std::size_t from,
                  std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (std::size_t k = from; k < m.dims(); ++k) {
    const double z = m.conditionals[k].log_odds([&](std::uint32_t var) { return permuted[var]; });
    permuted[k] = uniform(rng) < sigmoid(z) ? 1 : 0;
  }
}

}  // namespace

BinaryDataset sample(const ArnModel& m, std::uint64_t seed, std::size_t count) {
  if (count == 0) throw ConfigError("sample count must be at least 1");
  const std::size_t d = m.dims();
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> values(count * d);
  std::vector<std::uint8_t> permuted(d);
  for (std::size_t n = 0; n < count; ++n) {
    complete_row(m, permuted, 0, rng);
    for (std::size_t k = 0; k < d; ++k) values[m.ordering[k] * count + n] = permuted[k];
  }
  return BinaryDataset(count, d, std::move(values));
}

BinaryDataset impute(const ArnModel& m, std::span<const std::optional<std::uint8_t>> partial,
                     std::uint64_t seed, std::size_t count) {
  const std::size_t d = m.dims();
  if (partial.size() != d) {
    throw DataError("partial row has " + std::to_string(partial.size()) +
                    " entries, model expects " + std::to_string(d));
  }
  if (count == 0) throw ConfigError("sample count must be at least 1");
  std::vector<std::uint8_t> prefix;
  std::size_t observed = 0;
  while (observed < d && partial[m.ordering[observed]].has_value()) {
    const auto bit = *partial[m.ordering[observed]];
    if (bit > 1) throw DataError("observed value outside {0,1}");
    prefix.push_back(bit);
    ++observed;
  }
  for (std::size_t k = observed; k < d; ++k) {
    if (partial[m.ordering[k]].has_value()) {
      throw ConfigError(
          "observed entries must occupy a prefix of the model ordering (column " +
          std::to_string(m.ordering[k]) +
          " is observed after a missing one); train with an ordering that places the observed "
          "columns first");
    }
  }

  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> values(count * d);
  std::vector<std::uint8_t> permuted(d);
  for (std::size_t n = 0; n < count; ++n) {
    std::copy(prefix.begin(), prefix.end(), permuted.begin());
    complete_row(m, permuted, observed, rng);
    for (std::size_t k = 0; k < d; ++k) values[m.ordering[k] * count + n] = permuted[k];
  }
  return BinaryDataset(count, d, std::move(values));
}

}  // namespace lbarn
