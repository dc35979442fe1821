#include "lbarn/selection.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>

#include "lbarn/errors.hpp"
#include "lbarn/parallel.hpp"

namespace lbarn {

const char* to_string(SelectionMethod method) {
  switch (method) {
    case SelectionMethod::kIndividual:
      return "individual";
    case SelectionMethod::kCommon:
      return "common";
    case SelectionMethod::kLinearizedForward:
      return "linearized-forward";
    case SelectionMethod::kLinearizedBackward:
      return "linearized-backward";
  }
  return "individual";
}

SelectionMethod selection_method_from_string(const std::string& s) {
  if (s == "individual") return SelectionMethod::kIndividual;
  if (s == "common") return SelectionMethod::kCommon;
  if (s == "linearized" || s == "linearized-forward") return SelectionMethod::kLinearizedForward;
  if (s == "linearized-backward") return SelectionMethod::kLinearizedBackward;
  throw ConfigError("unknown selection method '" + s + "'");
}

double joint_valid_ll(std::span<const SelectionTrace> traces,
                      std::span<const std::size_t> truncations) {
  if (traces.size() != truncations.size()) {
    throw InvariantError("truncations do not match traces");
  }
  double total = 0.0;
  for (std::size_t d = 0; d < traces.size(); ++d) total += traces[d].valid_ll.at(truncations[d]);
  return total;
}

namespace {

void check_traces(std::span<const SelectionTrace> traces) {
  if (traces.empty()) throw ConfigError("no selection traces");
  for (const auto& tr : traces) {
    if (tr.train_ll.empty() || tr.train_ll.size() != tr.valid_ll.size()) {
      throw InvariantError("incomplete selection trace at position " +
                           std::to_string(tr.position));
    }
  }
}

}  // namespace

SelectionResult select_individual(std::span<const SelectionTrace> traces) {
  check_traces(traces);
  SelectionResult result;
  result.method = SelectionMethod::kIndividual;
  for (const auto& tr : traces) {
    std::size_t best = 0;
    for (std::size_t t = 1; t < tr.valid_ll.size(); ++t) {
      if (tr.valid_ll[t] > tr.valid_ll[best]) best = t;
    }
    result.truncations.push_back(best);
  }
  result.valid_ll_at_choice = joint_valid_ll(traces, result.truncations);
  return result;
}

SelectionResult select_common(std::span<const SelectionTrace> traces) {
  check_traces(traces);
  std::size_t longest = 0;
  for (const auto& tr : traces) {
    if (tr.rounds_requested != traces.front().rounds_requested) {
      throw ConfigError("common selection needs every dimension trained with the same number "
                        "of rounds");
    }
    longest = std::max(longest, tr.fitted_rounds());
  }
  std::vector<double> sums(longest + 1, 0.0);
  for (const auto& tr : traces) {
    for (std::size_t t = 0; t <= longest; ++t) {
      sums[t] += tr.valid_ll[std::min(t, tr.fitted_rounds())];
    }
  }
  std::size_t best = 0;
  for (std::size_t t = 1; t <= longest; ++t) {
    if (sums[t] > sums[best]) best = t;
  }
  SelectionResult result;
  result.method = SelectionMethod::kCommon;
  for (const auto& tr : traces) result.truncations.push_back(std::min(best, tr.fitted_rounds()));
  result.valid_ll_at_choice = joint_valid_ll(traces, result.truncations);
  return result;
}

SelectionResult select_linearized(std::span<const SelectionTrace> traces,
                                  LinearizationDirection direction) {
  check_traces(traces);
  const bool forward = direction == LinearizationDirection::kForward;
  const std::size_t dims = traces.size();

  std::vector<std::size_t> active(dims);
  double train = 0.0;
  double valid = 0.0;
  for (std::size_t d = 0; d < dims; ++d) {
    active[d] = forward ? 0 : traces[d].fitted_rounds();
    train += traces[d].train_ll[active[d]];
    valid += traces[d].valid_ll[active[d]];
  }

  // Train log-likelihood change of dimension d's next candidate tree.
  auto next_delta = [&](std::size_t d) {
    const auto& ll = traces[d].train_ll;
    return forward ? ll[active[d] + 1] - ll[active[d]] : ll[active[d] - 1] - ll[active[d]];
  };
  auto has_next = [&](std::size_t d) {
    return forward ? active[d] < traces[d].fitted_rounds() : active[d] > 0;
  };

  // Forward takes the largest increase; backward the smallest decrease, which
  // is again the largest (least negative) delta. Ties go to the lower position.
  struct Entry {
    double delta;
    std::size_t position;
  };
  auto worse = [](const Entry& a, const Entry& b) {
    if (a.delta != b.delta) return a.delta < b.delta;
    return a.position > b.position;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> queue(worse);
  for (std::size_t d = 0; d < dims; ++d) {
    if (has_next(d)) queue.push({next_delta(d), d});
  }

  SelectionResult result;
  result.method = forward ? SelectionMethod::kLinearizedForward
                          : SelectionMethod::kLinearizedBackward;
  double best_valid = valid;
  std::size_t best_step = 0;
  while (!queue.empty()) {
    const Entry top = queue.top();
    queue.pop();
    const std::size_t d = top.position;
    const auto& tr = traces[d];
    LinearizationStep step;
    step.position = d;
    step.round = forward ? active[d] + 1 : active[d];
    step.train_delta = top.delta;
    const std::size_t next = forward ? active[d] + 1 : active[d] - 1;
    valid += tr.valid_ll[next] - tr.valid_ll[active[d]];
    train += top.delta;
    active[d] = next;
    step.train_ll = train;
    step.valid_ll = valid;
    result.linearization.push_back(step);
    if (valid > best_valid) {
      best_valid = valid;
      best_step = result.linearization.size();
    }
    if (has_next(d)) queue.push({next_delta(d), d});
  }

  result.chosen_step = best_step;
  for (std::size_t d = 0; d < dims; ++d) {
    result.truncations.push_back(forward ? 0 : traces[d].fitted_rounds());
  }
  for (std::size_t s = 0; s < best_step; ++s) {
    auto& t = result.truncations[result.linearization[s].position];
    t = forward ? t + 1 : t - 1;
  }
  result.valid_ll_at_choice = joint_valid_ll(traces, result.truncations);
  return result;
}

SelectionResult select(std::span<const SelectionTrace> traces, SelectionMethod method) {
  switch (method) {
    case SelectionMethod::kIndividual:
      return select_individual(traces);
    case SelectionMethod::kCommon:
      return select_common(traces);
    case SelectionMethod::kLinearizedForward:
      return select_linearized(traces, LinearizationDirection::kForward);
    case SelectionMethod::kLinearizedBackward:
      return select_linearized(traces, LinearizationDirection::kBackward);
  }
  throw ConfigError("unknown selection method");
}

ArnModel refit_leaves(const ArnModel& m, const BinaryDataset& pooled, std::size_t workers) {
  if (pooled.n_dims() != m.dims()) {
    throw DataError("pooled data has " + std::to_string(pooled.n_dims()) +
                    " dimensions, model expects " + std::to_string(m.dims()));
  }
  ArnModel out = m;
  const std::size_t n = pooled.n_samples();
  parallel_for(m.dims(), workers, [&](std::size_t k) {
    auto& cond = out.conditionals[k];
    const PrefixView view = column_prefix_view(pooled, m.ordering, k);
    if (m.metadata.kind == ConditionalKind::kSingleTree) {
      const double a = m.metadata.pseudocount;
      for (auto& tree : cond.trees) {
        const auto leaves = route_samples(tree, view.predictors, n);
        std::vector<double> ones(tree.nodes.size(), 0.0), count(tree.nodes.size(), 0.0);
        for (std::size_t s = 0; s < n; ++s) {
          ones[leaves[s]] += view.target[s];
          count[leaves[s]] += 1.0;
        }
        for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
          if (!tree.nodes[i].is_leaf() || count[i] == 0.0) continue;
          tree.nodes[i].gamma = std::log(ones[i] + a) - std::log(count[i] - ones[i] + a);
        }
      }
      return;
    }
    std::vector<double> z(n, 0.0);
    for (auto& tree : cond.trees) {
      const FitWeights fw = FitWeights::from_log_odds(view.target, z, m.metadata.prob_clamp);
      const auto leaves = route_samples(tree, view.predictors, n);
      set_leaf_values(tree, leaves, fw, m.metadata.gamma_cap);
      for (std::size_t s = 0; s < n; ++s) z[s] += cond.shrinkage * tree.nodes[leaves[s]].gamma;
    }
  });
  return out;
}

}  // namespace lbarn
