#include "lbarn/pipeline.hpp"

#include <chrono>
#include <cmath>

#include "lbarn/errors.hpp"
#include "lbarn/parallel.hpp"
#include "lbarn/probability_tree.hpp"

namespace lbarn {

using nlohmann::json;

BoostConfig RunConfig::boost_config(std::size_t max_leaves) const {
  BoostConfig b;
  b.rounds = rounds;
  b.max_leaves = max_leaves;
  b.shrinkage = shrinkage;
  b.prob_clamp = prob_clamp;
  b.gamma_cap = gamma_cap;
  b.min_leaf_weight = min_leaf_weight;
  b.early_exit = early_exit;
  return b;
}

void RunConfig::validate() const {
  if (train.empty()) throw ConfigError("--train is required");
  if (valid.empty()) throw ConfigError("--valid is required");
  if (leaves.empty()) throw ConfigError("at least one leaf count is required");
  for (auto j : leaves) boost_config(j).validate();
  if (pseudocounts.empty()) throw ConfigError("at least one pseudocount is required");
  for (double a : pseudocounts) {
    if (!(a > 0.0)) throw ConfigError("pseudocounts must be positive");
  }
  if (ordering == OrderingMode::kFile && order_file.empty()) {
    throw ConfigError("ordering mode 'file' needs a path");
  }
}

json RunConfig::to_json() const {
  const char* ordering_name = "natural";
  switch (ordering) {
    case OrderingMode::kNatural:
      break;
    case OrderingMode::kFile:
      ordering_name = "file";
      break;
    case OrderingMode::kEntropyIncreasing:
      ordering_name = "entropy-increasing";
      break;
    case OrderingMode::kEntropyDecreasing:
      ordering_name = "entropy-decreasing";
      break;
  }
  return {{"paths",
           {{"train", train.string()},
            {"valid", valid.string()},
            {"test", test.string()},
            {"model", model.string()},
            {"order_file", order_file.string()}}},
          {"leaves", leaves},
          {"shrinkage", shrinkage},
          {"rounds", rounds},
          {"prob_clamp", prob_clamp},
          {"gamma_cap", gamma_cap},
          {"min_leaf_weight", min_leaf_weight},
          {"pseudocounts", pseudocounts},
          {"selection", to_string(selection)},
          {"ordering", ordering_name},
          {"probe",
           {{"leaves", probe.boost.max_leaves},
            {"rounds", probe.boost.rounds},
            {"shrinkage", probe.boost.shrinkage},
            {"max_candidates", probe.max_candidates}}},
          {"seed", seed},
          {"workers", workers},
          {"refit", refit},
          {"baseline_tree", baseline_tree},
          {"early_exit", early_exit},
          {"dataset", dataset_name}};
}

void parse_ordering_mode(const std::string& spec, RunConfig& cfg) {
  if (spec == "natural") {
    cfg.ordering = OrderingMode::kNatural;
  } else if (spec == "entropy-increasing") {
    cfg.ordering = OrderingMode::kEntropyIncreasing;
  } else if (spec == "entropy-decreasing") {
    cfg.ordering = OrderingMode::kEntropyDecreasing;
  } else if (spec.rfind("file:", 0) == 0 && spec.size() > 5) {
    cfg.ordering = OrderingMode::kFile;
    cfg.order_file = spec.substr(5);
  } else {
    throw ConfigError("unknown ordering '" + spec +
                      "' (use natural, file:PATH, entropy-increasing or entropy-decreasing)");
  }
}

TrainedNetwork train_logitboost(const BinaryDataset& train, const BinaryDataset& valid,
                                std::span<const std::size_t> ordering, const BoostConfig& cfg,
                                SelectionMethod method, std::size_t workers) {
  cfg.validate();
  if (train.n_dims() != valid.n_dims()) {
    throw DataError("train and validation data differ in dimension");
  }
  check_permutation(ordering, train.n_dims());
  const std::size_t d = train.n_dims();
  TrainedNetwork net;
  net.model.ordering.assign(ordering.begin(), ordering.end());
  net.model.conditionals.resize(d);
  net.traces.resize(d);
  parallel_for(d, workers, [&](std::size_t k) {
    BoostResult r = boost_dimension(train, valid, ordering, k, cfg);
    net.model.conditionals[k] = std::move(r.model);
    net.traces[k] = std::move(r.trace);
  });
  net.selection = select(net.traces, method);
  net.model.set_truncations(net.selection.truncations);
  net.model.metadata.kind = ConditionalKind::kLogitBoost;
  net.model.metadata.max_leaves = cfg.max_leaves;
  net.model.metadata.shrinkage = cfg.shrinkage;
  net.model.metadata.prob_clamp = cfg.prob_clamp;
  net.model.metadata.gamma_cap = cfg.gamma_cap;
  net.model.metadata.selection = to_string(method);
  return net;
}

TrainedNetwork train_single_tree_network(const BinaryDataset& train, const BinaryDataset& valid,
                                         std::span<const std::size_t> ordering,
                                         std::size_t max_leaves,
                                         std::span<const double> pseudocounts,
                                         std::size_t workers) {
  if (train.n_dims() != valid.n_dims()) {
    throw DataError("train and validation data differ in dimension");
  }
  if (pseudocounts.empty()) throw ConfigError("at least one pseudocount is required");
  check_permutation(ordering, train.n_dims());
  const std::size_t d = train.n_dims();

  struct Choice {
    ProbabilityTree tree;
    std::size_t leaves = 1;
    double valid_ll = 0.0;
  };
  std::vector<Choice> best;
  double best_total = -INFINITY;
  double best_pseudocount = pseudocounts.front();
  for (double a : pseudocounts) {
    std::vector<Choice> choices(d);
    parallel_for(d, workers, [&](std::size_t k) {
      const PrefixView tv = column_prefix_view(train, ordering, k);
      const PrefixView vv = column_prefix_view(valid, ordering, k);
      ProbabilityTree tree = fit_probability_tree(tv.predictors, tv.target, max_leaves, a);
      const auto ll = log_likelihood_by_splits(tree, vv.predictors, vv.target);
      std::size_t splits = 0;
      for (std::size_t s = 1; s < ll.size(); ++s) {
        if (ll[s] > ll[splits]) splits = s;
      }
      choices[k] = Choice{tree.truncated(splits + 1), splits + 1, ll[splits]};
    });
    double total = 0.0;
    for (const auto& c : choices) total += c.valid_ll;
    if (total > best_total) {
      best_total = total;
      best = std::move(choices);
      best_pseudocount = a;
    }
  }

  TrainedNetwork net;
  net.model.ordering.assign(ordering.begin(), ordering.end());
  net.model.metadata.kind = ConditionalKind::kSingleTree;
  net.model.metadata.max_leaves = max_leaves;
  net.model.metadata.shrinkage = 1.0;
  net.model.metadata.pseudocount = best_pseudocount;
  net.model.metadata.selection = "validation-per-tree";
  net.selection.method = SelectionMethod::kIndividual;
  net.selection.valid_ll_at_choice = best_total;
  for (std::size_t k = 0; k < d; ++k) {
    ConditionalModel c;
    c.position = k;
    c.column = ordering[k];
    c.shrinkage = 1.0;
    c.trees.push_back(best[k].tree.to_log_odds_tree());
    c.truncation = 1;
    net.model.conditionals.push_back(std::move(c));
    net.selection.truncations.push_back(1);
  }
  return net;
}

LikelihoodSummary summarize(std::span<const double> per_sample) {
  LikelihoodSummary s;
  s.count = per_sample.size();
  if (s.count == 0) return s;
  double sum = 0.0;
  for (double v : per_sample) sum += v;
  s.mean = sum / static_cast<double>(s.count);
  if (s.count > 1) {
    double sq = 0.0;
    for (double v : per_sample) sq += (v - s.mean) * (v - s.mean);
    const double stdev = std::sqrt(sq / static_cast<double>(s.count - 1));
    s.standard_error = stdev / std::sqrt(static_cast<double>(s.count));
  }
  return s;
}

LikelihoodSummary evaluate(const ArnModel& m, const BinaryDataset& ds, std::size_t workers) {
  const auto ll = dataset_log_likelihoods(m, ds, workers);
  return summarize(ll);
}

std::vector<std::size_t> resolve_ordering(const RunConfig& cfg, const BinaryDataset& train) {
  switch (cfg.ordering) {
    case OrderingMode::kNatural:
      return natural_ordering(train.n_dims());
    case OrderingMode::kFile:
      return read_ordering_file(cfg.order_file, train.n_dims());
    case OrderingMode::kEntropyIncreasing:
    case OrderingMode::kEntropyDecreasing: {
      ProbeConfig probe = cfg.probe;
      probe.workers = cfg.workers;
      probe.seed = cfg.seed;
      const auto dir = cfg.ordering == OrderingMode::kEntropyIncreasing
                           ? EntropyDirection::kIncreasing
                           : EntropyDirection::kDecreasing;
      return entropy_ordering(train, dir, probe).permutation;
    }
  }
  return natural_ordering(train.n_dims());
}

namespace {

json summary_json(const LikelihoodSummary& s) {
  return {{"mean_ll", s.mean}, {"standard_error", s.standard_error}, {"count", s.count}};
}

}  // namespace

RunOutcome run_training(const RunConfig& cfg) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  const BinaryDataset train = load_dataset(cfg.train, Split::kTrain);
  const BinaryDataset valid = load_dataset(cfg.valid, Split::kValid);
  if (train.n_dims() != valid.n_dims()) {
    throw DataError("train has " + std::to_string(train.n_dims()) + " dimensions, valid has " +
                    std::to_string(valid.n_dims()));
  }
  std::optional<BinaryDataset> test;
  if (!cfg.test.empty()) {
    test = load_dataset(cfg.test, Split::kTest);
    if (test->n_dims() != train.n_dims()) {
      throw DataError("test has " + std::to_string(test->n_dims()) + " dimensions, train has " +
                      std::to_string(train.n_dims()));
    }
  }
  const auto ordering = resolve_ordering(cfg, train);

  json report;
  report["dataset"] = cfg.dataset_name;
  report["n_train"] = train.n_samples();
  report["n_valid"] = valid.n_samples();
  report["dims"] = train.n_dims();
  report["ordering"] = ordering;

  TrainedNetwork best;
  std::size_t best_leaves = 0;
  double best_valid = -INFINITY;
  json scan = json::array();
  for (std::size_t j : cfg.leaves) {
    TrainedNetwork net =
        cfg.baseline_tree
            ? train_single_tree_network(train, valid, ordering, j, cfg.pseudocounts, cfg.workers)
            : train_logitboost(train, valid, ordering, cfg.boost_config(j), cfg.selection,
                               cfg.workers);
    const double v = net.selection.valid_ll_at_choice / static_cast<double>(valid.n_samples());
    scan.push_back({{"leaves", j}, {"valid_ll", v}});
    if (v > best_valid) {
      best_valid = v;
      best_leaves = j;
      best = std::move(net);
    }
  }
  best.model.metadata.dataset = cfg.dataset_name;
  report["leaves_scan"] = scan;
  report["leaves"] = best_leaves;
  report["valid_ll"] = best_valid;
  report["selection"] = best.model.metadata.selection;
  if (cfg.baseline_tree) report["pseudocount"] = best.model.metadata.pseudocount;

  json dims = json::array();
  for (std::size_t k = 0; k < best.model.dims(); ++k) {
    const auto& c = best.model.conditionals[k];
    json row = {{"position", k}, {"column", c.column}, {"truncation", c.truncation}};
    if (!best.traces.empty()) {
      const auto& tr = best.traces[k];
      row["fitted_rounds"] = tr.fitted_rounds();
      row["train_ll"] = tr.train_ll[c.truncation] / static_cast<double>(train.n_samples());
      row["valid_ll"] = tr.valid_ll[c.truncation] / static_cast<double>(valid.n_samples());
    }
    dims.push_back(std::move(row));
  }
  report["per_dimension"] = std::move(dims);
  report["train_ll"] = evaluate(best.model, train, cfg.workers).mean;
  if (test) report["test"] = summary_json(evaluate(best.model, *test, cfg.workers));

  if (cfg.refit) {
    const BinaryDataset pooled = concatenate(train, valid);
    best.model = refit_leaves(best.model, pooled, cfg.workers);
    report["refit"] = true;
    if (test) report["test_refit"] = summary_json(evaluate(best.model, *test, cfg.workers));
  }

  const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started);
  report["wall_seconds"] = elapsed.count();

  RunOutcome outcome;
  outcome.model_file.model = std::move(best.model);
  outcome.model_file.run_config = cfg.to_json();
  outcome.model_file.selection = std::move(best.selection);
  outcome.model_file.traces = std::move(best.traces);
  outcome.report = std::move(report);
  return outcome;
}

}  // namespace lbarn
