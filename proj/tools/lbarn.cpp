// Command-line front end: train, eval, sample, impute, importance, order, refit.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lbarn/analysis.hpp"
#include "lbarn/data.hpp"
#include "lbarn/errors.hpp"
#include "lbarn/model_io.hpp"
#include "lbarn/network.hpp"
#include "lbarn/pipeline.hpp"
#include "lbarn/selection.hpp"

namespace {

using nlohmann::json;
using namespace lbarn;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitInvariant = 4;
constexpr int kExitOther = 1;

void print_machine_section(std::ostream& out, const json& j) {
  out << "--- machine-readable ---\n" << j.dump() << '\n';
}

void write_report_file(const std::string& path, const json& j) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write report '" + path + "'");
  out << j.dump(2) << '\n';
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  return out;
}

std::vector<PartialRow> read_partial_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::vector<PartialRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    PartialRow row;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (c == ' ' || c == '\t' || c == ',') continue;
      const bool last = i + 1 == line.size() || line[i + 1] == ' ' || line[i + 1] == '\t' ||
                        line[i + 1] == ',';
      if (!last || (c != '0' && c != '1' && c != '?' && c != '-')) {
        throw ParseError(line_no, i + 1, "expected 0, 1, ? or -");
      }
      if (c == '0' || c == '1') {
        row.emplace_back(static_cast<std::uint8_t>(c - '0'));
      } else {
        row.emplace_back(std::nullopt);
      }
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("no rows in '" + path + "'");
  return rows;
}

void print_train_report(const json& r) {
  std::cout << "dataset      " << r.value("dataset", std::string{}) << '\n'
            << "dims         " << r["dims"] << "  (train " << r["n_train"] << ", valid "
            << r["n_valid"] << ")\n"
            << "leaves       " << r["leaves"] << '\n'
            << "selection    " << r["selection"].get<std::string>() << '\n'
            << std::fixed << std::setprecision(4)
            << "train LL     " << r["train_ll"].get<double>() << '\n'
            << "valid LL     " << r["valid_ll"].get<double>() << '\n';
  if (r.contains("test")) {
    std::cout << "test LL      " << r["test"]["mean_ll"].get<double>() << " +- "
              << r["test"]["standard_error"].get<double>() << '\n';
  }
  if (r.contains("test_refit")) {
    std::cout << "test LL refit " << r["test_refit"]["mean_ll"].get<double>() << " +- "
              << r["test_refit"]["standard_error"].get<double>() << '\n';
  }
  std::cout << "wall time    " << std::setprecision(2) << r["wall_seconds"].get<double>()
            << " s\n\n";
  std::cout << std::setw(6) << "pos" << std::setw(8) << "column" << std::setw(8) << "t_d"
            << std::setw(12) << "train LL" << std::setw(12) << "valid LL" << '\n';
  std::cout << std::setprecision(4);
  for (const auto& row : r["per_dimension"]) {
    std::cout << std::setw(6) << row["position"].get<std::size_t>() << std::setw(8)
              << row["column"].get<std::size_t>() << std::setw(8)
              << row["truncation"].get<std::size_t>();
    if (row.contains("train_ll")) {
      std::cout << std::setw(12) << row["train_ll"].get<double>() << std::setw(12)
                << row["valid_ll"].get<double>();
    }
    std::cout << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LogitBoost autoregressive networks for binary data"};
  app.require_subcommand(1);

  // train
  RunConfig cfg;
  std::string train_model, train_report, order_spec = "natural", selection = "individual";
  std::vector<double> pseudocounts;
  bool no_early_exit = false;
  auto* train = app.add_subcommand("train", "Boost every conditional and select truncations");
  train->add_option("--train", cfg.train, "Training data")->required();
  train->add_option("--valid", cfg.valid, "Validation data")->required();
  train->add_option("--test", cfg.test, "Test data (optional)");
  train->add_option("--model", train_model, "Output model file")->required();
  train->add_option("--leaves", cfg.leaves, "Leaves per tree; a list is scanned on validation")
      ->delimiter(',')
      ->capture_default_str();
  train->add_option("--shrinkage", cfg.shrinkage, "Shrinkage factor")->capture_default_str();
  train->add_option("--rounds", cfg.rounds, "Boosting rounds per dimension")
      ->capture_default_str();
  train->add_option("--selection", selection,
                    "individual | common | linearized-forward | linearized-backward")
      ->capture_default_str();
  train->add_option("--order", order_spec,
                    "natural | file:PATH | entropy-increasing | entropy-decreasing")
      ->capture_default_str();
  train->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  train->add_option("--workers", cfg.workers, "Worker threads (0 = all cores)")
      ->capture_default_str();
  train->add_flag("--refit", cfg.refit, "Refit leaf values on train + valid");
  train->add_flag("--baseline-tree", cfg.baseline_tree,
                  "Single probability estimation tree per dimension");
  train->add_option("--pseudocount", pseudocounts, "Baseline pseudocount(s)")->delimiter(',');
  train->add_flag("--no-early-exit", no_early_exit, "Always run every boosting round");
  train->add_option("--prob-clamp", cfg.prob_clamp)->capture_default_str();
  train->add_option("--gamma-cap", cfg.gamma_cap)->capture_default_str();
  train->add_option("--min-leaf-weight", cfg.min_leaf_weight)->capture_default_str();
  train->add_option("--dataset-name", cfg.dataset_name, "Name recorded in the model");
  train->add_option("--report", train_report, "Write the JSON report here");

  // eval
  std::string eval_model, eval_data, eval_per_sample;
  std::size_t eval_workers = 0;
  bool eval_cumulative = false;
  auto* eval = app.add_subcommand("eval", "Mean log-likelihood and standard error");
  eval->add_option("--model", eval_model)->required();
  eval->add_option("--test,--data", eval_data, "Dataset to evaluate")->required();
  eval->add_option("--per-sample", eval_per_sample, "Write per-sample log-likelihoods");
  eval->add_flag("--cumulative", eval_cumulative, "Print cumulative log-likelihood by position");
  eval->add_option("--workers", eval_workers)->capture_default_str();

  // sample
  std::string sample_model, sample_out;
  std::size_t sample_n = 100;
  std::uint64_t sample_seed = 0;
  auto* samp = app.add_subcommand("sample", "Ancestral sampling");
  samp->add_option("--model", sample_model)->required();
  samp->add_option("--n", sample_n)->capture_default_str();
  samp->add_option("--seed", sample_seed)->capture_default_str();
  samp->add_option("--out", sample_out, "Output file (default stdout)");

  // impute
  std::string impute_model, impute_input, impute_out;
  std::size_t impute_n = 1;
  std::uint64_t impute_seed = 0;
  auto* imp = app.add_subcommand("impute", "Complete rows whose missing entries trail the ordering");
  imp->add_option("--model", impute_model)->required();
  imp->add_option("--input", impute_input, "Rows of 0/1 with ? or - for missing")->required();
  imp->add_option("--n", impute_n, "Completions per input row")->capture_default_str();
  imp->add_option("--seed", impute_seed)->capture_default_str();
  imp->add_option("--out", impute_out, "Output file (default stdout)");

  // importance
  std::string imp_model, imp_grid;
  std::size_t imp_dim = 0;
  auto* importance = app.add_subcommand("importance", "Split-gain importance for one dimension");
  importance->add_option("--model", imp_model)->required();
  importance->add_option("--dim", imp_dim, "Target column (0-based)")->required();
  importance->add_option("--grid", imp_grid, "Also print fractions as a ROWSxCOLS grid");

  // order
  std::string order_train, order_out, order_direction = "increasing";
  ProbeConfig probe;
  std::size_t order_workers = 0;
  auto* order = app.add_subcommand("order", "Greedy conditional-entropy ordering");
  order->add_option("--train", order_train)->required();
  order->add_option("--out", order_out, "Ordering file")->required();
  order->add_option("--direction", order_direction, "increasing | decreasing")
      ->capture_default_str();
  order->add_option("--probe-leaves", probe.boost.max_leaves)->capture_default_str();
  order->add_option("--probe-rounds", probe.boost.rounds)->capture_default_str();
  order->add_option("--probe-shrinkage", probe.boost.shrinkage)->capture_default_str();
  order->add_option("--max-candidates", probe.max_candidates, "0 = score every candidate")
      ->capture_default_str();
  order->add_option("--seed", probe.seed)->capture_default_str();
  order->add_option("--workers", order_workers)->capture_default_str();

  // refit
  std::string refit_model, refit_train, refit_valid, refit_out;
  std::size_t refit_workers = 0;
  auto* refit = app.add_subcommand("refit", "Refit leaf values on pooled data");
  refit->add_option("--model", refit_model)->required();
  refit->add_option("--train", refit_train)->required();
  refit->add_option("--valid", refit_valid, "Pooled with --train when given");
  refit->add_option("--out", refit_out)->required();
  refit->add_option("--workers", refit_workers)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*train) {
      cfg.model = train_model;
      cfg.selection = selection_method_from_string(selection);
      parse_ordering_mode(order_spec, cfg);
      if (!pseudocounts.empty()) cfg.pseudocounts = pseudocounts;
      cfg.early_exit = !no_early_exit;
      if (cfg.dataset_name.empty()) cfg.dataset_name = cfg.train.stem().string();
      RunOutcome outcome = run_training(cfg);
      save_model(cfg.model, outcome.model_file);
      print_train_report(outcome.report);
      print_machine_section(std::cout, outcome.report);
      write_report_file(train_report, outcome.report);
    } else if (*eval) {
      const ModelFile file = load_model(eval_model);
      const BinaryDataset ds = load_dataset(eval_data);
      const auto ll = dataset_log_likelihoods(file.model, ds, eval_workers);
      const auto s = summarize(ll);
      std::cout << std::fixed << std::setprecision(6) << "mean LL        " << s.mean << '\n'
                << "standard error " << s.standard_error << '\n'
                << "samples        " << s.count << '\n';
      json j = {{"mean_ll", s.mean}, {"standard_error", s.standard_error}, {"count", s.count}};
      if (eval_cumulative) {
        const auto cum = cumulative_log_likelihood(file.model, ds, eval_workers);
        j["cumulative"] = cum;
        std::cout << "cumulative LL by position\n";
        for (std::size_t k = 0; k < cum.size(); ++k) std::cout << k + 1 << ' ' << cum[k] << '\n';
      }
      if (!eval_per_sample.empty()) {
        auto out = open_output(eval_per_sample);
        out << std::setprecision(17);
        for (double v : ll) out << v << '\n';
      }
      print_machine_section(std::cout, j);
    } else if (*samp) {
      const ModelFile file = load_model(sample_model);
      const BinaryDataset ds = sample(file.model, sample_seed, sample_n);
      if (sample_out.empty()) {
        write_dataset(std::cout, ds);
      } else {
        auto out = open_output(sample_out);
        write_dataset(out, ds);
      }
    } else if (*imp) {
      const ModelFile file = load_model(impute_model);
      const auto rows = read_partial_rows(impute_input);
      std::ofstream file_out;
      if (!impute_out.empty()) file_out = open_output(impute_out);
      std::ostream& out = impute_out.empty() ? std::cout : file_out;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        write_dataset(out, impute(file.model, rows[r], impute_seed + r, impute_n));
      }
    } else if (*importance) {
      const ModelFile file = load_model(imp_model);
      const auto& ord = file.model.ordering;
      const auto it = std::find(ord.begin(), ord.end(), imp_dim);
      if (it == ord.end()) throw ConfigError("--dim outside the model dimension");
      const auto report =
          variable_importance(file.model, static_cast<std::size_t>(it - ord.begin()));
      std::cout << "target column " << report.target_column << " (position "
                << report.target_position << "), total gain " << report.total_gain << '\n';
      if (report.empty()) std::cout << "no active splits\n";
      std::cout << std::setw(8) << "column" << std::setw(16) << "gain" << std::setw(12)
                << "fraction" << '\n';
      for (const auto& [col, gain] : report.gains) {
        std::cout << std::setw(8) << col << std::setw(16) << gain << std::setw(12)
                  << (report.empty() ? 0.0 : report.normalized.at(col)) << '\n';
      }
      if (!imp_grid.empty()) {
        std::size_t rows = 0, cols = 0;
        char x = 0;
        std::istringstream g(imp_grid);
        if (!(g >> rows >> x >> cols) || x != 'x' || rows * cols != file.model.dims()) {
          throw ConfigError("--grid must be ROWSxCOLS covering every dimension");
        }
        std::cout << std::fixed << std::setprecision(3);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < cols; ++c) {
            const auto col = r * cols + c;
            const auto f = report.normalized.find(col);
            std::cout << (c ? " " : "")
                      << (col == report.target_column ? -1.0
                                                      : (f == report.normalized.end() ? 0.0 : f->second));
          }
          std::cout << '\n';
        }
      }
      print_machine_section(std::cout, importance_to_json(report));
    } else if (*order) {
      EntropyDirection dir;
      if (order_direction == "increasing") {
        dir = EntropyDirection::kIncreasing;
      } else if (order_direction == "decreasing") {
        dir = EntropyDirection::kDecreasing;
      } else {
        throw ConfigError("--direction must be increasing or decreasing");
      }
      probe.boost.validate();
      probe.workers = order_workers;
      const BinaryDataset ds = load_dataset(order_train, Split::kTrain);
      const OrderingResult result = entropy_ordering(ds, dir, probe);
      write_ordering_file(order_out, result);
      std::cout << std::setw(6) << "step" << std::setw(8) << "column" << std::setw(12)
                << "entropy" << '\n'
                << std::fixed << std::setprecision(5);
      for (std::size_t i = 0; i < result.permutation.size(); ++i) {
        std::cout << std::setw(6) << i << std::setw(8) << result.permutation[i] << std::setw(12)
                  << result.per_step_entropy[i] << '\n';
      }
      print_machine_section(std::cout, ordering_to_json(result));
    } else if (*refit) {
      ModelFile file = load_model(refit_model);
      BinaryDataset pooled = load_dataset(refit_train);
      if (!refit_valid.empty()) pooled = concatenate(pooled, load_dataset(refit_valid));
      file.model = refit_leaves(file.model, pooled, refit_workers);
      file.run_config["refit"] = true;
      save_model(refit_out, file);
      std::cout << "refit " << file.model.dims() << " conditionals on " << pooled.n_samples()
                << " samples\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const InvariantError& e) {
    std::cerr << "internal invariant violated: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitOther;
  }
  return 0;
}
