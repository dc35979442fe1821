#include "lbarn/model_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "lbarn/errors.hpp"

namespace lbarn {

using nlohmann::json;

namespace {

json tree_to_json(const RegressionTree& tree) {
  json nodes = json::array();
  for (const auto& n : tree.nodes) {
    if (n.is_leaf()) {
      nodes.push_back(json::array({n.gamma}));
    } else {
      nodes.push_back(json::array({n.split_var, n.left, n.right, n.gain}));
    }
  }
  return nodes;
}

RegressionTree tree_from_json(const json& j) {
  RegressionTree tree;
  for (const auto& node : j) {
    TreeNode n;
    if (node.size() == 1) {
      n.gamma = node.at(0).get<double>();
    } else if (node.size() == 4) {
      n.split_var = node.at(0).get<std::uint32_t>();
      n.left = node.at(1).get<std::uint32_t>();
      n.right = node.at(2).get<std::uint32_t>();
      n.gain = node.at(3).get<double>();
      if (n.left >= j.size() || n.right >= j.size()) throw DataError("child index out of range");
    } else {
      throw DataError("tree node must have 1 or 4 entries");
    }
    tree.nodes.push_back(n);
  }
  return tree;
}

SelectionResult selection_from_json(const json& j) {
  SelectionResult s;
  s.method = selection_method_from_string(j.at("method").get<std::string>());
  s.truncations = j.at("truncations").get<std::vector<std::size_t>>();
  s.valid_ll_at_choice = j.at("valid_ll_at_choice").get<double>();
  s.chosen_step = j.value("chosen_step", std::size_t{0});
  if (j.contains("linearization")) {
    for (const auto& step : j.at("linearization")) {
      s.linearization.push_back(LinearizationStep{
          step.at(0).get<std::size_t>(), step.at(1).get<std::size_t>(), step.at(2).get<double>(),
          step.at(3).get<double>(), step.at(4).get<double>()});
    }
  }
  return s;
}

}  // namespace

json selection_to_json(const SelectionResult& s) {
  json j = {{"method", to_string(s.method)},
            {"truncations", s.truncations},
            {"valid_ll_at_choice", s.valid_ll_at_choice}};
  if (!s.linearization.empty()) {
    j["chosen_step"] = s.chosen_step;
    json steps = json::array();
    for (const auto& step : s.linearization) {
      steps.push_back(
          json::array({step.position, step.round, step.train_delta, step.train_ll, step.valid_ll}));
    }
    j["linearization"] = std::move(steps);
  }
  return j;
}

json importance_to_json(const ImportanceReport& r) {
  json gains = json::array();
  for (const auto& [col, gain] : r.gains) {
    const auto it = r.normalized.find(col);
    gains.push_back({{"column", col},
                     {"gain", gain},
                     {"fraction", it == r.normalized.end() ? 0.0 : it->second}});
  }
  return {{"target_position", r.target_position},
          {"target_column", r.target_column},
          {"total_gain", r.total_gain},
          {"empty", r.empty()},
          {"gains", gains}};
}

json ordering_to_json(const OrderingResult& r) {
  return {{"permutation", r.permutation}, {"per_step_entropy", r.per_step_entropy}};
}

json model_to_json(const ModelFile& file) {
  const ArnModel& m = file.model;
  json conditionals = json::array();
  for (const auto& c : m.conditionals) {
    json trees = json::array();
    for (const auto& t : c.trees) trees.push_back(tree_to_json(t));
    conditionals.push_back({{"position", c.position},
                            {"column", c.column},
                            {"shrinkage", c.shrinkage},
                            {"truncation", c.truncation},
                            {"trees", std::move(trees)}});
  }
  json meta = {{"kind", to_string(m.metadata.kind)},
               {"max_leaves", m.metadata.max_leaves},
               {"shrinkage", m.metadata.shrinkage},
               {"prob_clamp", m.metadata.prob_clamp},
               {"gamma_cap", m.metadata.gamma_cap},
               {"pseudocount", m.metadata.pseudocount},
               {"dataset", m.metadata.dataset},
               {"selection", m.metadata.selection}};
  json j = {{"format", "lbarn-model"},
            {"version", kModelFormatVersion},
            {"metadata", std::move(meta)},
            {"run_config", file.run_config},
            {"ordering", m.ordering},
            {"conditionals", std::move(conditionals)}};
  if (file.selection) j["selection"] = selection_to_json(*file.selection);
  if (!file.traces.empty()) {
    json traces = json::array();
    for (const auto& tr : file.traces) {
      traces.push_back({{"position", tr.position},
                        {"rounds_requested", tr.rounds_requested},
                        {"train_ll", tr.train_ll},
                        {"valid_ll", tr.valid_ll}});
    }
    j["traces"] = std::move(traces);
  }
  return j;
}

ModelFile model_from_json(const json& j) {
  ModelFile file;
  try {
    if (j.value("format", std::string{}) != "lbarn-model") throw DataError("not an lbarn model");
    const int version = j.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw DataError("model format version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kModelFormatVersion) + ")");
    }
    const json& meta = j.at("metadata");
    ArnModel& m = file.model;
    m.metadata.kind = conditional_kind_from_string(meta.at("kind").get<std::string>());
    m.metadata.max_leaves = meta.at("max_leaves").get<std::size_t>();
    m.metadata.shrinkage = meta.at("shrinkage").get<double>();
    m.metadata.prob_clamp = meta.at("prob_clamp").get<double>();
    m.metadata.gamma_cap = meta.at("gamma_cap").get<double>();
    m.metadata.pseudocount = meta.at("pseudocount").get<double>();
    m.metadata.dataset = meta.at("dataset").get<std::string>();
    m.metadata.selection = meta.at("selection").get<std::string>();
    file.run_config = j.value("run_config", json::object());
    m.ordering = j.at("ordering").get<std::vector<std::size_t>>();
    for (const auto& cj : j.at("conditionals")) {
      ConditionalModel c;
      c.position = cj.at("position").get<std::size_t>();
      c.column = cj.at("column").get<std::size_t>();
      c.shrinkage = cj.at("shrinkage").get<double>();
      c.truncation = cj.at("truncation").get<std::size_t>();
      for (const auto& tj : cj.at("trees")) c.trees.push_back(tree_from_json(tj));
      m.conditionals.push_back(std::move(c));
    }
    if (j.contains("selection")) file.selection = selection_from_json(j.at("selection"));
    if (j.contains("traces")) {
      for (const auto& tj : j.at("traces")) {
        SelectionTrace tr;
        tr.position = tj.at("position").get<std::size_t>();
        tr.rounds_requested = tj.at("rounds_requested").get<std::size_t>();
        tr.train_ll = tj.at("train_ll").get<std::vector<double>>();
        tr.valid_ll = tj.at("valid_ll").get<std::vector<double>>();
        file.traces.push_back(std::move(tr));
      }
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
  file.model.validate();
  return file;
}

void save_model(const std::filesystem::path& path, const ModelFile& file) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write model file '" + path.string() + "'");
  // One top-level key per line and one conditional per line keeps large
  // models diffable without spreading every tree node over several lines.
  const json j = model_to_json(file);
  out << "{\n";
  bool first = true;
  for (const auto& [key, value] : j.items()) {
    out << (first ? "" : ",\n") << json(key).dump() << ": ";
    first = false;
    if (key == "conditionals" || key == "traces") {
      out << "[\n";
      for (std::size_t i = 0; i < value.size(); ++i) {
        out << "  " << value[i].dump() << (i + 1 < value.size() ? ",\n" : "\n");
      }
      out << "]";
    } else {
      out << value.dump();
    }
  }
  out << "\n}\n";
  if (!out) throw ConfigError("failed writing model file '" + path.string() + "'");
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model file '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("model file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return model_from_json(j);
}

void write_ordering_file(const std::filesystem::path& path, const OrderingResult& ordering) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write ordering file '" + path.string() + "'");
  for (std::size_t i = 0; i < ordering.permutation.size(); ++i) {
    out << (i ? " " : "") << ordering.permutation[i];
  }
  out << '\n';
  if (!ordering.per_step_entropy.empty()) {
    out << "# entropy";
    out << std::setprecision(17);
    for (double h : ordering.per_step_entropy) out << ' ' << h;
    out << '\n';
  }
}

std::vector<std::size_t> read_ordering_file(const std::filesystem::path& path,
                                            std::size_t dims) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open ordering file '" + path.string() + "'");
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream tokens(line);
    std::vector<std::size_t> ordering;
    std::string tok;
    while (tokens >> tok) {
      try {
        std::size_t used = 0;
        const auto v = std::stoull(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        ordering.push_back(static_cast<std::size_t>(v));
      } catch (const std::exception&) {
        throw DataError("ordering file '" + path.string() + "': invalid index '" + tok + "'");
      }
    }
    if (ordering.empty()) continue;
    check_permutation(ordering, dims);
    return ordering;
  }
  throw DataError("ordering file '" + path.string() + "' holds no permutation");
}

}  // namespace lbarn
