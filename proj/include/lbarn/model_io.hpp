#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "json.hpp"
#include "lbarn/analysis.hpp"
#include "lbarn/booster.hpp"
#include "lbarn/network.hpp"
#include "lbarn/selection.hpp"

namespace lbarn {

inline constexpr int kModelFormatVersion = 1;

// Self-describing model file: the network, the configuration that produced
// it, the selection outcome and the per-dimension traces.
struct ModelFile {
  ArnModel model;
  nlohmann::json run_config = nlohmann::json::object();
  std::optional<SelectionResult> selection;
  std::vector<SelectionTrace> traces;
};

nlohmann::json model_to_json(const ModelFile& file);
// Throws DataError on malformed content or a format version mismatch, and
// InvariantError if the decoded network is inconsistent.
ModelFile model_from_json(const nlohmann::json& j);

void save_model(const std::filesystem::path& path, const ModelFile& file);
ModelFile load_model(const std::filesystem::path& path);

nlohmann::json selection_to_json(const SelectionResult& s);
nlohmann::json importance_to_json(const ImportanceReport& r);
nlohmann::json ordering_to_json(const OrderingResult& r);

// Ordering file: first non-comment line holds the 0-based permutation,
// whitespace separated. Lines starting with '#' are comments.
void write_ordering_file(const std::filesystem::path& path, const OrderingResult& ordering);
std::vector<std::size_t> read_ordering_file(const std::filesystem::path& path,
                                            std::size_t dims);

}  // namespace lbarn
