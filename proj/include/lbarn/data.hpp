#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace lbarn {

// One column of bits, indexed by sample.
using BitColumn = std::span<const std::uint8_t>;

enum class Split { kNone, kTrain, kValid, kTest };

const char* to_string(Split split);

// N x D matrix of {0,1} observations. Storage is column-major because tree
// induction scans one predictor column at a time. Dimensions are 0-based.
// Immutable after construction.
class BinaryDataset {
 public:
  BinaryDataset() = default;

  // `values` is column-major: entry (n, d) lives at values[d * n_samples + n].
  BinaryDataset(std::size_t n_samples, std::size_t n_dims,
                std::vector<std::uint8_t> values, Split split = Split::kNone);

  static BinaryDataset from_rows(const std::vector<std::vector<std::uint8_t>>& rows,
                                 Split split = Split::kNone);

  std::size_t n_samples() const { return n_samples_; }
  std::size_t n_dims() const { return n_dims_; }
  Split split() const { return split_; }
  bool empty() const { return n_samples_ == 0; }

  std::uint8_t operator()(std::size_t row, std::size_t dim) const {
    return values_[dim * n_samples_ + row];
  }
  BitColumn column(std::size_t dim) const;
  std::vector<std::uint8_t> row(std::size_t row) const;

  BinaryDataset with_split(Split split) const;

  friend bool operator==(const BinaryDataset& a, const BinaryDataset& b) {
    return a.n_samples_ == b.n_samples_ && a.n_dims_ == b.n_dims_ &&
           a.values_ == b.values_;
  }

 private:
  std::size_t n_samples_ = 0;
  std::size_t n_dims_ = 0;
  std::vector<std::uint8_t> values_;
  Split split_ = Split::kNone;
};

// Dense text format: one sample per line, tokens "0"/"1" separated by
// whitespace and/or commas. Blank lines are skipped, CRLF is accepted.
// Throws ParseError (1-based line and character column) on bad tokens and
// DataError on ragged rows or an empty input.
BinaryDataset parse_dataset(std::istream& in, Split split = Split::kNone);
BinaryDataset load_dataset(const std::filesystem::path& path,
                           Split split = Split::kNone);

void write_dataset(std::ostream& out, const BinaryDataset& ds);
void save_dataset(const std::filesystem::path& path, const BinaryDataset& ds);

// Rows of `first` followed by rows of `second`.
BinaryDataset concatenate(const BinaryDataset& first, const BinaryDataset& second);

// Identity permutation 0..n-1.
std::vector<std::size_t> natural_ordering(std::size_t n);

// Throws DataError unless `ordering` is a bijection on 0..n-1.
void check_permutation(std::span<const std::size_t> ordering, std::size_t n);

// Predictors and target for the conditional at `position` under `ordering`:
// predictors[j] is original column ordering[j] for j < position, target is
// column ordering[position]. Position 0 has no predictors.
struct PrefixView {
  std::vector<BitColumn> predictors;
  BitColumn target;

  std::size_t n_samples() const { return target.size(); }
};

PrefixView column_prefix_view(const BinaryDataset& ds,
                              std::span<const std::size_t> ordering,
                              std::size_t position);

// Natural ordering.
PrefixView column_prefix_view(const BinaryDataset& ds, std::size_t position);

}  // namespace lbarn
