#include "lbarn/data.hpp"

#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "lbarn/errors.hpp"

namespace lbarn {

const char* to_string(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kValid:
      return "valid";
    case Split::kTest:
      return "test";
    case Split::kNone:
      break;
  }
  return "none";
}

BinaryDataset::BinaryDataset(std::size_t n_samples, std::size_t n_dims,
                             std::vector<std::uint8_t> values, Split split)
    : n_samples_(n_samples), n_dims_(n_dims), values_(std::move(values)), split_(split) {
  if (n_samples_ == 0) throw DataError("no samples");
  if (n_dims_ == 0) throw DataError("samples have no dimensions");
  if (values_.size() != n_samples_ * n_dims_) {
    throw DataError("dataset storage holds " + std::to_string(values_.size()) +
                    " values, expected " + std::to_string(n_samples_ * n_dims_));
  }
  for (auto v : values_) {
    if (v > 1) throw DataError("dataset value outside {0,1}");
  }
}

BinaryDataset BinaryDataset::from_rows(const std::vector<std::vector<std::uint8_t>>& rows,
                                       Split split) {
  if (rows.empty()) throw DataError("no samples");
  const std::size_t n = rows.size();
  const std::size_t d = rows.front().size();
  std::vector<std::uint8_t> values(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != d) {
      throw DataError("dimension mismatch: row " + std::to_string(i + 1) + " has " +
                      std::to_string(rows[i].size()) + " values, expected " +
                      std::to_string(d));
    }
    for (std::size_t j = 0; j < d; ++j) values[j * n + i] = rows[i][j];
  }
  return BinaryDataset(n, d, std::move(values), split);
}

BitColumn BinaryDataset::column(std::size_t dim) const {
  if (dim >= n_dims_) throw std::out_of_range("column index out of range");
  return BitColumn(values_.data() + dim * n_samples_, n_samples_);
}

std::vector<std::uint8_t> BinaryDataset::row(std::size_t row) const {
  if (row >= n_samples_) throw std::out_of_range("row index out of range");
  std::vector<std::uint8_t> out(n_dims_);
  for (std::size_t d = 0; d < n_dims_; ++d) out[d] = (*this)(row, d);
  return out;
}

BinaryDataset BinaryDataset::with_split(Split split) const {
  BinaryDataset copy = *this;
  copy.split_ = split;
  return copy;
}

BinaryDataset parse_dataset(std::istream& in, Split split) {
  std::vector<std::uint8_t> row_major;
  std::size_t dims = 0;
  std::size_t rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t count = 0;
    std::size_t i = 0;
    while (i < line.size()) {
      const char c = line[i];
      if (c == ' ' || c == '\t' || c == ',') {
        ++i;
        continue;
      }
      std::size_t end = i;
      while (end < line.size() && line[end] != ' ' && line[end] != '\t' && line[end] != ',') {
        ++end;
      }
      if (end - i != 1 || (c != '0' && c != '1')) {
        throw ParseError(line_no, i + 1,
                         "invalid token '" + line.substr(i, end - i) + "', expected 0 or 1");
      }
      row_major.push_back(static_cast<std::uint8_t>(c - '0'));
      ++count;
      i = end;
    }
    if (count == 0) continue;
    if (rows == 0) {
      dims = count;
    } else if (count != dims) {
      throw DataError("dimension mismatch at line " + std::to_string(line_no) + ": " +
                      std::to_string(count) + " values, expected " + std::to_string(dims));
    }
    ++rows;
  }
  if (rows == 0) throw DataError("no samples");

  std::vector<std::uint8_t> values(rows * dims);
  for (std::size_t n = 0; n < rows; ++n) {
    for (std::size_t d = 0; d < dims; ++d) values[d * rows + n] = row_major[n * dims + d];
  }
  return BinaryDataset(rows, dims, std::move(values), split);
}

BinaryDataset load_dataset(const std::filesystem::path& path, Split split) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open dataset '" + path.string() + "'");
  try {
    return parse_dataset(in, split);
  } catch (const ParseError& e) {
    throw ParseError(e.line(), e.column(), e.detail() + " in '" + path.string() + "'");
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_dataset(std::ostream& out, const BinaryDataset& ds) {
  std::string line;
  line.reserve(2 * ds.n_dims());
  for (std::size_t n = 0; n < ds.n_samples(); ++n) {
    line.clear();
    for (std::size_t d = 0; d < ds.n_dims(); ++d) {
      if (d > 0) line.push_back(' ');
      line.push_back(static_cast<char>('0' + ds(n, d)));
    }
    line.push_back('\n');
    out << line;
  }
}

void save_dataset(const std::filesystem::path& path, const BinaryDataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  write_dataset(out, ds);
}

BinaryDataset concatenate(const BinaryDataset& first, const BinaryDataset& second) {
  if (first.n_dims() != second.n_dims()) {
    throw DataError("dimension mismatch: " + std::to_string(first.n_dims()) + " vs " +
                    std::to_string(second.n_dims()));
  }
  const std::size_t n = first.n_samples() + second.n_samples();
  std::vector<std::uint8_t> values(n * first.n_dims());
  for (std::size_t d = 0; d < first.n_dims(); ++d) {
    auto a = first.column(d);
    auto b = second.column(d);
    std::copy(a.begin(), a.end(), values.begin() + d * n);
    std::copy(b.begin(), b.end(), values.begin() + d * n + a.size());
  }
  return BinaryDataset(n, first.n_dims(), std::move(values));
}

std::vector<std::size_t> natural_ordering(std::size_t n) {
  std::vector<std::size_t> ordering(n);
  std::iota(ordering.begin(), ordering.end(), std::size_t{0});
  return ordering;
}

void check_permutation(std::span<const std::size_t> ordering, std::size_t n) {
  if (ordering.size() != n) {
    throw DataError("ordering has " + std::to_string(ordering.size()) +
                    " entries, expected " + std::to_string(n));
  }
  std::vector<bool> seen(n, false);
  for (auto v : ordering) {
    if (v >= n || seen[v]) throw DataError("ordering is not a permutation of 0.." +
                                           std::to_string(n - 1));
    seen[v] = true;
  }
}

PrefixView column_prefix_view(const BinaryDataset& ds, std::span<const std::size_t> ordering,
                              std::size_t position) {
  if (ordering.size() != ds.n_dims()) {
    throw DataError("ordering length does not match dataset dimension");
  }
  if (position >= ds.n_dims()) throw std::out_of_range("dimension index out of range");
  PrefixView view;
  view.predictors.reserve(position);
  for (std::size_t j = 0; j < position; ++j) view.predictors.push_back(ds.column(ordering[j]));
  view.target = ds.column(ordering[position]);
  return view;
}

PrefixView column_prefix_view(const BinaryDataset& ds, std::size_t position) {
  auto ordering = natural_ordering(ds.n_dims());
  return column_prefix_view(ds, ordering, position);
}

}  // namespace lbarn
