#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace eggs {

/// Dense columns are standardized before training; binary ones are left raw.
enum class ColumnKind : std::uint8_t { kDense, kBinary };

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::kDense;
  std::string family;  // content, user, graph, ngram, relational

  bool operator==(const Column&) const = default;
};

class ColumnDictionary {
 public:
  /// Returns the existing index when `name` is already present.
  std::size_t add(Column column);
  std::optional<std::size_t> find(const std::string& name) const;
  std::size_t size() const { return columns_.size(); }
  const Column& operator[](std::size_t i) const { return columns_[i]; }
  const std::vector<Column>& columns() const { return columns_; }
  /// FNV-1a over names and kinds; identifies a dictionary in model files.
  std::uint64_t fingerprint() const;

  bool operator==(const ColumnDictionary& o) const { return columns_ == o.columns_; }

 private:
  std::vector<Column> columns_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct FeatureEntry {
  std::uint32_t column;
  double value;
  bool operator==(const FeatureEntry&) const = default;
};

/// Row-major sparse matrix (CSR) with a frozen column dictionary.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  explicit FeatureMatrix(ColumnDictionary dict) : dict_(std::move(dict)) {}

  /// Entries may arrive in any order; zeros are dropped, duplicates summed.
  /// Throws DataError on non-finite values or out-of-range columns.
  void add_row(std::string id, std::vector<FeatureEntry> entries);

  std::size_t rows() const { return row_ids_.size(); }
  std::size_t cols() const { return dict_.size(); }
  const ColumnDictionary& dictionary() const { return dict_; }
  const std::vector<std::string>& row_ids() const { return row_ids_; }
  std::span<const FeatureEntry> row(std::size_t i) const;
  double value(std::size_t row, std::size_t column) const;

  FeatureMatrix select_rows(std::span<const std::size_t> indices) const;
  /// Appends dense columns; `values[r][c]` is the value of new column c in row r.
  FeatureMatrix with_dense_columns(const std::vector<Column>& columns,
                                   const std::vector<std::vector<double>>& values) const;
  /// Removes every column whose family is listed, re-indexing the rest.
  FeatureMatrix without_families(const std::vector<std::string>& families) const;

  bool operator==(const FeatureMatrix&) const = default;

 private:
  ColumnDictionary dict_;
  std::vector<std::string> row_ids_;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<FeatureEntry> entries_;
};

// Sparse triplet text format:
//   #eggs-features<TAB>1
//   #column<TAB>name<TAB>dense|binary<TAB>family     (dictionary order)
//   #row<TAB>id                                      (row order)
//   row_id<TAB>column_name<TAB>value                 (non-zero entries)
void write_feature_matrix(std::ostream& out, const FeatureMatrix& m);
FeatureMatrix read_feature_matrix(std::istream& in);

}  // namespace eggs
