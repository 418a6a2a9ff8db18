#include "eggs/feature_matrix.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "eggs/error.hpp"
#include "eggs/format.hpp"

namespace eggs {

std::size_t ColumnDictionary::add(Column column) {
  if (auto it = index_.find(column.name); it != index_.end()) return it->second;
  const std::size_t idx = columns_.size();
  index_.emplace(column.name, idx);
  columns_.push_back(std::move(column));
  return idx;
}

std::optional<std::size_t> ColumnDictionary::find(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::uint64_t ColumnDictionary::fingerprint() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](unsigned char c) {
    h ^= c;
    h *= 1099511628211ULL;
  };
  for (const auto& c : columns_) {
    for (unsigned char ch : c.name) mix(ch);
    mix(0);
    mix(static_cast<unsigned char>(c.kind));
  }
  return h;
}

void FeatureMatrix::add_row(std::string id, std::vector<FeatureEntry> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const FeatureEntry& a, const FeatureEntry& b) { return a.column < b.column; });
  std::vector<FeatureEntry> merged;
  merged.reserve(entries.size());
  for (const auto& e : entries) {
    if (e.column >= dict_.size())
      throw DataError("feature column " + std::to_string(e.column) + " out of range");
    if (!std::isfinite(e.value))
      throw DataError("non-finite value for feature '" + dict_[e.column].name + "' in row " + id);
    if (!merged.empty() && merged.back().column == e.column) {
      merged.back().value += e.value;
    } else {
      merged.push_back(e);
    }
  }
  for (const auto& e : merged)
    if (e.value != 0.0) entries_.push_back(e);
  row_ptr_.push_back(entries_.size());
  row_ids_.push_back(std::move(id));
}

std::span<const FeatureEntry> FeatureMatrix::row(std::size_t i) const {
  return std::span<const FeatureEntry>(entries_.data() + row_ptr_[i],
                                       row_ptr_[i + 1] - row_ptr_[i]);
}

double FeatureMatrix::value(std::size_t r, std::size_t column) const {
  for (const auto& e : row(r))
    if (e.column == column) return e.value;
  return 0.0;
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> indices) const {
  FeatureMatrix out(dict_);
  for (std::size_t i : indices) {
    auto r = row(i);
    out.add_row(row_ids_[i], std::vector<FeatureEntry>(r.begin(), r.end()));
  }
  return out;
}

FeatureMatrix FeatureMatrix::with_dense_columns(
    const std::vector<Column>& columns, const std::vector<std::vector<double>>& values) const {
  if (values.size() != rows()) throw DataError("appended column values do not match row count");
  ColumnDictionary dict = dict_;
  std::vector<std::uint32_t> idx;
  for (const auto& c : columns) {
    if (dict.find(c.name)) throw DataError("column '" + c.name + "' already present");
    idx.push_back(static_cast<std::uint32_t>(dict.add(c)));
  }
  FeatureMatrix out(std::move(dict));
  for (std::size_t r = 0; r < rows(); ++r) {
    if (values[r].size() != columns.size())
      throw DataError("appended column values do not match column count");
    auto base = row(r);
    std::vector<FeatureEntry> entries(base.begin(), base.end());
    for (std::size_t c = 0; c < columns.size(); ++c) entries.push_back({idx[c], values[r][c]});
    out.add_row(row_ids_[r], std::move(entries));
  }
  return out;
}

FeatureMatrix FeatureMatrix::without_families(const std::vector<std::string>& families) const {
  ColumnDictionary dict;
  std::vector<std::int64_t> remap(dict_.size(), -1);
  for (std::size_t c = 0; c < dict_.size(); ++c) {
    if (std::find(families.begin(), families.end(), dict_[c].family) != families.end()) continue;
    remap[c] = static_cast<std::int64_t>(dict.add(dict_[c]));
  }
  FeatureMatrix out(std::move(dict));
  for (std::size_t r = 0; r < rows(); ++r) {
    std::vector<FeatureEntry> entries;
    for (const auto& e : row(r))
      if (remap[e.column] >= 0)
        entries.push_back({static_cast<std::uint32_t>(remap[e.column]), e.value});
    out.add_row(row_ids_[r], std::move(entries));
  }
  return out;
}

void write_feature_matrix(std::ostream& out, const FeatureMatrix& m) {
  out << "#eggs-features\t1\n";
  const auto& dict = m.dictionary();
  for (const auto& c : dict.columns())
    out << "#column\t" << c.name << '\t' << (c.kind == ColumnKind::kBinary ? "binary" : "dense")
        << '\t' << c.family << '\n';
  for (const auto& id : m.row_ids()) out << "#row\t" << id << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (const auto& e : m.row(r))
      out << m.row_ids()[r] << '\t' << dict[e.column].name << '\t' << format_double(e.value)
          << '\n';
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

}  // namespace

FeatureMatrix read_feature_matrix(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("#eggs-features\t", 0) != 0)
    throw DataError("not an eggs feature file");
  ColumnDictionary dict;
  std::vector<std::string> ids;
  std::unordered_map<std::string, std::size_t> row_of;
  std::vector<std::vector<FeatureEntry>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_tabs(line);
    if (f[0] == "#column") {
      if (f.size() != 4) throw DataError("bad column line: " + line);
      dict.add(Column{f[1], f[2] == "binary" ? ColumnKind::kBinary : ColumnKind::kDense, f[3]});
    } else if (f[0] == "#row") {
      if (f.size() != 2) throw DataError("bad row line: " + line);
      row_of.emplace(f[1], ids.size());
      ids.push_back(f[1]);
      rows.emplace_back();
    } else {
      if (f.size() != 3) throw DataError("bad triplet line: " + line);
      auto r = row_of.find(f[0]);
      auto c = dict.find(f[1]);
      if (r == row_of.end() || !c) throw DataError("triplet references unknown row/column: " + line);
      double v = 0;
      auto res = std::from_chars(f[2].data(), f[2].data() + f[2].size(), v);
      if (res.ec != std::errc()) throw DataError("bad value: " + line);
      rows[r->second].push_back({static_cast<std::uint32_t>(*c), v});
    }
  }
  FeatureMatrix m(std::move(dict));
  for (std::size_t i = 0; i < ids.size(); ++i) m.add_row(ids[i], std::move(rows[i]));
  return m;
}

}  // namespace eggs
