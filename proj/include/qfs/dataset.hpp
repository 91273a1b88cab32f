#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <fstream>
#include <iterator>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "qfs/error.hpp"

namespace qfs {

using Cell = std::optional<double>;

// Raw survey grid, stored column-major. An empty optional is a missing
// response.
class RawTable {
 public:
  RawTable() = default;

  RawTable(std::vector<std::string> names, std::vector<std::vector<Cell>> columns)
      : names_(std::move(names)), columns_(std::move(columns)) {
    if (names_.size() != columns_.size())
      throw DataError("RawTable: " + std::to_string(names_.size()) + " names for " +
                      std::to_string(columns_.size()) + " columns");
    n_rows_ = columns_.empty() ? 0 : columns_.front().size();
    std::set<std::string_view> seen;
    for (std::size_t c = 0; c < names_.size(); ++c) {
      if (names_[c].empty()) throw DataError("RawTable: empty column name at index " + std::to_string(c));
      if (!seen.insert(names_[c]).second) throw DataError("RawTable: duplicate column name '" + names_[c] + "'");
      if (columns_[c].size() != n_rows_) throw DataError("RawTable: column '" + names_[c] + "' has ragged length");
    }
  }

  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_cols() const { return names_.size(); }
  const std::vector<std::string>& column_names() const { return names_; }
  const std::vector<Cell>& column(std::size_t c) const { return columns_.at(c); }
  const Cell& cell(std::size_t row, std::size_t col) const { return columns_.at(col).at(row); }

  std::optional<std::size_t> find(std::string_view name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names_.begin());
  }

  std::size_t require(std::string_view name) const {
    auto idx = find(name);
    if (!idx) throw DataError("no column named '" + std::string(name) + "'");
    return *idx;
  }

  std::size_t missing_count(std::size_t col) const {
    const auto& c = columns_.at(col);
    return static_cast<std::size_t>(std::count(c.begin(), c.end(), std::nullopt));
  }

  // Keeps columns for which keep(index) is true, preserving order.
  template <typename Pred>
  RawTable filter_columns(Pred keep) const {
    std::vector<std::string> names;
    std::vector<std::vector<Cell>> cols;
    for (std::size_t c = 0; c < n_cols(); ++c) {
      if (!keep(c)) continue;
      names.push_back(names_[c]);
      cols.push_back(columns_[c]);
    }
    RawTable out(std::move(names), std::move(cols));
    out.n_rows_ = n_rows_;
    return out;
  }

  RawTable with_column(std::string name, std::vector<Cell> values) const {
    auto names = names_;
    auto cols = columns_;
    names.push_back(std::move(name));
    cols.push_back(std::move(values));
    return RawTable(std::move(names), std::move(cols));
  }

  friend bool operator==(const RawTable&, const RawTable&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<std::vector<Cell>> columns_;
  std::size_t n_rows_ = 0;
};

struct TableFormat {
  char delimiter = ',';
  std::string missing;  // sentinel text for a missing cell; empty cells are always missing
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::string_view unquote(std::string_view s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

}  // namespace detail

// Shortest text that parses back to exactly the same double.
inline std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline RawTable parse_table(std::istream& in, const TableFormat& fmt = {}) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("table has no header row");
  std::vector<std::string> names;
  for (auto f : detail::split(line, fmt.delimiter)) names.emplace_back(detail::unquote(detail::trim(f)));
  std::vector<std::vector<Cell>> cols(names.size());

  std::size_t row = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    // With a single column a blank line is a missing cell, otherwise noise.
    if (detail::trim(line).empty() && names.size() != 1) continue;
    const auto fields = detail::split(line, fmt.delimiter);
    if (fields.size() != names.size())
      throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(names.size()) +
                      " fields, found " + std::to_string(fields.size()));
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const auto text = detail::unquote(detail::trim(fields[c]));
      if (text.empty() || (!fmt.missing.empty() && text == fmt.missing)) {
        cols[c].emplace_back(std::nullopt);
        continue;
      }
      double v = 0.0;
      const auto* first = text.data();
      const auto* last = text.data() + text.size();
      if (*first == '+') ++first;
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc{} || ptr != last)
        throw DataError("row " + std::to_string(row + 1) + ", column '" + names[c] + "': non-numeric value '" +
                        std::string(text) + "'");
      cols[c].emplace_back(v);
    }
    ++row;
  }
  return RawTable(std::move(names), std::move(cols));
}

inline RawTable load_table(const std::string& path, const TableFormat& fmt = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read table '" + path + "'");
  return parse_table(in, fmt);
}

inline void write_table(std::ostream& out, const RawTable& t, const TableFormat& fmt = {}) {
  const auto& names = t.column_names();
  for (std::size_t c = 0; c < names.size(); ++c) out << (c ? std::string(1, fmt.delimiter) : "") << names[c];
  out << '\n';
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    for (std::size_t c = 0; c < t.n_cols(); ++c) {
      if (c) out << fmt.delimiter;
      const auto& v = t.cell(r, c);
      out << (v ? format_number(*v) : fmt.missing);
    }
    out << '\n';
  }
}

inline void write_table(const std::string& path, const RawTable& t, const TableFormat& fmt = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write table '" + path + "'");
  write_table(out, t, fmt);
  if (!out) throw IoError("write failed for '" + path + "'");
}

struct DropResult {
  RawTable table;
  std::vector<std::string> dropped;
};

// Complete-case filtering by column: any column with a missing cell goes.
inline DropResult drop_missing_columns(const RawTable& t) {
  DropResult res;
  std::vector<bool> keep(t.n_cols());
  for (std::size_t c = 0; c < t.n_cols(); ++c) {
    keep[c] = t.missing_count(c) == 0;
    if (!keep[c]) res.dropped.push_back(t.column_names()[c]);
  }
  if (t.n_cols() > 0 && res.dropped.size() == t.n_cols())
    throw DataError("every column has missing values; nothing left to analyse");
  res.table = t.filter_columns([&](std::size_t c) { return keep[c]; });
  return res;
}

inline constexpr std::size_t kItemsPerTarget = 9;

// Appends `name` = row-wise sum of the item columns and removes the items.
inline RawTable compose_sum_target(const RawTable& t, std::span<const std::string> items, const std::string& name,
                                   std::size_t expected_items = kItemsPerTarget) {
  if (items.size() != expected_items)
    throw DataError("target '" + name + "' needs " + std::to_string(expected_items) + " item columns, got " +
                    std::to_string(items.size()));
  if (t.find(name)) throw DataError("target name '" + name + "' already exists as a column");
  std::set<std::string_view> unique(items.begin(), items.end());
  if (unique.size() != items.size()) throw DataError("target '" + name + "': duplicate item column");

  std::vector<std::size_t> idx;
  for (const auto& it : items) {
    const auto col = t.find(it);
    if (!col) throw DataError("target '" + name + "': item column '" + it + "' not found");
    if (t.missing_count(*col) != 0)
      throw DataError("target '" + name + "': item column '" + it + "' has missing cells");
    idx.push_back(*col);
  }
  std::vector<Cell> sum(t.n_rows());
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    double s = 0.0;
    for (auto c : idx) s += *t.cell(r, c);
    sum[r] = s;
  }
  auto reduced = t.filter_columns([&](std::size_t c) { return std::find(idx.begin(), idx.end(), c) == idx.end(); });
  return reduced.with_column(name, std::move(sum));
}

struct TargetDecl {
  std::string name;
  std::vector<std::string> items;  // empty: `name` is already a column
};

struct Provenance {
  std::size_t raw_rows = 0;
  std::size_t raw_cols = 0;
  std::vector<std::string> excluded;
  std::vector<std::string> dropped_missing;
  std::vector<TargetDecl> composed;
  std::size_t final_rows = 0;
  std::size_t final_features = 0;
  std::vector<std::string> targets;
};

inline nlohmann::json to_json(const Provenance& p) {
  nlohmann::json composed = nlohmann::json::array();
  for (const auto& t : p.composed) composed.push_back({{"name", t.name}, {"items", t.items}});
  return {{"raw_shape", {p.raw_rows, p.raw_cols}},
          {"excluded", p.excluded},
          {"dropped_missing", p.dropped_missing},
          {"n_dropped_missing", p.dropped_missing.size()},
          {"composed_targets", composed},
          {"targets", p.targets},
          {"final_shape", {p.final_rows, p.final_features + p.targets.size()}},
          {"n_features", p.final_features}};
}

struct Dataset {
  std::vector<std::string> feature_names;
  Eigen::MatrixXd X;  // n x p
  std::vector<std::pair<std::string, Eigen::VectorXd>> targets;
  Provenance meta;

  std::size_t n_rows() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t n_features() const { return feature_names.size(); }

  const Eigen::VectorXd& target(std::string_view name) const {
    for (const auto& [n, v] : targets)
      if (n == name) return v;
    throw DataError("unknown target '" + std::string(name) + "'");
  }

  bool has_target(std::string_view name) const {
    return std::any_of(targets.begin(), targets.end(), [&](const auto& t) { return t.first == name; });
  }

  std::size_t feature_index(std::string_view name) const {
    auto it = std::find(feature_names.begin(), feature_names.end(), name);
    if (it == feature_names.end()) throw DataError("unknown feature '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - feature_names.begin());
  }
};

// Splits a complete table into features and the named targets.
inline Dataset make_dataset(const RawTable& t, std::span<const std::string> target_names) {
  Dataset ds;
  std::vector<std::size_t> tcols;
  for (const auto& name : target_names) {
    const auto c = t.require(name);
    if (std::find(tcols.begin(), tcols.end(), c) != tcols.end()) throw DataError("target '" + name + "' declared twice");
    tcols.push_back(c);
  }
  for (std::size_t c = 0; c < t.n_cols(); ++c)
    if (t.missing_count(c) != 0) throw DataError("column '" + t.column_names()[c] + "' has missing cells");

  const auto n = t.n_rows();
  std::vector<std::size_t> fcols;
  for (std::size_t c = 0; c < t.n_cols(); ++c)
    if (std::find(tcols.begin(), tcols.end(), c) == tcols.end()) fcols.push_back(c);

  ds.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(fcols.size()));
  for (std::size_t j = 0; j < fcols.size(); ++j) {
    ds.feature_names.push_back(t.column_names()[fcols[j]]);
    const auto& col = t.column(fcols[j]);
    for (std::size_t r = 0; r < n; ++r) ds.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = *col[r];
  }
  for (std::size_t k = 0; k < tcols.size(); ++k) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    const auto& col = t.column(tcols[k]);
    for (std::size_t r = 0; r < n; ++r) y(static_cast<Eigen::Index>(r)) = *col[r];
    ds.targets.emplace_back(target_names[k], std::move(y));
  }
  ds.meta.final_rows = n;
  ds.meta.final_features = fcols.size();
  ds.meta.targets.assign(target_names.begin(), target_names.end());
  return ds;
}

struct PreprocessOptions {
  std::vector<TargetDecl> targets;
  std::vector<std::string> exclude;
};

// Full preprocessing: exclusions, column-wise complete-case filtering, then
// summed-target composition.
inline Dataset preprocess(const RawTable& raw, const PreprocessOptions& opt) {
  Provenance meta;
  meta.raw_rows = raw.n_rows();
  meta.raw_cols = raw.n_cols();
  for (const auto& e : opt.exclude) raw.require(e);
  meta.excluded = opt.exclude;
  auto t = raw.filter_columns([&](std::size_t c) {
    return std::find(opt.exclude.begin(), opt.exclude.end(), raw.column_names()[c]) == opt.exclude.end();
  });

  // Declared targets that already exist must survive the missing-column
  // filter; report that clearly instead of "no column named".
  for (const auto& d : opt.targets) {
    const auto& names = d.items.empty() ? std::vector<std::string>{d.name} : d.items;
    for (const auto& n : names) {
      const auto c = t.find(n);
      if (!c) throw DataError("declared column '" + n + "' not found");
      if (t.missing_count(*c) != 0)
        throw DataError("declared column '" + n + "' has missing cells and would be dropped");
    }
  }

  auto dropped = drop_missing_columns(t);
  meta.dropped_missing = std::move(dropped.dropped);
  t = std::move(dropped.table);

  std::vector<std::string> target_names;
  for (const auto& d : opt.targets) {
    if (!d.items.empty()) {
      t = compose_sum_target(t, d.items, d.name);
      meta.composed.push_back(d);
    }
    target_names.push_back(d.name);
  }
  if (target_names.empty()) throw ConfigError("no targets declared");

  auto ds = make_dataset(t, target_names);
  meta.final_rows = ds.meta.final_rows;
  meta.final_features = ds.meta.final_features;
  meta.targets = std::move(ds.meta.targets);
  ds.meta = std::move(meta);
  return ds;
}

// Inverse of make_dataset: features first, then targets.
inline RawTable dataset_to_table(const Dataset& ds) {
  std::vector<std::string> names = ds.feature_names;
  std::vector<std::vector<Cell>> cols;
  const auto n = ds.n_rows();
  for (Eigen::Index j = 0; j < ds.X.cols(); ++j) {
    std::vector<Cell> col(n);
    for (std::size_t r = 0; r < n; ++r) col[r] = ds.X(static_cast<Eigen::Index>(r), j);
    cols.push_back(std::move(col));
  }
  for (const auto& [name, y] : ds.targets) {
    names.push_back(name);
    std::vector<Cell> col(n);
    for (std::size_t r = 0; r < n; ++r) col[r] = y(static_cast<Eigen::Index>(r));
    cols.push_back(std::move(col));
  }
  return RawTable(std::move(names), std::move(cols));
}

struct BinaryTarget {
  std::vector<int> labels;
  double threshold = 0.0;
};

inline double median(std::vector<double> v) {
  if (v.empty()) throw DataError("median of empty vector");
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return lo + (hi - lo) / 2.0;
}

// Median split; label 1 iff y > median, so ties at the median go to 0.
inline BinaryTarget binarize_target(std::span<const double> y) {
  if (y.empty()) throw DataError("binarize_target: empty target");
  const auto [mn, mx] = std::minmax_element(y.begin(), y.end());
  if (*mn == *mx) throw DataError("binarize_target: constant target cannot be split");
  BinaryTarget out;
  out.threshold = median(std::vector<double>(y.begin(), y.end()));
  out.labels.reserve(y.size());
  std::size_t ones = 0;
  for (double v : y) {
    out.labels.push_back(v > out.threshold ? 1 : 0);
    ones += out.labels.back();
  }
  if (ones == 0 || ones == y.size())
    throw DataError("binarize_target: median split leaves one class empty");
  return out;
}

inline BinaryTarget binarize_target(const Eigen::VectorXd& y) {
  return binarize_target(std::span<const double>(y.data(), static_cast<std::size_t>(y.size())));
}

}  // namespace qfs
