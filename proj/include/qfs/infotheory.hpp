#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qfs/error.hpp"

// Plug-in (maximum-likelihood) information measures over discrete columns.
// All quantities are in nats.
namespace qfs::info {

struct DiscreteColumn {
  std::vector<std::uint32_t> codes;
  std::uint32_t cardinality = 1;

  std::size_t size() const { return codes.size(); }
};

inline constexpr std::uint32_t kDefaultMaxLevels = 10;

// Negative estimates down to this magnitude are floating-point noise.
inline constexpr double kClampTolerance = 1e-12;

// Columns with at most max_levels distinct values are rank-coded losslessly;
// anything else is cut into max_levels quantile bins. Values equal to a cut
// point always share a bin, so bins may merge when there are heavy ties.
inline DiscreteColumn discretize(std::span<const double> values, std::uint32_t max_levels = kDefaultMaxLevels) {
  if (values.empty()) throw DataError("discretize: empty column");
  if (max_levels == 0) throw ConfigError("discretize: max_levels must be positive");
  for (double v : values)
    if (!std::isfinite(v)) throw DataError("discretize: non-finite value");

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> distinct = sorted;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  DiscreteColumn out;
  out.codes.resize(values.size());
  if (distinct.size() <= max_levels) {
    for (std::size_t i = 0; i < values.size(); ++i)
      out.codes[i] = static_cast<std::uint32_t>(std::lower_bound(distinct.begin(), distinct.end(), values[i]) -
                                                distinct.begin());
    out.cardinality = static_cast<std::uint32_t>(distinct.size());
    return out;
  }

  const std::size_t n = sorted.size();
  std::vector<double> cuts;
  for (std::size_t b = 1; b < max_levels; ++b) cuts.push_back(sorted[b * n / max_levels]);
  std::vector<std::uint32_t> raw(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    raw[i] = static_cast<std::uint32_t>(std::upper_bound(cuts.begin(), cuts.end(), values[i]) - cuts.begin());

  // Compact to 0..used-1 in bin order.
  std::vector<std::uint32_t> remap(max_levels, 0);
  std::vector<bool> used(max_levels, false);
  for (auto r : raw) used[r] = true;
  std::uint32_t next = 0;
  for (std::uint32_t b = 0; b < max_levels; ++b)
    if (used[b]) remap[b] = next++;
  for (std::size_t i = 0; i < raw.size(); ++i) out.codes[i] = remap[raw[i]];
  out.cardinality = next;
  return out;
}

inline DiscreteColumn discretize(const Eigen::VectorXd& values, std::uint32_t max_levels = kDefaultMaxLevels) {
  return discretize(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())), max_levels);
}

// Nonzero cell counts of an empirical (joint) distribution, in ascending
// order so that sums over them do not depend on how codes were combined.
struct JointHistogram {
  std::vector<std::size_t> counts;
  std::size_t total = 0;
};

namespace detail {

inline void check_same_length(std::size_t a, std::size_t b) {
  if (a != b) throw DataError("length mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
}

inline JointHistogram histogram_from_keys(std::vector<std::uint64_t> keys, std::uint64_t key_space) {
  JointHistogram h;
  h.total = keys.size();
  if (key_space <= std::max<std::uint64_t>(std::uint64_t{1} << 20, 4 * keys.size())) {
    std::vector<std::size_t> dense(static_cast<std::size_t>(key_space), 0);
    for (auto k : keys) ++dense[static_cast<std::size_t>(k)];
    for (auto c : dense)
      if (c) h.counts.push_back(c);
  } else {
    std::sort(keys.begin(), keys.end());
    for (std::size_t i = 0; i < keys.size();) {
      std::size_t j = i;
      while (j < keys.size() && keys[j] == keys[i]) ++j;
      h.counts.push_back(j - i);
      i = j;
    }
  }
  std::sort(h.counts.begin(), h.counts.end());
  return h;
}

}  // namespace detail

inline JointHistogram histogram(const DiscreteColumn& x) {
  std::vector<std::uint64_t> keys(x.codes.begin(), x.codes.end());
  return detail::histogram_from_keys(std::move(keys), x.cardinality);
}

inline JointHistogram histogram(const DiscreteColumn& x, const DiscreteColumn& y) {
  detail::check_same_length(x.size(), y.size());
  std::vector<std::uint64_t> keys(x.size());
  for (std::size_t i = 0; i < keys.size(); ++i) keys[i] = std::uint64_t{x.codes[i]} * y.cardinality + y.codes[i];
  return detail::histogram_from_keys(std::move(keys), std::uint64_t{x.cardinality} * y.cardinality);
}

inline JointHistogram histogram(const DiscreteColumn& x, const DiscreteColumn& y, const DiscreteColumn& z) {
  detail::check_same_length(x.size(), y.size());
  detail::check_same_length(x.size(), z.size());
  std::vector<std::uint64_t> keys(x.size());
  const std::uint64_t yz = std::uint64_t{y.cardinality} * z.cardinality;
  for (std::size_t i = 0; i < keys.size(); ++i)
    keys[i] = std::uint64_t{x.codes[i]} * yz + std::uint64_t{y.codes[i]} * z.cardinality + z.codes[i];
  return detail::histogram_from_keys(std::move(keys), std::uint64_t{x.cardinality} * yz);
}

// H = ln n - (1/n) sum c ln c, which equals -sum (c/n) ln(c/n).
inline double entropy(const JointHistogram& h) {
  if (h.total == 0) throw DataError("entropy of empty sample");
  const double n = static_cast<double>(h.total);
  double acc = 0.0;
  for (auto c : h.counts) {
    const double cd = static_cast<double>(c);
    acc += cd * std::log(cd);
  }
  return std::max(0.0, std::log(n) - acc / n);
}

inline double entropy(const DiscreteColumn& x) { return entropy(histogram(x)); }
inline double joint_entropy(const DiscreteColumn& x, const DiscreteColumn& y) { return entropy(histogram(x, y)); }
inline double joint_entropy(const DiscreteColumn& x, const DiscreteColumn& y, const DiscreteColumn& z) {
  return entropy(histogram(x, y, z));
}

namespace detail {

inline double clamp_nonnegative(double v, const char* what) {
  if (v >= 0.0) return v;
  if (v > -kClampTolerance) return 0.0;
  throw InternalError(std::string(what) + " estimate is negative beyond rounding: " + std::to_string(v));
}

}  // namespace detail

inline double mutual_information(const DiscreteColumn& x, const DiscreteColumn& y) {
  detail::check_same_length(x.size(), y.size());
  const double hx = entropy(x);
  const double hy = entropy(y);
  // Ordering the marginal sum keeps I(X;Y) and I(Y;X) bit-identical.
  const double marg = hx < hy ? hx + hy : hy + hx;
  return detail::clamp_nonnegative(marg - joint_entropy(x, y), "mutual information");
}

// I(X;Y|Z) = H(X,Z) + H(Y,Z) - H(Z) - H(X,Y,Z)
inline double conditional_mutual_information(const DiscreteColumn& x, const DiscreteColumn& y,
                                             const DiscreteColumn& z) {
  detail::check_same_length(x.size(), y.size());
  detail::check_same_length(x.size(), z.size());
  const double hxz = joint_entropy(x, z);
  const double hyz = joint_entropy(y, z);
  const double pair = hxz < hyz ? hxz + hyz : hyz + hxz;
  return detail::clamp_nonnegative(pair - entropy(z) - joint_entropy(x, y, z), "conditional mutual information");
}

}  // namespace qfs::info
