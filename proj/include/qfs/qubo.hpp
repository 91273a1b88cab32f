#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "qfs/dataset.hpp"
#include "qfs/error.hpp"
#include "qfs/infotheory.hpp"

namespace qfs {

using Assignment = std::vector<std::uint8_t>;

// Upper-triangular QUBO coefficients plus a constant offset:
//   f(x) = sum_i Q_ii x_i + sum_{i<j} Q_ij x_i x_j + offset
// Stored densely; feature problems are fully connected anyway.
class QuboMatrix {
 public:
  struct Entry {
    std::size_t i, j;
    double value;
  };

  QuboMatrix() = default;
  explicit QuboMatrix(std::size_t dim, double offset = 0.0) : dim_(dim), q_(dim * dim, 0.0), offset_(offset) {
    if (dim == 0) throw ConfigError("QUBO dimension must be at least 1");
  }

  std::size_t dim() const { return dim_; }
  double offset() const { return offset_; }
  void set_offset(double v) { offset_ = checked(v); }
  void add_offset(double v) { offset_ = checked(offset_ + v); }

  // Either index order is accepted; storage is always (min, max).
  double at(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    bounds(j);
    return q_[i * dim_ + j];
  }
  void set(std::size_t i, std::size_t j, double v) {
    if (i > j) std::swap(i, j);
    bounds(j);
    q_[i * dim_ + j] = checked(v);
  }
  void add(std::size_t i, std::size_t j, double v) { set(i, j, at(i, j) + v); }

  double linear(std::size_t i) const { return at(i, i); }

  // Nonzero coefficients in row-major order.
  std::vector<Entry> entries() const {
    std::vector<Entry> out;
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t j = i; j < dim_; ++j)
        if (q_[i * dim_ + j] != 0.0) out.push_back({i, j, q_[i * dim_ + j]});
    return out;
  }

  double max_abs_coefficient() const {
    double m = 0.0;
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t j = i; j < dim_; ++j) m = std::max(m, std::abs(q_[i * dim_ + j]));
    return m;
  }

  QuboMatrix scaled(double c) const {
    QuboMatrix out = *this;
    for (auto& v : out.q_) v *= c;
    out.offset_ *= c;
    return out;
  }

  friend bool operator==(const QuboMatrix&, const QuboMatrix&) = default;

 private:
  void bounds(std::size_t j) const {
    if (j >= dim_) throw ConfigError("QUBO index " + std::to_string(j) + " out of range for dim " + std::to_string(dim_));
  }
  static double checked(double v) {
    if (!std::isfinite(v)) throw DataError("QUBO coefficient is not finite");
    return v;
  }

  std::size_t dim_ = 0;
  std::vector<double> q_;
  double offset_ = 0.0;
};

inline double energy(const QuboMatrix& q, std::span<const std::uint8_t> x) {
  if (x.size() != q.dim())
    throw DataError("energy: assignment has " + std::to_string(x.size()) + " entries, QUBO dim is " +
                    std::to_string(q.dim()));
  double e = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!x[i]) continue;
    e += q.at(i, i);
    for (std::size_t j = i + 1; j < x.size(); ++j)
      if (x[j]) e += q.at(i, j);
  }
  return e + q.offset();
}

// Adds lambda * (sum_i x_i - k)^2, expanded using x_i^2 = x_i.
inline QuboMatrix apply_cardinality(const QuboMatrix& q, std::size_t k, double lambda) {
  if (k < 1 || k > q.dim())
    throw ConfigError("cardinality k=" + std::to_string(k) + " outside [1, " + std::to_string(q.dim()) + "]");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("cardinality penalty must be positive");
  QuboMatrix out = q;
  const double kd = static_cast<double>(k);
  for (std::size_t i = 0; i < q.dim(); ++i) {
    out.add(i, i, lambda * (1.0 - 2.0 * kd));
    for (std::size_t j = i + 1; j < q.dim(); ++j) out.add(i, j, 2.0 * lambda);
  }
  out.add_offset(lambda * kd * kd);
  return out;
}

// Spin model E(s) = sum_i h_i s_i + sum_{i<j} J_ij s_i s_j + offset, s in {-1,+1}.
struct IsingModel {
  std::vector<double> h;
  std::vector<std::tuple<std::size_t, std::size_t, double>> couplings;  // (i, j, J_ij), i < j
  double offset = 0.0;

  std::size_t dim() const { return h.size(); }
};

inline double ising_energy(const IsingModel& m, std::span<const int> spins) {
  if (spins.size() != m.dim()) throw DataError("ising_energy: dimension mismatch");
  double e = m.offset;
  for (std::size_t i = 0; i < spins.size(); ++i) e += m.h[i] * spins[i];
  for (const auto& [i, j, v] : m.couplings) e += v * spins[i] * spins[j];
  return e;
}

// Substitutes s = 2x - 1.
inline QuboMatrix ising_to_qubo(const IsingModel& m) {
  QuboMatrix q(std::max<std::size_t>(m.dim(), 1), m.offset);
  for (std::size_t i = 0; i < m.dim(); ++i) {
    q.add(i, i, 2.0 * m.h[i]);
    q.add_offset(-m.h[i]);
  }
  for (const auto& [i, j, v] : m.couplings) {
    if (i >= j || j >= m.dim()) throw DataError("ising coupling indices must satisfy i < j < dim");
    q.add(i, j, 4.0 * v);
    q.add(i, i, -2.0 * v);
    q.add(j, j, -2.0 * v);
    q.add_offset(v);
  }
  return q;
}

enum class QuboBuildMode {
  RelevanceRedundancy,  // Q_ii = -I(X_i;Y), Q_ij = +I(X_i;X_j)
  Miqubo,               // Q_ii = -I(X_i;Y), Q_ij = -(I(X_i;Y|X_j) + I(X_j;Y|X_i)) / 2
};

inline std::string_view to_string(QuboBuildMode m) {
  return m == QuboBuildMode::RelevanceRedundancy ? "relevance_redundancy" : "miqubo";
}

inline QuboBuildMode parse_build_mode(std::string_view s) {
  if (s == "relevance_redundancy" || s == "rr") return QuboBuildMode::RelevanceRedundancy;
  if (s == "miqubo") return QuboBuildMode::Miqubo;
  throw ConfigError("unknown QUBO build mode '" + std::string(s) + "'");
}

// Discretized features and target for one (dataset, target) pair, with the
// relevance vector I(X_i; Y) that both the QUBO and the rank tie-break use.
struct FeatureInformation {
  std::vector<info::DiscreteColumn> features;
  info::DiscreteColumn target;
  std::vector<double> relevance;
};

inline FeatureInformation feature_information(const Dataset& ds, std::string_view target,
                                              std::uint32_t max_levels = info::kDefaultMaxLevels) {
  FeatureInformation fi;
  fi.target = info::discretize(ds.target(target), max_levels);
  for (Eigen::Index j = 0; j < ds.X.cols(); ++j) {
    const Eigen::VectorXd col = ds.X.col(j);
    fi.features.push_back(info::discretize(col, max_levels));
    fi.relevance.push_back(info::mutual_information(fi.features.back(), fi.target));
  }
  return fi;
}

inline QuboMatrix build_feature_qubo(const FeatureInformation& fi, QuboBuildMode mode) {
  const std::size_t p = fi.features.size();
  if (p < 2) throw DataError("feature QUBO needs at least 2 features, got " + std::to_string(p));
  QuboMatrix q(p);
  for (std::size_t i = 0; i < p; ++i) q.set(i, i, -fi.relevance[i]);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i + 1; j < p; ++j) {
      if (mode == QuboBuildMode::RelevanceRedundancy) {
        q.set(i, j, info::mutual_information(fi.features[i], fi.features[j]));
      } else {
        const double a = info::conditional_mutual_information(fi.features[i], fi.target, fi.features[j]);
        const double b = info::conditional_mutual_information(fi.features[j], fi.target, fi.features[i]);
        q.set(i, j, -(a + b) / 2.0);
      }
    }
  }
  return q;
}

inline QuboMatrix build_feature_qubo(const Dataset& ds, std::string_view target, QuboBuildMode mode,
                                     std::uint32_t max_levels = info::kDefaultMaxLevels) {
  if (!ds.has_target(target)) throw DataError("unknown target '" + std::string(target) + "'");
  return build_feature_qubo(feature_information(ds, target, max_levels), mode);
}

inline nlohmann::json to_json(const QuboMatrix& q) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : q.entries()) entries.push_back({e.i, e.j, e.value});
  return {{"dim", q.dim()}, {"offset", q.offset()}, {"entries", entries}};
}

inline QuboMatrix qubo_from_json(const nlohmann::json& j) {
  try {
    const auto dim = j.at("dim").get<std::size_t>();
    QuboMatrix q(dim, j.value("offset", 0.0));
    std::vector<bool> seen(dim * dim, false);
    for (const auto& e : j.at("entries")) {
      if (!e.is_array() || e.size() != 3) throw DataError("QUBO entry must be [i, j, value]");
      const auto i = e[0].get<std::size_t>();
      const auto k = e[1].get<std::size_t>();
      if (i > k || k >= dim) throw DataError("QUBO entry indices must satisfy i <= j < dim");
      if (seen[i * dim + k]) throw DataError("duplicate QUBO entry (" + std::to_string(i) + ", " + std::to_string(k) + ")");
      seen[i * dim + k] = true;
      q.set(i, k, e[2].get<double>());
    }
    return q;
  } catch (const nlohmann::json::exception& ex) {
    throw DataError(std::string("malformed QUBO JSON: ") + ex.what());
  }
}

}  // namespace qfs
