#pragma once

// Test-only helpers: random instance generators and brute-force oracles that
// stay independent of the library's implementation paths.

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <utility>
#include <random>
#include <vector>

#include "qfs/infotheory.hpp"
#include "qfs/qubo.hpp"

namespace qfs::testing {

inline info::DiscreteColumn random_column(std::mt19937_64& rng, std::size_t n, std::uint32_t alphabet) {
  std::uniform_int_distribution<std::uint32_t> d(0, alphabet - 1);
  info::DiscreteColumn c;
  c.cardinality = alphabet;
  for (std::size_t i = 0; i < n; ++i) c.codes.push_back(d(rng));
  return c;
}

// -sum p log p over a map of tuple counts.
template <typename Key>
double plugin_entropy(const std::map<Key, double>& counts, double n) {
  double h = 0.0;
  for (const auto& [k, c] : counts)
    if (c > 0) h -= (c / n) * std::log(c / n);
  return h;
}

// I(X;Y) = sum_{x,y} p(x,y) log(p(x,y) / (p(x) p(y))), straight from the
// contingency table.
inline double oracle_mi(const info::DiscreteColumn& x, const info::DiscreteColumn& y) {
  const double n = static_cast<double>(x.size());
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> joint;
  std::map<std::uint32_t, double> px, py;
  for (std::size_t i = 0; i < x.size(); ++i) {
    joint[{x.codes[i], y.codes[i]}] += 1;
    px[x.codes[i]] += 1;
    py[y.codes[i]] += 1;
  }
  double mi = 0.0;
  for (const auto& [k, c] : joint) {
    const double pxy = c / n;
    mi += pxy * std::log(pxy / ((px[k.first] / n) * (py[k.second] / n)));
  }
  return mi;
}

// I(X;Y|Z) = sum_z p(z) I(X;Y | Z=z), computing each stratum separately.
inline double oracle_cmi(const info::DiscreteColumn& x, const info::DiscreteColumn& y,
                         const info::DiscreteColumn& z) {
  const double n = static_cast<double>(x.size());
  std::map<std::uint32_t, std::pair<info::DiscreteColumn, info::DiscreteColumn>> strata;
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto& s = strata[z.codes[i]];
    s.first.codes.push_back(x.codes[i]);
    s.second.codes.push_back(y.codes[i]);
  }
  double cmi = 0.0;
  for (auto& [zv, s] : strata) {
    s.first.cardinality = x.cardinality;
    s.second.cardinality = y.cardinality;
    cmi += (static_cast<double>(s.first.size()) / n) * oracle_mi(s.first, s.second);
  }
  return cmi;
}

inline QuboMatrix random_qubo(std::mt19937_64& rng, std::size_t dim, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  QuboMatrix q(dim, d(rng));
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = i; j < dim; ++j) q.set(i, j, d(rng));
  return q;
}

// x^T Q x over the full (upper-triangular) matrix, independent of energy().
inline double dense_energy(const QuboMatrix& q, const Assignment& x) {
  double e = q.offset();
  for (std::size_t i = 0; i < q.dim(); ++i)
    for (std::size_t j = 0; j < q.dim(); ++j)
      if (i <= j) e += x[i] * q.at(i, j) * x[j];
  return e;
}

inline Assignment bits(std::uint64_t mask, std::size_t dim) {
  Assignment x(dim);
  for (std::size_t i = 0; i < dim; ++i) x[i] = (mask >> i) & 1u;
  return x;
}

inline double brute_min(const QuboMatrix& q) {
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << q.dim()); ++m) best = std::min(best, dense_energy(q, bits(m, q.dim())));
  return best;
}

// Minimum over assignments with exactly k ones.
inline double brute_min_k(const QuboMatrix& q, std::size_t k) {
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << q.dim()); ++m)
    if (static_cast<std::size_t>(std::popcount(m)) == k) best = std::min(best, dense_energy(q, bits(m, q.dim())));
  return best;
}

// Solves (A^T A) b = A^T y for A = [1 | X] by Gaussian elimination with
// partial pivoting. Returns {intercept, b_1..b_p} on the raw scale.
inline std::vector<double> normal_equations(const std::vector<std::vector<double>>& X, const std::vector<double>& y) {
  const std::size_t n = X.size(), m = X.front().size() + 1;
  auto a = [&](std::size_t r, std::size_t c) { return c == 0 ? 1.0 : X[r][c - 1]; };
  std::vector<std::vector<double>> M(m, std::vector<double>(m + 1, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t r = 0; r < n; ++r) M[i][j] += a(r, i) * a(r, j);
    for (std::size_t r = 0; r < n; ++r) M[i][m] += a(r, i) * y[r];
  }
  for (std::size_t c = 0; c < m; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < m; ++r)
      if (std::abs(M[r][c]) > std::abs(M[piv][c])) piv = r;
    std::swap(M[c], M[piv]);
    for (std::size_t r = 0; r < m; ++r) {
      if (r == c) continue;
      const double f = M[r][c] / M[c][c];
      for (std::size_t k = c; k <= m; ++k) M[r][k] -= f * M[c][k];
    }
  }
  std::vector<double> b(m);
  for (std::size_t i = 0; i < m; ++i) b[i] = M[i][m] / M[i][i];
  return b;
}

struct LinearSystem {
  std::vector<std::vector<double>> X;  // row-major
  std::vector<double> y;
};

inline LinearSystem random_linear_system(std::mt19937_64& rng, std::size_t n, std::size_t p) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> scale(0.5, 3.0), shift(-5.0, 5.0);
  std::vector<double> beta(p), sc(p), sh(p);
  for (std::size_t j = 0; j < p; ++j) {
    beta[j] = g(rng);
    sc[j] = scale(rng);
    sh[j] = shift(rng);
  }
  LinearSystem s;
  for (std::size_t r = 0; r < n; ++r) {
    std::vector<double> row(p);
    double yv = 1.5 + 0.5 * g(rng);
    for (std::size_t j = 0; j < p; ++j) {
      row[j] = sh[j] + sc[j] * g(rng);
      yv += beta[j] * row[j];
    }
    s.X.push_back(std::move(row));
    s.y.push_back(yv);
  }
  return s;
}

}  // namespace qfs::testing
