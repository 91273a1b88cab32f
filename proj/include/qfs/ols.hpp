#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qfs/error.hpp"

namespace qfs {

struct OlsFit {
  Eigen::VectorXd coefficients;      // per standardized column
  Eigen::VectorXd raw_coefficients;  // per original column
  double intercept = 0.0;            // original scale
  double r_squared = 0.0;
  std::vector<std::size_t> constant_columns;
  std::vector<std::string> warnings;

  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const {
    return (X * raw_coefficients).array() + intercept;
  }
};

// Least squares with intercept on z-scored columns (population sd). Uses a
// complete orthogonal decomposition, so collinear designs get the
// minimum-norm solution. Constant columns are given coefficient 0.
inline OlsFit ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (y.size() != n) throw DataError("ols_fit: X has " + std::to_string(n) + " rows, y has " + std::to_string(y.size()));
  if (n <= p) throw DataError("ols_fit: need more rows than columns (n=" + std::to_string(n) + ", p=" + std::to_string(p) + ")");

  OlsFit fit;
  const Eigen::RowVectorXd mean = X.colwise().mean();
  Eigen::MatrixXd Z = X.rowwise() - mean;
  Eigen::VectorXd sd(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    sd(j) = std::sqrt(Z.col(j).squaredNorm() / static_cast<double>(n));
    if (sd(j) == 0.0 || sd(j) < 1e-12 * (1.0 + std::abs(mean(j)))) {
      fit.constant_columns.push_back(static_cast<std::size_t>(j));
      fit.warnings.push_back("column " + std::to_string(j) + " is constant; coefficient set to 0");
      sd(j) = 0.0;
      Z.col(j).setZero();
    } else {
      Z.col(j) /= sd(j);
    }
  }

  const double ybar = y.mean();
  const Eigen::VectorXd yc = y.array() - ybar;
  fit.coefficients = p > 0 ? Eigen::VectorXd(Z.completeOrthogonalDecomposition().solve(yc)) : Eigen::VectorXd();
  for (auto j : fit.constant_columns) fit.coefficients(static_cast<Eigen::Index>(j)) = 0.0;

  fit.raw_coefficients = Eigen::VectorXd::Zero(p);
  fit.intercept = ybar;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (sd(j) == 0.0) continue;
    fit.raw_coefficients(j) = fit.coefficients(j) / sd(j);
    fit.intercept -= fit.raw_coefficients(j) * mean(j);
  }

  const Eigen::VectorXd resid = yc - Z * fit.coefficients;
  const double ss_tot = yc.squaredNorm();
  fit.r_squared = ss_tot > 0.0 ? 1.0 - resid.squaredNorm() / ss_tot : 1.0;
  return fit;
}

}  // namespace qfs
