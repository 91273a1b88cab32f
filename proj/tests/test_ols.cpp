#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "qfs/ols.hpp"
#include "support.hpp"

using namespace qfs;
using Catch::Approx;

namespace {

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& rows) {
  Eigen::MatrixXd M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return M;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

TEST_CASE("exact line y = 3 + 2x") {
  Eigen::MatrixXd X(5, 1);
  X << 0, 1, 2, 4, 7;
  Eigen::VectorXd y = (X.col(0).array() * 2.0 + 3.0).matrix();
  const auto fit = ols_fit(X, y);
  const double sd = std::sqrt((X.col(0).array() - X.mean()).square().mean());
  CHECK(fit.intercept == Approx(3.0).margin(1e-12));
  CHECK(fit.raw_coefficients(0) == Approx(2.0).margin(1e-12));
  CHECK(fit.coefficients(0) == Approx(2.0 * sd).margin(1e-12));
  CHECK(fit.r_squared == Approx(1.0).margin(1e-12));
}

TEST_CASE("matches the normal-equations oracle on random systems") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::size_t> dim(1, 20);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t p = dim(rng);
    std::uniform_int_distribution<std::size_t> rows(std::max<std::size_t>(2 * p + 5, 30), 200);
    const auto sys = testing::random_linear_system(rng, rows(rng), p);
    const auto ref = testing::normal_equations(sys.X, sys.y);
    const auto fit = ols_fit(to_matrix(sys.X), to_vector(sys.y));
    CHECK(fit.intercept == Approx(ref[0]).margin(1e-8));
    for (std::size_t j = 0; j < p; ++j) CHECK(fit.raw_coefficients(static_cast<Eigen::Index>(j)) == Approx(ref[j + 1]).margin(1e-8));
  }
}

TEST_CASE("residuals are orthogonal to every design column") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const auto sys = testing::random_linear_system(rng, 80, 6);
    const auto X = to_matrix(sys.X);
    const auto y = to_vector(sys.y);
    const auto fit = ols_fit(X, y);
    const Eigen::VectorXd resid = y - fit.predict(X);
    CHECK(std::abs(resid.sum()) < 1e-8);
    for (Eigen::Index j = 0; j < X.cols(); ++j) CHECK(std::abs(resid.dot(X.col(j))) < 1e-8 * (1.0 + X.col(j).norm()));
  }
}

TEST_CASE("null signal leaves small coefficients") {
  std::mt19937_64 rng(15);
  std::normal_distribution<double> g;
  Eigen::MatrixXd X(2000, 5);
  Eigen::VectorXd y(2000);
  for (Eigen::Index i = 0; i < 2000; ++i) {
    for (Eigen::Index j = 0; j < 5; ++j) X(i, j) = g(rng);
    y(i) = g(rng);
  }
  const auto fit = ols_fit(X, y);
  CHECK(fit.r_squared < 0.02);
  CHECK(fit.coefficients.cwiseAbs().maxCoeff() < 0.1);
}

TEST_CASE("constant column gets zero coefficient and a warning") {
  Eigen::MatrixXd X(6, 2);
  X << 1, 4, 2, 4, 3, 4, 4, 4, 5, 4, 6, 4;
  Eigen::VectorXd y(6);
  y << 1, 3, 5, 7, 9, 11;
  const auto fit = ols_fit(X, y);
  CHECK(fit.constant_columns == std::vector<std::size_t>{1});
  CHECK(fit.warnings.size() == 1);
  CHECK(fit.coefficients(1) == 0.0);
  CHECK(fit.raw_coefficients(0) == Approx(2.0).margin(1e-12));
  CHECK(fit.intercept == Approx(-1.0).margin(1e-12));
}

TEST_CASE("duplicate columns split the weight at minimum norm") {
  Eigen::MatrixXd X(8, 2);
  for (Eigen::Index i = 0; i < 8; ++i) X(i, 0) = X(i, 1) = static_cast<double>(i % 5);
  Eigen::VectorXd y = 4.0 * X.col(0);
  const auto fit = ols_fit(X, y);
  CHECK(fit.raw_coefficients(0) == Approx(2.0).margin(1e-10));
  CHECK(fit.raw_coefficients(1) == Approx(2.0).margin(1e-10));
}

TEST_CASE("ols_fit rejects n <= p") {
  CHECK_THROWS_AS(ols_fit(Eigen::MatrixXd::Random(3, 3), Eigen::VectorXd::Random(3)), DataError);
  CHECK_THROWS_AS(ols_fit(Eigen::MatrixXd::Random(5, 2), Eigen::VectorXd::Random(4)), DataError);
}
