#include <catch2/catch_amalgamated.hpp>

#include <boost/math/distributions/students_t.hpp>
#include <random>
#include <vector>

#include "qfs/metrics.hpp"

using namespace qfs;
using Catch::Approx;

TEST_CASE("balanced accuracy examples") {
  std::vector<int> y{0, 0, 1, 1};
  CHECK(balanced_accuracy(y, y) == 1.0);
  CHECK(balanced_accuracy(y, std::vector<int>{0, 0, 0, 0}) == 0.5);
  CHECK(balanced_accuracy(std::vector<int>{0, 0, 0, 1}, std::vector<int>{0, 0, 1, 1}) == (2.0 / 3.0 + 1.0) / 2.0);
}

TEST_CASE("balanced accuracy rejects a single-class truth and bad labels") {
  CHECK_THROWS_AS(balanced_accuracy(std::vector<int>{1, 1}, std::vector<int>{1, 0}), DataError);
  CHECK_THROWS_AS(balanced_accuracy(std::vector<int>{0, 2}, std::vector<int>{0, 1}), DataError);
  CHECK_THROWS_AS(balanced_accuracy(std::vector<int>{0, 1}, std::vector<int>{0}), DataError);
}

TEST_CASE("balanced accuracy is symmetric under relabeling") {
  std::mt19937_64 rng(5);
  std::bernoulli_distribution coin(0.3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> t{0, 1}, p{coin(rng), coin(rng)};
    for (int i = 0; i < 40; ++i) {
      t.push_back(coin(rng));
      p.push_back(coin(rng));
    }
    std::vector<int> tf, pf;
    for (auto v : t) tf.push_back(1 - v);
    for (auto v : p) pf.push_back(1 - v);
    CHECK(balanced_accuracy(t, p) == Approx(balanced_accuracy(tf, pf)).margin(1e-15));
  }
}

TEST_CASE("negative MAE examples and properties") {
  std::vector<double> a{1, 2};
  CHECK(negative_mae(a, a) == 0.0);
  CHECK(negative_mae(a, std::vector<double>{2, 4}) == -1.5);
  CHECK_THROWS_AS(negative_mae(a, std::vector<double>{1}), DataError);

  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x, y, xs, ys;
    const double c = 10 * g(rng);
    for (int i = 0; i < 20; ++i) {
      x.push_back(g(rng));
      y.push_back(g(rng));
      xs.push_back(x.back() + c);
      ys.push_back(y.back() + c);
    }
    CHECK(negative_mae(x, y) <= 0.0);
    CHECK(negative_mae(x, y) == Approx(negative_mae(xs, ys)).margin(1e-12));
  }
}

TEST_CASE("welch t-test basic contracts") {
  std::vector<double> a{1, 2, 3, 4, 5};
  auto same = welch_ttest(a, a);
  CHECK(same.t == 0.0);
  CHECK(same.p == Approx(1.0).margin(1e-15));

  std::vector<double> b{2, 4, 4, 7, 9, 1};
  CHECK(welch_ttest(a, b).t == -welch_ttest(b, a).t);
  CHECK(welch_ttest(a, b).p == welch_ttest(b, a).p);

  std::vector<double> c{3, 3, 3};
  CHECK_THROWS_AS(welch_ttest(c, c), DataError);
  CHECK_THROWS_AS(welch_ttest(std::vector<double>{1}, a), DataError);
  CHECK_NOTHROW(welch_ttest(c, a));
}

TEST_CASE("welch t-test separates shifted normal samples") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> g;
  std::vector<double> a, b;
  for (int i = 0; i < 30; ++i) a.push_back(g(rng));
  for (int i = 0; i < 30; ++i) b.push_back(1.0 + g(rng));
  CHECK(welch_ttest(a, b).p < 0.01);
}

TEST_CASE("welch t-test agrees with boost students_t") {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> size(2, 40);
  std::uniform_real_distribution<double> shift(-1.5, 1.5), scale(0.2, 3.0);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a, b;
    const int na = size(rng), nb = size(rng);
    const double sa = scale(rng), sb = scale(rng), mu = shift(rng);
    for (int i = 0; i < na; ++i) a.push_back(sa * g(rng));
    for (int i = 0; i < nb; ++i) b.push_back(mu + sb * g(rng));

    double ma = 0, mb = 0;
    for (double v : a) ma += v;
    for (double v : b) mb += v;
    ma /= na;
    mb /= nb;
    double ssa = 0, ssb = 0;
    for (double v : a) ssa += (v - ma) * (v - ma);
    for (double v : b) ssb += (v - mb) * (v - mb);
    const double va = ssa / (na - 1) / na, vb = ssb / (nb - 1) / nb;
    const double t = (ma - mb) / std::sqrt(va + vb);
    const double df = (va + vb) * (va + vb) / (va * va / (na - 1) + vb * vb / (nb - 1));
    const double p = 2.0 * boost::math::cdf(boost::math::complement(boost::math::students_t(df), std::abs(t)));

    const auto r = welch_ttest(a, b);
    CHECK(r.t == Approx(t).margin(1e-9));
    CHECK(r.df == Approx(df).epsilon(1e-12));
    CHECK(r.p == Approx(p).margin(1e-6));
  }
}

TEST_CASE("student t tail stays accurate far out") {
  for (double df : {1.0, 3.5, 29.0, 250.0})
    for (double t : {0.0, 0.1, 1.0, 2.5, 8.0, 40.0}) {
      const double ref = 2.0 * boost::math::cdf(boost::math::complement(boost::math::students_t(df), t));
      CHECK(stats::student_t_two_sided(t, df) == Approx(ref).epsilon(1e-10).margin(1e-300));
    }
}
