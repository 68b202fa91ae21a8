#include <doctest.h>

#include <cmath>
#include <vector>

#include "lilab/normspace.hpp"
#include "lilab/rng.hpp"

using namespace lilab;

TEST_CASE("norms") {
  const auto e2 = NormSpec::euclidean(2);
  const std::vector<double> v{3.0, 4.0}, zero{0.0, 0.0};
  CHECK(norm(v, e2) == doctest::Approx(5.0));
  CHECK(norm(zero, e2) == 0.0);
  const auto w = NormSpec::weighted_lr(1.5, {1.0, 1.0});
  const std::vector<double> ones{1.0, 1.0};
  CHECK(norm(ones, w) == doctest::Approx(std::pow(2.0, 2.0 / 3.0)).epsilon(1e-14));
  CHECK(norm(zero, w) == 0.0);
  // Direct evaluation with unequal weights.
  const auto w3 = NormSpec::weighted_lr(1.5, {1.0, 2.0, 0.5});
  const std::vector<double> x{1.0, -2.0, 4.0};
  const double direct = std::pow(1.0 + 2.0 * std::pow(2.0, 1.5) + 0.5 * std::pow(4.0, 1.5), 1.0 / 1.5);
  CHECK(norm(x, w3) == doctest::Approx(direct).epsilon(1e-14));
}

TEST_CASE("invalid specs are rejected") {
  CHECK_THROWS(NormSpec::weighted_lr(2.5, {1.0}));
  CHECK_THROWS(NormSpec::weighted_lr(1.5, {1.0, -1.0}));
  CHECK_THROWS(NormSpec::euclidean(0));
  const auto e2 = NormSpec::euclidean(2);
  const std::vector<double> three{1, 2, 3};
  CHECK_THROWS(norm(three, e2));
}

TEST_CASE("smoothness defect") {
  const auto e2 = NormSpec::euclidean(2);
  const std::vector<double> x{1, 0}, y{0, 1};
  CHECK(std::abs(smoothness_defect(x, y, e2, 2.0, 1.0)) < 1e-14);
  StreamRng rng(1, 0);
  double worst_e = -1e300, worst_w = -1e300;
  const auto w3 = NormSpec::weighted_lr(1.5, {1.0, 2.0, 0.5});
  for (int i = 0; i < 10000; ++i) {
    const std::vector<double> a{rng.normal(), rng.normal()}, b{rng.normal(), rng.normal()};
    worst_e = std::max(worst_e, std::abs(smoothness_defect(a, b, e2, 2.0, 1.0)));
    const std::vector<double> a3{rng.normal(), rng.normal(), rng.normal()};
    const std::vector<double> b3{rng.normal(), rng.normal(), rng.normal()};
    worst_w = std::max(worst_w, smoothness_defect(a3, b3, w3, 1.5, 2.0));
  }
  CHECK(worst_e < 1e-12);  // parallelogram identity
  CHECK(worst_w <= 0.0);
}

TEST_CASE("dual ball sup") {
  CHECK(dual_ball_sup(CovarianceOperator(Eigen::MatrixXd::Identity(2, 2))) == doctest::Approx(1.0));
  Eigen::MatrixXd d(2, 2);
  d << 4, 0, 0, 1;
  CHECK(dual_ball_sup(CovarianceOperator(d)) == doctest::Approx(2.0));
  Eigen::MatrixXd k(2, 2);
  k << 2, 1, 1, 2;
  CHECK(dual_ball_sup(CovarianceOperator(k)) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-14));
}

TEST_CASE("covariance operator validation") {
  Eigen::MatrixXd asym(2, 2);
  asym << 1, 0.5, 0, 1;
  CHECK_THROWS(CovarianceOperator{asym});
  Eigen::MatrixXd neg(2, 2);
  neg << 1, 0, 0, -1;
  CHECK_THROWS(CovarianceOperator{neg});
  bool clipped = false;
  const auto K = CovarianceOperator::project_psd(neg, &clipped);
  CHECK(clipped);
  CHECK(K.min_eigenvalue() >= 0.0);
  CHECK(K.max_eigenvalue() == doctest::Approx(1.0));
}
