#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "lilab/filtration.hpp"
#include "lilab/limits.hpp"
#include "lilab/rng.hpp"
#include "lilab/suites.hpp"

using namespace lilab;

namespace {

PathBatch zero_batch(std::size_t n, std::size_t paths, std::size_t dim = 1) {
  PathBatch b;
  b.model_kind = "zero";
  b.n_steps = n;
  b.n_paths = paths;
  b.dim = dim;
  b.values.assign(n * paths * dim, 0.0);
  return b;
}

// max over sample values v of v * (#{z >= v} / N)^{1/p}, counted directly.
double weak_norm_brute_force(const std::vector<double>& z, double p, double lower) {
  double best = 0.0;
  for (double v : z) {
    if (v < lower) continue;
    double count = 0;
    for (double w : z) count += w >= v;
    best = std::max(best, v * std::pow(count / static_cast<double>(z.size()), 1.0 / p));
  }
  return best;
}

}  // namespace

TEST_CASE("logarithm convention and normalizers") {
  CHECK(log_plus(1.0) == 1.0);
  CHECK(log_plus(std::numbers::e) == doctest::Approx(1.0));
  CHECK(log_plus(std::exp(std::numbers::e)) == doctest::Approx(std::numbers::e));
  CHECK(lil_scale(1.0) == 1.0);
  CHECK(lil_scale(1e6) == doctest::Approx(std::sqrt(1e6 * std::log(std::log(1e6)))));
  CHECK(std::abs(bennett_h(1.0) - (2 * std::log(2.0) - 1)) < 1e-12);
  CHECK(bennett_h(0.0) == 0.0);
  CHECK(Normalization::power(1.5)(8.0) == doctest::Approx(4.0));
  CHECK_THROWS(Normalization::power(2.0));
  CHECK(Normalization::lil().block(0) == 1.0);
}

TEST_CASE("maximal tracker") {
  const double v[2] = {3.0, 4.0};
  MaximalTracker single(Normalization::lil(), 2, 1);
  single.push(v);
  CHECK(single.value() == doctest::Approx(5.0));

  MaximalTracker zero(Normalization::power(1.5), 1, 100);
  const double z = 0.0;
  for (int i = 0; i < 100; ++i) zero.push(&z);
  CHECK(zero.value() == 0.0);
  CHECK(zero.m_star() == 0.0);

  // Direct evaluation on a fixed path.
  StreamRng rng(1, 0);
  std::vector<double> x(1000);
  for (auto& e : x) e = rng.normal();
  const auto norm = Normalization::power(1.5);
  MaximalTracker t(norm, 1, x.size());
  double s = 0.0, best = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n) {
    t.push(&x[n]);
    s += x[n];
    best = std::max(best, std::abs(s) / std::pow(static_cast<double>(n + 1), 1 / 1.5));
  }
  CHECK(t.value() == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("lil tracker against direct evaluation") {
  StreamRng rng(2, 0);
  const std::size_t n = 4096;
  std::vector<double> x(n);
  for (auto& e : x) e = rng.rademacher();
  LilTracker t(1, n, 0.5, nullptr);
  double s = 0.0, windowed = 0.0, full = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    t.push(&x[i]);
    s += x[i];
    const double k = static_cast<double>(i + 1);
    const double v = std::abs(s) / std::sqrt(2.0 * k * log_plus(log_plus(k)));
    full = std::max(full, v);
    const std::size_t m = i + 1;
    // Dyadic grid points 2^j with j >= ceil((1 - 0.5) * 12) = 6.
    if ((m & (m - 1)) == 0 && m >= 64) windowed = std::max(windowed, v);
  }
  CHECK(t.windowed() == doctest::Approx(windowed).epsilon(1e-12));
  CHECK(t.full_range() == doctest::Approx(full).epsilon(1e-12));
}

TEST_CASE("weak norm") {
  CHECK(weak_norm({2.0, 2.0, 2.0}, 2.0).estimate == doctest::Approx(2.0));
  const std::vector<double> four{1, 2, 3, 4};
  CHECK(weak_norm(four, 1.0).estimate == doctest::Approx(1.5));
  // Independent check: no threshold on a fine grid beats the estimate.
  double grid_best = 0.0;
  for (int i = 1; i < 400000; ++i) {
    const double lambda = i * 1e-5;
    double count = 0;
    for (double v : four) count += v > lambda;
    grid_best = std::max(grid_best, lambda * count / 4.0);
  }
  CHECK(grid_best <= 1.5);
  CHECK(grid_best > 1.5 - 1e-4);

  const auto zero = weak_norm({0.0, 0.0}, 1.0);
  CHECK(zero.estimate == 0.0);
  CHECK(zero.profile.empty());

  StreamRng rng(3, 0);
  std::vector<double> expo(2000);
  for (auto& e : expo) e = -std::log(rng.uniform_open());
  for (double p : {1.0, 1.5, 2.0}) {
    const auto w = weak_norm(expo, p);
    std::vector<double> sorted = expo;
    std::sort(sorted.begin(), sorted.end());
    const double lower = quantile(sorted, 0.01);
    CHECK(w.estimate == doctest::Approx(weak_norm_brute_force(expo, p, lower)).epsilon(1e-14));
    for (const auto& [lambda, value] : w.profile) CHECK(value <= w.estimate * (1 + 1e-12));
  }
}

TEST_CASE("hopf check") {
  const auto z = hopf_check(zero_batch(64, 8), 64);
  CHECK(z.estimate == 0.0);
  CHECK(z.pass == true);

  const auto uni = simulate(make_martingale_difference(InnovationSpec::uniform(-1, 1)), 256, 4000, 4);
  const auto u = hopf_check(uni, 256);
  CHECK(u.values.at("mean_abs") == doctest::Approx(0.5).epsilon(0.01));
  CHECK(u.pass == true);

  const auto rad = simulate(make_martingale_difference(InnovationSpec::rademacher()), 64, 2000, 5);
  const auto r = hopf_check(rad, 64);
  CHECK(r.estimate == doctest::Approx(1.0));
  CHECK(r.pass == true);
}

TEST_CASE("lil limsup") {
  const auto z = lil_limsup(zero_batch(1024, 4), 0.75);
  CHECK(z.estimate == 0.0);
  CHECK_THROWS(lil_limsup(zero_batch(1024, 4), 0.0));
  CHECK_THROWS(lil_limsup(zero_batch(1024, 4), 1.5));
}

TEST_CASE("long-run covariance") {
  // Pooled lag sums against a direct computation on a small batch.
  const auto model = make_linear_scalar(InnovationSpec::gaussian(1.0), {1.0, 0.5});
  const auto batch = simulate(model, 512, 6, 8);
  const std::size_t L = 4;
  const auto est = covariance_series(batch, L);
  double mean = 0.0;
  for (double v : batch.values) mean += v;
  mean /= static_cast<double>(batch.values.size());
  double K = 0.0;
  for (std::size_t m = 0; m <= L; ++m) {
    double c = 0.0;
    for (std::size_t p = 0; p < batch.n_paths; ++p)
      for (std::size_t n = 0; n + m < batch.n_steps; ++n)
        c += (batch.at(p, n)[0] - mean) * (batch.at(p, n + m)[0] - mean);
    c /= static_cast<double>(batch.n_paths * (batch.n_steps - m));
    K += m == 0 ? c : 2 * c;
  }
  CHECK(est.K.matrix()(0, 0) == doctest::Approx(K).epsilon(1e-10));
  CHECK_THROWS(covariance_series(batch, 100));

  const auto iid = simulate(make_martingale_difference(InnovationSpec::uniform(-1, 1)), 4096, 64, 9);
  const auto ie = covariance_series(iid, 0);
  CHECK(ie.K.matrix()(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(0.02));

  std::vector<double> a;
  for (int k = 0; k <= 20; ++k) a.push_back(std::pow(0.5, k));
  const auto exact = covariance_series(make_linear_scalar(InnovationSpec::rademacher(), a));
  REQUIRE(exact);
  CHECK(exact->matrix()(0, 0) == doctest::Approx(std::pow(2.0 - std::pow(2.0, -20), 2)).epsilon(1e-14));
  const auto chain = covariance_series(shipped::two_state_chain(0.25));
  REQUIRE(chain);
  double geo = 1.0;
  for (int m = 1; m < 200; ++m) geo += 2 * std::pow(0.5, m);
  CHECK(chain->matrix()(0, 0) == doctest::Approx(geo).epsilon(1e-12));
}

TEST_CASE("approximation error and MZ curves") {
  const auto md_model = make_martingale_difference(InnovationSpec::rademacher());
  const auto approx = approximating_md(md_model, projection_norms(md_model, 2.0));
  const auto batch = simulate(md_model, 1024, 16, 10);
  const auto r = approx_error_curve(md_model, approx, batch, {16, 256, 1024});
  for (double v : r.curves.at("median")) CHECK(v == 0.0);
  for (double v : r.curves.at("q95")) CHECK(v == 0.0);

  const auto lin = make_linear_scalar(InnovationSpec::rademacher(), {1.0, 0.5});
  const auto lin_approx = approximating_md(lin, projection_norms(lin, 2.0));
  const auto lb = simulate(lin, 1024, 64, 11);
  const auto lr = approx_error_curve(lin, lin_approx, lb, {16, 1024});
  // |S_n - M_n| <= 1 pathwise.
  for (std::size_t i = 0; i < 2; ++i) CHECK(lr.curves.at("q95")[i] <= 1.0 / lil_scale(lr.n_grid[i]) + 1e-12);
  CHECK_THROWS(approx_error_curve(md_model, approx, lb, {16}));

  const auto mz = mz_decay(zero_batch(256, 4), 1.5, {16, 256});
  for (double v : mz.curves.at("median")) CHECK(v == 0.0);
  CHECK_THROWS(mz_decay(zero_batch(256, 4), 2.0, {16}));
}

TEST_CASE("freedman-pinelis inequality") {
  const auto model = make_martingale_difference(InnovationSpec::rademacher());
  const auto r = freedman_pinelis_check(model, 256, 2000, 12, {{1e6, 256.0}, {16.0, 256.0}});
  CHECK(r.points[0].empirical == 0.0);
  CHECK(r.points[0].pass);
  CHECK(r.pass);
  CHECK_THROWS(freedman_pinelis_check(make_martingale_difference(InnovationSpec::gaussian(1.0)), 16, 10, 1,
                                      {{1.0, 16.0}}));
}

TEST_CASE("clt diagnostics") {
  // Gaussian increments: S_n / sqrt n is exactly N(0, I).
  const auto model = make_martingale_difference(InnovationSpec::gaussian(1.0, 2));
  const auto batch = simulate(model, 64, 2000, 13);
  std::vector<Eigen::VectorXd> samples;
  for (std::size_t p = 0; p < batch.n_paths; ++p) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(2);
    for (std::size_t n = 0; n < batch.n_steps; ++n) s += Eigen::Map<const Eigen::VectorXd>(batch.at(p, n).data(), 2);
    samples.push_back(s / 8.0);
  }
  const auto dirs = planar_directions(2, 8);
  CHECK(dirs.size() == 8);
  for (const auto& u : dirs) CHECK(u.norm() == doctest::Approx(1.0));
  const auto r = clt_diagnostics(samples, CovarianceOperator(Eigen::MatrixXd::Identity(2, 2)), dirs);
  CHECK(r.pass);
  CHECK(r.per_test_level == doctest::Approx(sidak_level(1e-3, 8)));

  Eigen::MatrixXd degenerate = Eigen::MatrixXd::Zero(2, 2);
  degenerate(0, 0) = 1.0;
  const auto d = clt_diagnostics(samples, CovarianceOperator(degenerate), {Eigen::Vector2d(0, 1), Eigen::Vector2d(1, 0)});
  CHECK(d.directions[0].skipped);
  CHECK_FALSE(d.directions[1].skipped);
}
