#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <vector>

#include "lilab/model_io.hpp"
#include "lilab/processes.hpp"
#include "lilab/stats.hpp"
#include "lilab/suites.hpp"

using namespace lilab;

namespace {

double sample_mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_var(const std::vector<double>& v) {
  const double m = sample_mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

std::vector<double> one_path(const ProcessModel& model, std::size_t n, std::uint64_t seed, std::uint64_t path = 0) {
  PathStream s(model, seed, path);
  std::vector<double> x(n * s.dim());
  s.fill(x);
  return x;
}

FourierObservable cos_observable(std::int64_t k) {
  return FourierObservable::from_terms(1, 1, {{{k}, {{0.5, 0.0}}}});
}

}  // namespace

TEST_CASE("linear process variance over a long path") {
  const auto model = make_linear_scalar(InnovationSpec::rademacher(), {1.0, 0.5});
  const auto x = one_path(model, 1000000, 3);
  // X_n^2 = 1.25 + xi_n xi_{n-1}; the products are pairwise uncorrelated with
  // unit variance, so the SE of the sample variance is 1/sqrt(n).
  const double v = sample_var(x);
  const double se = 1.0 / std::sqrt(1e6);
  CHECK(std::abs(v - 1.25) < 3 * se);
}

TEST_CASE("martingale difference is centered") {
  const auto model = make_martingale_difference(InnovationSpec::gaussian(1.0));
  const auto x = one_path(model, 1000000, 5);
  CHECK(std::abs(sample_mean(x)) < 3.0 / std::sqrt(1e6));
}

TEST_CASE("doubling map time average") {
  const auto model = make_doubling_map(cos_observable(2));
  const auto x = one_path(model, 1000000, 9);
  // cos(4 pi 2^n x) and cos(4 pi 2^m x) are uncorrelated for n != m.
  CHECK(std::abs(sample_mean(x)) < 3 * std::sqrt(0.5 / 1e6));
}

TEST_CASE("exact variances") {
  const auto lin = exact_variance(make_linear_scalar(InnovationSpec::rademacher(), {1.0, 0.5}));
  REQUIRE(lin);
  CHECK(lin->matrix()(0, 0) == doctest::Approx(1.25));
  const auto chain = exact_variance(shipped::two_state_chain(0.25));
  REQUIRE(chain);
  CHECK(chain->matrix()(0, 0) == doctest::Approx(1.0));
  const auto dm = exact_variance(make_doubling_map(cos_observable(1)));
  REQUIRE(dm);
  CHECK(dm->matrix()(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("moduli") {
  CHECK(phi_modulus_eval(ModulusSpec::power(1.0), 0.3) == doctest::Approx(0.3));
  CHECK(phi_modulus_eval(ModulusSpec::power(0.5), 4.0) == doctest::Approx(1.0));
  CHECK(phi_modulus_eval(ModulusSpec::concave_sqrt(), 0.25) == doctest::Approx(0.5));
  CHECK_THROWS(ModulusSpec::concave_custom({{0.0, 0.0}, {1.0, 0.5}, {2.0, 0.9}}));  // phi^2 slopes increase
}

TEST_CASE("invalid models are rejected") {
  CHECK_THROWS(InnovationSpec::centered_pareto(1.5).validate());
  CHECK_THROWS(InnovationSpec::uniform(0.0, 1.0).validate());
  Eigen::MatrixXd P(2, 2);
  P << 0.5, 0.6, 0.5, 0.5;
  CHECK_THROWS(make_markov_chain(P, Eigen::MatrixXd::Ones(2, 1)));
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> M(2, 2);
  M << 1, 1, 0, 1;  // unimodular but not hyperbolic
  CHECK_THROWS(make_torus_automorphism(M, FourierObservable::from_terms(2, 1, {{{1, 0}, {{0.5, 0.0}}}})));
}

TEST_CASE("streams agree with window evaluation") {
  const std::vector<ProcessModel> models{
      make_linear_scalar(InnovationSpec::gaussian(1.0), {1.0, -0.3, 0.2}),
      make_martingale_difference(InnovationSpec::rademacher(), MartingaleDifference::Map::identity, 2, 0.5),
      make_function_of_linear(InnovationSpec::uniform(-1, 1), {1.0, 0.5}, FunctionOfLinear::Function::abs,
                              std::nullopt, std::nullopt, 0.0),
  };
  for (const auto& model : models) {
    const std::size_t n = 50;
    const auto w = innovation_window(model);
    const auto xi = innovation_sequence(model, 21, 4, n + w.past + w.future);
    const auto x = one_path(model, n, 21, 4);
    const std::size_t d = innovation_of(model).dim;
    std::vector<double> out(model_dim(model));
    for (std::size_t t = 0; t < n; ++t) {
      eval_window(model, std::span<const double>(xi.data() + t * d, w.length() * d), out);
      CHECK(out[0] == doctest::Approx(x[t]).epsilon(1e-13));
    }
  }
}

TEST_CASE("stationarity: early and late marginals agree") {
  const auto model = shipped::two_state_chain(0.25);
  const auto chain_lin = make_linear_scalar(InnovationSpec::gaussian(1.0), {1.0, 0.5});
  std::vector<double> early, late;
  for (std::uint64_t p = 0; p < 4000; ++p) {
    const auto x = one_path(chain_lin, 200, 17, p);
    early.push_back(x[0]);
    late.push_back(x[199]);
  }
  CHECK(ks_two_sample(early, late).p_value > 1e-3);
  // Chain: fraction of state "+1" at time 0 and time 199 both near 1/2.
  double f0 = 0, f1 = 0;
  for (std::uint64_t p = 0; p < 4000; ++p) {
    const auto x = one_path(model, 200, 17, p);
    f0 += x[0] > 0;
    f1 += x[199] > 0;
  }
  CHECK(std::abs(f0 / 4000 - 0.5) < 4 * 0.5 / std::sqrt(4000.0));
  CHECK(std::abs(f1 / 4000 - 0.5) < 4 * 0.5 / std::sqrt(4000.0));
}

TEST_CASE("martingale differences are unpredictable from the past") {
  const auto model =
      make_martingale_difference(InnovationSpec::rademacher(), MartingaleDifference::Map::identity, 1, 0.5);
  const auto x = one_path(model, 400000, 23);
  // Regress d_n on d_{n-1} and d_{n-1}^2; both slopes must vanish.
  double c1 = 0, c2 = 0, s2 = 0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    c1 += x[i] * x[i - 1];
    c2 += x[i] * (x[i - 1] * x[i - 1] - 1.0);
    s2 += x[i] * x[i];
  }
  const double n = static_cast<double>(x.size() - 1);
  const double se = std::sqrt(s2 / n) * 2.0 / std::sqrt(n);
  CHECK(std::abs(c1 / n) < 4 * se);
  CHECK(std::abs(c2 / n) < 4 * se);
}

TEST_CASE("cat map orbit is equidistributed") {
  const auto model = shipped::cat_map();
  // f1 = cos 2 pi x1: mean 0, mean square 1/2 under Lebesgue measure.
  std::vector<double> m1, m2;
  for (std::uint64_t p = 0; p < 400; ++p) {
    const auto x = one_path(model, 256, 29, p);
    double a = 0, b = 0;
    for (std::size_t t = 0; t < 256; ++t) {
      a += x[2 * t];
      b += x[2 * t] * x[2 * t];
    }
    m1.push_back(a / 256);
    m2.push_back(b / 256);
  }
  const auto s1 = mean_se(m1), s2 = mean_se(m2);
  CHECK(std::abs(s1.mean) < 4 * s1.se);
  CHECK(std::abs(s2.mean - 0.5) < 4 * s2.se);
}

TEST_CASE("simulate respects the budget and path independence") {
  const auto model = make_linear_scalar(InnovationSpec::rademacher(), {1.0, 0.5});
  CHECK_THROWS_AS(simulate(model, 1 << 20, 1024, 1, 1 << 20), std::length_error);
  const auto a = simulate(model, 64, 8, 41);
  const auto b = simulate(model, 64, 8, 41, kDefaultMemoryBudget, 4);
  CHECK(a.values == b.values);
  const auto single = one_path(model, 64, 41, 5);
  CHECK(std::equal(single.begin(), single.end(), a.path(5).begin()));
}

TEST_CASE("columnar cache round trip") {
  const auto model = shipped::cat_map();
  const auto batch = simulate(model, 32, 3, 2);
  const auto file = std::filesystem::temp_directory_path() / "lilab_columnar_test.bin";
  export_columnar(batch, file);
  const auto back = import_columnar(file);
  CHECK(back.values == batch.values);
  CHECK(back.model_hash == batch.model_hash);
  CHECK(back.dim == 2);
  std::filesystem::remove(file);
}

TEST_CASE("model json round trip") {
  const std::vector<ProcessModel> models{
      make_linear_scalar(InnovationSpec::gaussian(2.0), {1.0, 0.5}, -1),
      shipped::two_state_chain(0.3),
      shipped::cat_map(),
      make_doubling_map(shipped::dyadic_observable()),
      make_martingale_difference(InnovationSpec::uniform(-2.0, 2.0), MartingaleDifference::Map::sign, 2, 0.25),
  };
  for (const auto& m : models) {
    const auto back = model_from_json(model_to_json(m));
    CHECK(model_to_json(back) == model_to_json(m));
    CHECK(model_hash(back) == model_hash(m));
  }
}
