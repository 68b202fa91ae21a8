#include <doctest.h>

#include <cmath>
#include <vector>

#include "lilab/filtration.hpp"
#include "lilab/suites.hpp"

using namespace lilab;

namespace {

const ProcessModel& linear_model() {
  static const ProcessModel m = make_linear_scalar(InnovationSpec::rademacher(), {1.0, 0.5});
  return m;
}

// ||d||_2 for the 2-state chain by summing P_1 X_n = E_1 X_n - E_0 X_n
// term by term over the joint law of (W_0, W_1), f = (1, -1).
double chain_d_norm_brute_force(double a, int terms) {
  const double P[2][2] = {{1 - a, a}, {a, 1 - a}};
  const double f[2] = {1.0, -1.0};
  // E(f(W_n) | W_k = s) by repeated kernel application.
  auto cond = [&](int steps, int s) {
    double v[2] = {f[0], f[1]};
    for (int k = 0; k < steps; ++k) {
      const double w0 = P[0][0] * v[0] + P[0][1] * v[1];
      const double w1 = P[1][0] * v[0] + P[1][1] * v[1];
      v[0] = w0;
      v[1] = w1;
    }
    return v[s];
  };
  double total = 0.0;
  for (int s0 = 0; s0 < 2; ++s0)
    for (int s1 = 0; s1 < 2; ++s1) {
      double d = 0.0;
      for (int n = 1; n <= terms; ++n) d += cond(n - 1, s1) - cond(n, s0);
      total += 0.5 * P[s0][s1] * d * d;
    }
  return std::sqrt(total);
}

}  // namespace

TEST_CASE("projection norms of a linear process") {
  const auto r = projection_norms(linear_model(), 2.0);
  REQUIRE(r.norms.size() == 2);
  CHECK(r.norms[0].n == 0);
  CHECK(r.norms[0].norm == doctest::Approx(1.0));
  CHECK(r.norms[1].n == -1);
  CHECK(r.norms[1].norm == doctest::Approx(0.5));
  CHECK(r.hannan_value == doctest::Approx(1.5));
  CHECK(r.verdict == Verdict::finite);
}

TEST_CASE("projection norms of martingale differences") {
  const auto r = projection_norms(make_martingale_difference(InnovationSpec::gaussian(2.0)), 2.0);
  REQUIRE(r.norms.size() == 1);
  CHECK(r.norms[0].norm == doctest::Approx(2.0));
}

TEST_CASE("projection norms of the 2-state chain decay geometrically") {
  const auto r = projection_norms(shipped::two_state_chain(0.25), 2.0);
  REQUIRE(r.norms.size() > 10);
  CHECK(r.norms[0].norm > 0.0);
  for (std::size_t i = 1; i + 1 < 10; ++i)
    CHECK(r.norms[i + 1].norm / r.norms[i].norm == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.verdict == Verdict::finite);
}

TEST_CASE("unsupported families point to the Monte Carlo estimator") {
  CHECK_THROWS_WITH(projection_norms(make_doubling_map(shipped::dyadic_observable()), 2.0),
                    doctest::Contains("mc_conditional_norm"));
}

TEST_CASE("nested Monte Carlo conditional norms") {
  const auto lin = mc_conditional_norm(linear_model(), 1, 2.0, 20000, 1);
  CHECK(std::abs(lin.estimate - 0.5) < 3 * lin.se + 1e-3);
  // Squared form against the projection identity sum_{j>=1} a_j^2.
  CHECK(std::abs(lin.squared - 0.25) < 3 * lin.squared_se);

  const auto md = mc_conditional_norm(make_martingale_difference(InnovationSpec::rademacher()), 1, 2.0, 20000, 2);
  CHECK(std::abs(md.squared) < 3 * md.squared_se + 1e-12);

  for (std::size_t n : {1u, 2u, 3u}) {
    const auto ch = mc_conditional_norm(shipped::two_state_chain(0.25), n, 2.0, 20000, 3);
    CHECK(std::abs(ch.squared - std::pow(0.25, n)) < 3 * ch.squared_se + 1e-12);
  }
}

TEST_CASE("hanbis") {
  const auto md = hanbis_check(make_martingale_difference(InnovationSpec::rademacher()), 64);
  CHECK(md.verdict == Verdict::finite);
  for (const auto& row : md.rows) {
    CHECK(row.past_partial == 0.0);
    CHECK(row.future_partial == 0.0);
  }
  const auto chain = hanbis_check(shipped::two_state_chain(0.25), 64);
  CHECK(chain.verdict == Verdict::finite);
  // Past terms 0.5^n / sqrt n.
  double oracle = 0.0;
  for (std::size_t n = 1; n <= chain.rows.size(); ++n) oracle += std::pow(0.5, static_cast<double>(n)) / std::sqrt(n);
  CHECK(chain.rows.back().past_partial == doctest::Approx(oracle).epsilon(1e-10));

  std::vector<double> a;
  for (int k = 0; k <= 30; ++k) a.push_back(std::pow(2.0, -k));
  const auto fol = make_function_of_linear(InnovationSpec::uniform(-1, 1), a, FunctionOfLinear::Function::abs,
                                           ModulusSpec::power(1.0));
  const auto r = hanbis_check(fol, 64);
  CHECK(r.verdict != Verdict::divergent);
  CHECK(std::isfinite(r.tail_bound));
  // Dominated by sum 2^{1-n} / sqrt n (times the Lipschitz constant).
  double bound = 0.0;
  for (int n = 1; n <= 200; ++n) bound += std::pow(2.0, 1 - n) / std::sqrt(n);
  CHECK(r.rows.back().past_partial <= bound);
}

TEST_CASE("martingale approximants") {
  const auto lin = approximating_md(linear_model(), projection_norms(linear_model(), 2.0));
  CHECK(lin.l2_norm == doctest::Approx(1.5));
  CHECK(lin.B(0, 0) == doctest::Approx(1.5));
  CHECK(lin.l2_norm <= projection_norms(linear_model(), 2.0).hannan_value + 1e-12);

  const auto md_model = make_martingale_difference(InnovationSpec::uniform(-1, 1));
  const auto md = approximating_md(md_model, projection_norms(md_model, 2.0));
  CHECK(md.kind == Coupling::Kind::identity);
  CHECK(md.l2_norm == doctest::Approx(std::sqrt(1.0 / 3.0)));

  const auto chain_model = shipped::two_state_chain(0.25);
  const auto chain = approximating_md(chain_model, projection_norms(chain_model, 2.0));
  CHECK(std::abs(chain.l2_norm - chain_d_norm_brute_force(0.25, 200)) < 1e-10);
  CHECK(chain.l2_norm <= projection_norms(chain_model, 2.0).hannan_value + 1e-12);
}

TEST_CASE("pathwise identities for S_n - M_n") {
  const auto md_model = make_martingale_difference(InnovationSpec::gaussian(1.0));
  const auto md = approximating_md(md_model, projection_norms(md_model, 2.0));
  std::vector<double> S, M;
  coupled_partial_sums(md_model, md, 1, 0, 1000, S, M);
  CHECK(S == M);

  const auto lin = approximating_md(linear_model(), projection_norms(linear_model(), 2.0));
  for (std::uint64_t p = 0; p < 8; ++p) {
    coupled_partial_sums(linear_model(), lin, 5, p, 512, S, M);
    const auto xi = innovation_sequence(linear_model(), 5, p, 513);
    for (std::size_t n = 1; n <= 512; ++n) CHECK(S[n - 1] - M[n - 1] == 0.5 * (xi[0] - xi[n]));
  }

  const auto chain_model = shipped::two_state_chain(0.25);
  const auto chain = approximating_md(chain_model, projection_norms(chain_model, 2.0));
  const auto batch = simulate(chain_model, 1 << 16, 4, 7);
  const auto mart = martingale_partial_sums(chain, chain_model, batch);
  const double bound = 2.0 * chain.h.cwiseAbs().maxCoeff() + 1e-9;
  for (std::size_t p = 0; p < 4; ++p) {
    double s = 0.0, worst = 0.0;
    for (std::size_t n = 0; n < batch.n_steps; ++n) {
      s += batch.at(p, n)[0];
      worst = std::max(worst, std::abs(s - mart.at(p, n)[0]));
    }
    CHECK(worst <= bound);
  }
  const auto other = simulate(linear_model(), 8, 1, 7);
  CHECK_THROWS(martingale_partial_sums(chain, chain_model, other));
}
