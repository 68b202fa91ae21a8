#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "lilab/operators.hpp"
#include "lilab/rng.hpp"
#include "lilab/suites.hpp"

using namespace lilab;

namespace {

FourierObservable circle(const std::vector<std::pair<std::int64_t, double>>& terms) {
  std::vector<std::pair<Frequency, Coefficient>> t;
  for (const auto& [k, c] : terms) t.push_back({{k}, {{c, 0.0}}});
  return FourierObservable::from_terms(1, 1, t);
}

FourierObservable random_circle(StreamRng& rng, int max_k) {
  std::vector<std::pair<Frequency, Coefficient>> t;
  for (std::int64_t k = 1; k <= max_k; ++k) t.push_back({{k}, {{rng.normal(), rng.normal()}}});
  return FourierObservable::from_terms(1, 1, t);
}

double eval1(const FourierObservable& f, double x) {
  double out = 0.0;
  const double pt[1] = {x};
  f.evaluate_real(pt, std::span<double>(&out, 1));
  return out;
}

// P(Y_i <= x | W_0 = s) by enumerating every path of length i.
double path_probability(const Eigen::MatrixXd& P, const Eigen::VectorXd& f, int s, int i, double x) {
  const int S = static_cast<int>(P.rows());
  double total = 0.0;
  std::vector<int> path(static_cast<std::size_t>(i), 0);
  const long count = static_cast<long>(std::pow(S, i));
  for (long code = 0; code < count; ++code) {
    long c = code;
    double prob = 1.0;
    int prev = s;
    for (int k = 0; k < i; ++k) {
      const int next = static_cast<int>(c % S);
      c /= S;
      prob *= P(prev, next);
      prev = next;
    }
    if (f(prev) <= x) total += prob;
  }
  return total;
}

double phi_brute_force(const Eigen::MatrixXd& P, const Eigen::VectorXd& m, const Eigen::VectorXd& f, int n, int up_to) {
  double best = 0.0;
  for (int i = n; i <= up_to; ++i)
    for (int s = 0; s < P.rows(); ++s)
      for (Eigen::Index t = 0; t < f.size(); ++t) {
        const double x = f(t);
        double marginal = 0.0;
        for (Eigen::Index u = 0; u < f.size(); ++u)
          if (f(u) <= x) marginal += m(u);
        best = std::max(best, std::abs(path_probability(P, f, s, i, x) - marginal));
      }
  return best;
}

Eigen::MatrixXd two_state(double a) {
  Eigen::MatrixXd P(2, 2);
  P << 1 - a, a, a, 1 - a;
  return P;
}

}  // namespace

TEST_CASE("transfer operator of the doubling map") {
  const auto k = pf_doubling_apply(circle({{2, 0.5}}));
  CHECK(k == circle({{1, 0.5}}));
  CHECK(pf_doubling_apply(circle({{1, 0.5}, {3, 0.25}})).empty());
  CHECK(pf_doubling_apply(FourierObservable(1, 1)).empty());
  // Pointwise: (Kf)(x) = (f(x/2) + f((x+1)/2)) / 2.
  StreamRng rng(3, 0);
  const auto f = random_circle(rng, 9);
  const auto kf = pf_doubling_apply(f);
  for (double x : {0.1, 0.37, 0.8}) CHECK(eval1(kf, x) == doctest::Approx((eval1(f, x / 2) + eval1(f, (x + 1) / 2)) / 2));
}

TEST_CASE("transfer operator duality by quadrature") {
  StreamRng rng(5, 0);
  for (int trial = 0; trial < 3; ++trial) {
    const auto f = random_circle(rng, 8);
    const auto g = random_circle(rng, 8);
    const auto kf = pf_doubling_apply(f);
    const int N = 1000000;
    double lhs = 0.0, rhs = 0.0;
    for (int i = 0; i < N; ++i) {
      const double x = (i + 0.5) / N;
      const double y = std::fmod(2 * x, 1.0);
      lhs += eval1(kf, x) * eval1(g, x);
      rhs += eval1(f, x) * eval1(g, y);
    }
    CHECK(std::abs(lhs / N - rhs / N) < 1e-6);
  }
}

TEST_CASE("koopman operator on the torus") {
  IntMatrix cat(2, 2);
  cat << 2, 1, 1, 1;
  const auto single = FourierObservable::from_terms(2, 1, {{{1, 0}, {{0.5, 0.0}}}});
  const auto moved = koopman_torus_apply(single, cat);
  CHECK(moved == FourierObservable::from_terms(2, 1, {{{2, 1}, {{0.5, 0.0}}}}));
  CHECK(koopman_torus_apply(single, IntMatrix::Identity(2, 2)) == single);
  StreamRng rng(7, 0);
  std::vector<std::pair<Frequency, Coefficient>> terms;
  for (std::int64_t a = -3; a <= 3; ++a)
    for (std::int64_t b = 1; b <= 3; ++b) terms.push_back({{a, b}, {{rng.normal(), rng.normal()}}});
  const auto f = FourierObservable::from_terms(2, 1, terms);
  CHECK(koopman_torus_apply(f, cat).l2_norm_squared() == doctest::Approx(f.l2_norm_squared()).epsilon(1e-14));
}

TEST_CASE("cond_dynsys") {
  const auto obs = shipped::dyadic_observable();
  const auto r = cond_dynsys(obs, 16);
  CHECK(r.verdict == ConditionVerdict::holds);
  double partial = 0.0;
  for (const auto& row : r.rows) {
    const double exact = std::sqrt(shipped::dyadic_norm_squared(row.n));
    CHECK(std::abs(row.term - exact) < 1e-12);
    partial += (row.n == 0 ? 1.0 : 1.0 / std::sqrt(static_cast<double>(row.n))) * exact;
  }
  CHECK(r.rows.back().partial_sum == doctest::Approx(partial).epsilon(1e-12));

  const auto odd = cond_dynsys(circle({{1, 0.5}, {3, 0.5}}), 4);
  CHECK(odd.verdict == ConditionVerdict::holds);
  int nonzero = 0;
  for (const auto& row : odd.rows) nonzero += row.term > 0.0;
  CHECK(nonzero == 1);

  const auto zero = cond_dynsys(FourierObservable(1, 1), 4);
  CHECK(zero.verdict == ConditionVerdict::holds);
  CHECK(zero.rows.back().partial_sum == 0.0);
}

TEST_CASE("markov conditions") {
  Eigen::MatrixXd f(2, 1);
  f << 1, -1;
  for (auto kind : {MarkovConditionKind::sqrt_sum, MarkovConditionKind::normal_sq_sum}) {
    const auto r = markov_condition(two_state(0.25), std::nullopt, f, kind, 64);
    CHECK(r.verdict == ConditionVerdict::holds);
    for (std::size_t i = 0; i < 10; ++i) {
      const double norm = std::pow(0.5, static_cast<double>(i + 1));
      CHECK(r.rows[i].term == doctest::Approx(kind == MarkovConditionKind::sqrt_sum ? norm : norm * norm));
    }
    CHECK(r.normal_kernel == true);

    const auto one_step = markov_condition(two_state(0.5), std::nullopt, f, kind, 8);
    CHECK(one_step.verdict == ConditionVerdict::holds);
    CHECK(one_step.rows.front().term == 0.0);

    Eigen::MatrixXd g(3, 1);
    g << 1, -1, 0;
    const auto circ = markov_condition(shipped::circulant3(), std::nullopt, g, kind, 64);
    CHECK(circ.verdict == ConditionVerdict::fails);
    CHECK(circ.certificate.find("divergence") != std::string::npos);
    // A permutation kernel keeps ||P^n g||^2 = ||g||^2 = 2/3.
    const double expected = kind == MarkovConditionKind::sqrt_sum ? std::sqrt(2.0 / 3.0) : 2.0 / 3.0;
    for (const auto& row : circ.rows) CHECK(row.term == doctest::Approx(expected).epsilon(1e-12));
  }
  Eigen::MatrixXd bad(2, 2);
  bad << 0.5, 0.6, 0.5, 0.5;
  CHECK_THROWS(markov_condition(bad, std::nullopt, f, MarkovConditionKind::sqrt_sum, 8));
  Eigen::VectorXd wrong_m(2);
  wrong_m << 0.9, 0.1;
  CHECK_THROWS(markov_condition(two_state(0.25), wrong_m, f, MarkovConditionKind::sqrt_sum, 8));
}

TEST_CASE("phi mixing coefficients") {
  Eigen::VectorXd f(2), m(2);
  f << 1, -1;
  m << 0.5, 0.5;
  for (double a : {0.1, 0.25, 0.4}) {
    const auto phi = phi_mixing_coeffs(two_state(a), std::nullopt, f, 64);
    for (int n = 1; n <= 6; ++n) CHECK(phi.phi[n - 1] == doctest::Approx(phi_brute_force(two_state(a), m, f, n, 12)).epsilon(1e-13));
    for (int n = 1; n <= 40; ++n) CHECK(phi.phi[n - 1] == doctest::Approx(0.5 * std::pow(std::abs(1 - 2 * a), n)).epsilon(1e-10));
  }
  Eigen::MatrixXd iid(2, 2);
  iid << 0.3, 0.7, 0.3, 0.7;
  const auto z = phi_mixing_coeffs(iid, std::nullopt, f, 8);
  for (double v : z.phi) CHECK(v == doctest::Approx(0.0));
  Eigen::MatrixXd cyc(2, 2);
  cyc << 0, 1, 1, 0;
  const auto per = phi_mixing_coeffs(cyc, m, f, 8);
  for (double v : per.phi) CHECK(v == doctest::Approx(0.5));
  CHECK_THROWS(phi_mixing_coeffs(two_state(0.25), std::nullopt, f, 0));
}

TEST_CASE("cond_ddm") {
  std::vector<double> geo, half(64, 0.5), zero(64, 0.0);
  for (int n = 1; n <= 64; ++n) geo.push_back(std::pow(0.5, n));
  const auto g = cond_ddm(geo, 2.0, 64);
  CHECK(g.verdict == ConditionVerdict::holds);
  double oracle = 0.0;
  for (int n = 1; n <= 64; ++n) oracle += std::pow(0.5, n / 2.0) / std::sqrt(n);
  CHECK(g.rows.back().partial_sum == doctest::Approx(oracle).epsilon(1e-12));
  for (double p : {1.5, 2.0, 4.0, static_cast<double>(INFINITY)}) CHECK(cond_ddm(half, p, 64).verdict == ConditionVerdict::fails);
  const auto z = cond_ddm(zero, 2.0, 64);
  CHECK(z.verdict == ConditionVerdict::holds);
  CHECK(z.rows.back().partial_sum == 0.0);
  std::vector<double> rising{0.1, 0.2};
  CHECK_THROWS(cond_ddm(rising, 2.0, 2));

  Eigen::VectorXd f(2);
  f << 1, -1;
  CHECK(cond_ddm(phi_mixing_coeffs(two_state(0.25), std::nullopt, f, 256), 2.0, 256).verdict == ConditionVerdict::holds);
  Eigen::MatrixXd cyc(2, 2);
  cyc << 0, 1, 1, 0;
  Eigen::VectorXd m(2);
  m << 0.5, 0.5;
  CHECK(cond_ddm(phi_mixing_coeffs(cyc, m, f, 256), 2.0, 256).verdict == ConditionVerdict::fails);
}

TEST_CASE("fourier tail condition") {
  CHECK(fourier_tail_check(FourierObservable(1, 1), 3.0, 1.0, {1, 2, 4}).verdict == ConditionVerdict::holds);
  // |c_1|^2 + |c_{-1}|^2 = 1 exactly with c_1 = (1 + i) / 2.
  const auto single = FourierObservable::from_terms(1, 1, {{{1}, {{0.5, 0.5}}}});
  const auto r = fourier_tail_check(single, 3.0, 1.0, {1});
  CHECK(r.rows[0].term == doctest::Approx(1.0));
  CHECK(*r.rows[0].bound == doctest::Approx(1.0));
  CHECK(r.verdict == ConditionVerdict::holds);

  std::vector<std::pair<std::int64_t, double>> terms;
  for (std::int64_t k = 1; k <= 64; ++k) terms.push_back({k, std::pow(static_cast<double>(k), -1.5)});
  const std::vector<double> grid{1, 2, 4, 8, 16, 32, 64};
  const auto cubic = fourier_tail_check(circle(terms), 3.0, 10.0, grid);
  CHECK(cubic.verdict == ConditionVerdict::holds);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double tail = 0.0;
    for (std::int64_t k = static_cast<std::int64_t>(grid[i]); k <= 64; ++k) tail += 2.0 * std::pow(static_cast<double>(k), -3.0);
    CHECK(cubic.rows[i].term == doctest::Approx(tail).epsilon(1e-12));
  }
  CHECK_THROWS(fourier_tail_check(single, 2.0, 1.0, {1}));
}
