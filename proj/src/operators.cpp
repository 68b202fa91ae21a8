#include "lilab/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "lilab/limits.hpp"
#include "lilab/markov.hpp"

namespace lilab {

const char* to_string(ConditionVerdict v) {
  switch (v) {
    case ConditionVerdict::holds: return "holds";
    case ConditionVerdict::fails: return "fails";
    case ConditionVerdict::inconclusive: return "inconclusive";
  }
  return "?";
}

namespace {

std::vector<std::pair<Frequency, Coefficient>> as_terms(const std::map<Frequency, Coefficient>& m) {
  return {m.begin(), m.end()};
}

double norm_squared(const FourierObservable& obs) { return obs.l2_norm_squared(); }

}  // namespace

FourierObservable pf_doubling_apply(const FourierObservable& obs) {
  if (obs.torus_dim() != 1) throw std::invalid_argument("pf_doubling_apply: observable must live on the circle");
  std::map<Frequency, Coefficient> out;
  for (const auto& [k, c] : obs.terms()) {
    if (k[0] % 2 == 0) out[{k[0] / 2}] = c;
  }
  return FourierObservable::from_terms(1, obs.out_dim(), as_terms(out));
}

FourierObservable koopman_torus_apply(const FourierObservable& obs, const IntMatrix& M) {
  const auto d = static_cast<Eigen::Index>(obs.torus_dim());
  if (M.rows() != d || M.cols() != d) throw std::invalid_argument("koopman_torus_apply: M has the wrong shape");
  const long double det = M.cast<long double>().determinant();
  if (std::llround(std::abs(det)) != 1) throw std::invalid_argument("koopman_torus_apply: M is not unimodular");
  std::map<Frequency, Coefficient> out;
  for (const auto& [k, c] : obs.terms()) {
    Frequency image(k.size());
    for (Eigen::Index r = 0; r < d; ++r) {
      std::int64_t acc = 0;
      for (Eigen::Index i = 0; i < d; ++i) acc += M(i, r) * k[static_cast<std::size_t>(i)];
      image[static_cast<std::size_t>(r)] = acc;
    }
    out[image] = c;
  }
  return FourierObservable::from_terms(obs.torus_dim(), obs.out_dim(), as_terms(out));
}

ConditionReport cond_dynsys(const FourierObservable& obs, std::size_t horizon, double epsilon) {
  if (obs.torus_dim() != 1) throw std::invalid_argument("cond_dynsys: doubling-map observable required");
  ConditionReport report;
  report.condition = "conddynsys";
  FourierObservable current = obs;
  double partial = 0.0;
  std::size_t n = 0;
  for (;; ++n) {
    const double term_norm = std::sqrt(norm_squared(current));
    if (n > horizon && term_norm == 0.0) break;
    const double weight = n == 0 ? 1.0 : 1.0 / std::sqrt(static_cast<double>(n));
    partial += weight * term_norm;
    report.rows.push_back({n, term_norm, partial, std::nullopt});
    current = pf_doubling_apply(current);
  }
  // Finite support: K^n f = 0 once 2^n exceeds the largest frequency.
  report.tail_bound = 0.0;
  report.verdict = *report.tail_bound < epsilon ? ConditionVerdict::holds : ConditionVerdict::inconclusive;
  report.certificate = "iterates vanish for n >= " + std::to_string(n) + " (finite Fourier support); n = 0 weight 1";
  return report;
}

ConditionReport markov_condition(const Eigen::MatrixXd& P, const std::optional<Eigen::VectorXd>& m,
                                 const Eigen::MatrixXd& f, MarkovConditionKind kind, std::size_t horizon,
                                 double epsilon) {
  const MarkovKernel K = MarkovKernel::make(P, m);
  if (f.rows() != static_cast<Eigen::Index>(K.states()))
    throw std::invalid_argument("markov_condition: f needs one row per state");
  const Eigen::RowVectorXd mean = K.m().transpose() * f;
  if (mean.cwiseAbs().maxCoeff() > 1e-10) throw std::invalid_argument("markov_condition: f is not centered under m");
  if (horizon < 1) throw std::invalid_argument("markov_condition: horizon must be >= 1");

  ConditionReport report;
  report.condition = kind == MarkovConditionKind::sqrt_sum ? "markov" : "normal";
  report.normal_kernel = K.is_normal(1e-10);
  const bool sq = kind == MarkovConditionKind::normal_sq_sum;

  auto weight = [sq](std::size_t n) { return sq ? 1.0 : 1.0 / std::sqrt(static_cast<double>(n)); };
  auto term_of = [sq](double norm) { return sq ? norm * norm : norm; };

  Eigen::MatrixXd g = f;
  double partial = 0.0, last = 0.0;
  for (std::size_t n = 1; n <= horizon; ++n) {
    g = K.apply(g);
    last = K.l2_norm(g);
    partial += weight(n) * term_of(last);
    report.rows.push_back({n, term_of(last), partial, std::nullopt});
  }

  const double sigma = K.centered_operator_norm();
  const double f_norm = K.l2_norm(f);
  std::string note = *report.normal_kernel ? "" : "; P is not normal in L2(m)";
  if (last == 0.0) {
    report.tail_bound = 0.0;
    report.verdict = ConditionVerdict::holds;
    report.certificate = "P^n f = 0 from n = " + std::to_string(horizon) + note;
    return report;
  }
  if (sigma < 1.0) {
    // ||P^n f|| <= sigma^{n-N} ||P^N f|| on the centered subspace.
    const double N = static_cast<double>(horizon);
    const double tail = sq ? last * last * sigma * sigma / (1.0 - sigma * sigma)
                           : last * sigma / ((1.0 - sigma) * std::sqrt(N + 1.0));
    report.tail_bound = tail;
    report.verdict = tail < epsilon ? ConditionVerdict::holds : ConditionVerdict::inconclusive;
    report.certificate = "geometric tail with centered operator norm " + std::to_string(sigma) + note;
    return report;
  }
  // ||P g|| <= ||g|| with equality iff g lies in ker(I - P*P). If the first
  // S*dim iterates all keep their norm, the Krylov space they span is P-invariant
  // and contained in that kernel, so ||P^n f|| = ||f|| for every n.
  const std::size_t checks = K.states() * static_cast<std::size_t>(f.cols());
  Eigen::MatrixXd v = f;
  bool isometric = f_norm > 0.0;
  for (std::size_t k = 0; k < checks && isometric; ++k) {
    Eigen::MatrixXd w = K.apply(v);
    isometric = std::abs(K.l2_norm(w) - K.l2_norm(v)) <= 1e-12 * f_norm;
    v = std::move(w);
  }
  if (isometric) {
    report.tail_bound = std::nullopt;
    report.verdict = ConditionVerdict::fails;
    report.certificate = "divergence: ||P^n f|| = ||f|| = " + std::to_string(f_norm) +
                         " for all n (isometric Krylov space), terms bounded below" + note;
    return report;
  }
  report.tail_bound = std::nullopt;
  report.verdict = ConditionVerdict::inconclusive;
  report.certificate = "no contraction on the centered subspace and no divergence certificate" + note;
  return report;
}

namespace {

/// max_s sup_x |sum_{t: f(t) <= x} (Q(s,t) - m(t))| over the distinct values of f.
double threshold_gap(const Eigen::MatrixXd& Q, const Eigen::VectorXd& m, const std::vector<std::vector<Eigen::Index>>& levels) {
  double best = 0.0;
  for (Eigen::Index s = 0; s < Q.rows(); ++s) {
    double cum = 0.0;
    for (std::size_t l = 0; l + 1 < levels.size(); ++l) {
      for (Eigen::Index t : levels[l]) cum += Q(s, t) - m(t);
      best = std::max(best, std::abs(cum));
    }
  }
  return best;
}

/// max_s ||Q(s, .) - m||_TV
double tv_to_stationary(const Eigen::MatrixXd& Q, const Eigen::VectorXd& m) {
  double best = 0.0;
  for (Eigen::Index s = 0; s < Q.rows(); ++s) best = std::max(best, 0.5 * (Q.row(s).transpose() - m).cwiseAbs().sum());
  return best;
}

/// max_{s,s'} ||Q(s, .) - Q(s', .)||_TV, submultiplicative in the power.
double tv_between_rows(const Eigen::MatrixXd& Q) {
  double best = 0.0;
  for (Eigen::Index s = 0; s < Q.rows(); ++s)
    for (Eigen::Index u = s + 1; u < Q.rows(); ++u) best = std::max(best, 0.5 * (Q.row(s) - Q.row(u)).cwiseAbs().sum());
  return best;
}

}  // namespace

PhiSequence phi_mixing_coeffs(const Eigen::MatrixXd& P, const std::optional<Eigen::VectorXd>& m,
                              const Eigen::VectorXd& f, std::size_t horizon) {
  if (horizon < 1) throw std::invalid_argument("phi_mixing_coeffs: horizon must be >= 1");
  const MarkovKernel K = MarkovKernel::make(P, m);
  if (f.size() != static_cast<Eigen::Index>(K.states())) throw std::invalid_argument("phi_mixing_coeffs: f needs one value per state");

  // States grouped by value of f, in increasing order; thresholds sit at each level.
  std::map<double, std::vector<Eigen::Index>> by_value;
  for (Eigen::Index s = 0; s < f.size(); ++s) by_value[f(s)].push_back(s);
  std::vector<std::vector<Eigen::Index>> levels;
  for (auto& [v, states] : by_value) levels.push_back(states);

  constexpr std::size_t kExtraCap = 20000;
  std::vector<double> v;            // v[i-1] = phi(F_0, Y_i)
  std::vector<double> tv;           // tv[i-1] = max_s ||P^i(s,.) - m||_TV
  std::map<std::vector<double>, std::size_t> seen;  // exact powers, for periodicity
  Eigen::MatrixXd Q = K.P();
  std::optional<std::pair<std::size_t, std::size_t>> cycle;  // P^j == P^k, j < k
  double geometric_base = -1.0;
  std::size_t geometric_t0 = 0;

  std::size_t N = 0;
  for (std::size_t i = 1; i <= horizon + kExtraCap; ++i) {
    v.push_back(threshold_gap(Q, K.m(), levels));
    tv.push_back(tv_to_stationary(Q, K.m()));
    if (geometric_base < 0.0) {
      const double dbar = tv_between_rows(Q);
      if (dbar < 1.0) geometric_base = dbar, geometric_t0 = i;
    }
    N = i;
    std::vector<double> key(Q.data(), Q.data() + Q.size());
    auto [it, inserted] = seen.emplace(std::move(key), i);
    if (!inserted) {
      cycle = std::make_pair(it->second, i);
      break;
    }
    if (i >= horizon) {
      // Everything beyond i is bounded by tv[i], since TV to stationarity is
      // nonincreasing; stop once that cannot change any phi(n), n <= horizon.
      double tail_max = 0.0;
      for (std::size_t k = horizon; k <= i; ++k) tail_max = std::max(tail_max, v[k - 1]);
      Eigen::MatrixXd next = Q * K.P();
      const double next_tv = tv_to_stationary(next, K.m());
      if (next_tv <= tail_max) {
        Q = std::move(next);
        break;
      }
    }
    Q = Q * K.P();
  }

  PhiSequence out;
  double beyond = 0.0;
  if (cycle) {
    // P^k = P^j: the sequence v is periodic from j on with period k - j, and the
    // last entry (i = k) duplicates i = j.
    v.pop_back();
    tv.pop_back();
    N = cycle->second - 1;
    for (std::size_t i = cycle->first; i <= N; ++i) beyond = std::max(beyond, v[i - 1]);
  } else if (N == horizon + kExtraCap) {
    beyond = tv_to_stationary(Q * K.P(), K.m());
    out.exact = false;
  }
  // Running sup from the far end.
  std::vector<double> run(N + 1, beyond);
  for (std::size_t i = N; i >= 1; --i) run[i - 1] = std::max(run[i], v[i - 1]);
  out.phi.resize(horizon);
  for (std::size_t n = 1; n <= horizon; ++n) {
    if (n <= N) out.phi[n - 1] = run[n - 1];
    else out.phi[n - 1] = cycle ? beyond : run[N];
  }

  // Certificates.
  std::size_t zero_from = 0;
  for (std::size_t i = 1; i <= tv.size(); ++i)
    if (tv[i - 1] == 0.0) { zero_from = i; break; }
  if (zero_from > 0) {
    out.certificate = PhiSequence::Certificate::zero;
    out.from = zero_from;
  } else if (geometric_base >= 0.0) {
    // phi(n) <= d(n) <= dbar(t0)^{floor(n / t0)} <= dbar(t0)^{-1} rho^n. A
    // contraction rules out periodicity, so a repeated power is then a
    // rounding-level fixed cycle and is ignored.
    out.certificate = PhiSequence::Certificate::geometric;
    out.from = 1;
    out.rho = std::pow(geometric_base, 1.0 / static_cast<double>(geometric_t0));
    out.C = geometric_base > 0.0 ? 1.0 / geometric_base : 0.0;
    if (geometric_base == 0.0) {
      out.certificate = PhiSequence::Certificate::zero;
      out.from = geometric_t0;
    }
  } else if (cycle && beyond > 0.0) {
    out.certificate = PhiSequence::Certificate::constant;
    out.from = cycle->first;
    out.constant = beyond;
  }
  return out;
}

namespace {

double ddm_exponent(double p) {
  if (!(p > 1.0)) throw std::invalid_argument("cond_ddm: p must exceed 1");
  return std::isinf(p) ? 1.0 : (p - 1.0) / p;
}

void check_phi(const std::vector<double>& phi) {
  for (std::size_t i = 0; i < phi.size(); ++i) {
    if (!(phi[i] >= 0.0 && phi[i] <= 1.0)) throw std::invalid_argument("cond_ddm: phi must lie in [0, 1]");
    if (i > 0 && phi[i] > phi[i - 1] * (1.0 + 1e-12) + 1e-15) throw std::invalid_argument("cond_ddm: phi is not nonincreasing");
  }
}

ConditionReport ddm_rows(const std::vector<double>& phi, double e, std::size_t horizon) {
  ConditionReport report;
  report.condition = "condDDM";
  double partial = 0.0;
  const std::size_t N = std::min(horizon, phi.size());
  for (std::size_t k = 1; k <= N; ++k) {
    const double term = std::pow(phi[k - 1], e) / std::sqrt(static_cast<double>(k));
    partial += term;
    report.rows.push_back({k, term, partial, std::nullopt});
  }
  return report;
}

double geometric_tail(double C, double rho, double e, std::size_t N) {
  const double q = std::pow(rho, e);
  if (q >= 1.0) return std::numeric_limits<double>::infinity();
  return std::pow(C, e) * std::pow(q, static_cast<double>(N + 1)) / ((1.0 - q) * std::sqrt(static_cast<double>(N) + 1.0));
}

}  // namespace

ConditionReport cond_ddm(const PhiSequence& phi, double p, std::size_t horizon, double epsilon) {
  const double e = ddm_exponent(p);
  check_phi(phi.phi);
  ConditionReport report = ddm_rows(phi.phi, e, horizon);
  const std::size_t N = report.rows.size();
  switch (phi.certificate) {
    case PhiSequence::Certificate::zero:
      if (phi.from <= N + 1) {
        report.tail_bound = 0.0;
        report.verdict = ConditionVerdict::holds;
        report.certificate = "phi(n) = 0 for n >= " + std::to_string(phi.from);
        return report;
      }
      break;
    case PhiSequence::Certificate::geometric: {
      const double tail = geometric_tail(phi.C, phi.rho, e, N);
      report.tail_bound = tail;
      report.verdict = tail < epsilon ? ConditionVerdict::holds : ConditionVerdict::inconclusive;
      report.certificate = "phi(n) <= " + std::to_string(phi.C) + " * " + std::to_string(phi.rho) + "^n";
      return report;
    }
    case PhiSequence::Certificate::constant:
      report.tail_bound = std::nullopt;
      report.verdict = ConditionVerdict::fails;
      report.certificate = "divergence: phi(n) = " + std::to_string(phi.constant) + " for n >= " +
                           std::to_string(phi.from) + ", terms >= c / sqrt(k)";
      return report;
    case PhiSequence::Certificate::none:
      break;
  }
  report.tail_bound = std::nullopt;
  report.verdict = ConditionVerdict::inconclusive;
  report.certificate = "no certificate for the tail";
  return report;
}

ConditionReport cond_ddm(const std::vector<double>& phi, double p, std::size_t horizon, double epsilon) {
  const double e = ddm_exponent(p);
  check_phi(phi);
  ConditionReport report = ddm_rows(phi, e, horizon);
  const std::size_t N = report.rows.size();
  if (N == 0) {
    report.verdict = ConditionVerdict::inconclusive;
    report.certificate = "empty sequence";
    return report;
  }
  if (phi[N - 1] == 0.0) {
    report.tail_bound = 0.0;
    report.verdict = ConditionVerdict::holds;
    report.certificate = "sequence reaches 0 (nonincreasing, so it stays 0)";
    return report;
  }
  // Data-fitted envelope phi(k) <= C rho^k from the second half of the data.
  double rho = 0.0;
  for (std::size_t k = N / 2 + 1; k < N; ++k) rho = std::max(rho, phi[k] / phi[k - 1]);
  const bool plateau = N >= 2 && phi[N / 2] == phi[N - 1];
  if (N >= 2 && rho < 1.0 && !plateau) {
    double C = 0.0;
    for (std::size_t k = 1; k <= N; ++k) C = std::max(C, phi[k - 1] / std::pow(rho, static_cast<double>(k)));
    const double tail = geometric_tail(C, rho, e, N);
    report.tail_bound = tail;
    report.verdict = tail < epsilon ? ConditionVerdict::holds : ConditionVerdict::inconclusive;
    report.certificate = "data-fitted geometric envelope rho = " + std::to_string(rho);
    return report;
  }
  if (plateau) {
    report.tail_bound = std::nullopt;
    report.verdict = ConditionVerdict::fails;
    report.certificate = "divergence: constant plateau phi = " + std::to_string(phi[N - 1]) +
                         " extrapolated, terms >= c / sqrt(k)";
    return report;
  }
  report.tail_bound = std::nullopt;
  report.verdict = ConditionVerdict::inconclusive;
  report.certificate = "no geometric envelope fits the data";
  return report;
}

ConditionReport fourier_tail_check(const FourierObservable& obs, double beta, double C,
                                   const std::vector<double>& m_grid) {
  if (!(beta > 2.0)) throw std::invalid_argument("fourier_tail_check: beta must exceed 2");
  if (!(C > 0.0)) throw std::invalid_argument("fourier_tail_check: C must be positive");
  ConditionReport report;
  report.condition = "fourier_tail";
  bool all = true;
  for (double m : m_grid) {
    if (!(m > 0.0)) throw std::invalid_argument("fourier_tail_check: grid points must be positive");
    double tail = 0.0;
    for (const auto& [k, c] : obs.terms()) {
      double r2 = 0.0;
      for (auto v : k) r2 += static_cast<double>(v) * static_cast<double>(v);
      if (std::sqrt(r2) >= m)
        for (auto z : c) tail += std::norm(z);
    }
    const double Lm = log_plus(m);
    const double bound = C / (Lm * std::pow(log_plus(Lm), beta));
    all = all && tail <= bound;
    report.rows.push_back({static_cast<std::size_t>(std::llround(m)), tail, tail, bound});
  }
  report.tail_bound = report.rows.empty() ? 0.0 : report.rows.back().term;
  report.verdict = all ? ConditionVerdict::holds : ConditionVerdict::fails;
  report.certificate = all ? "exact tail sums within the bound on the grid" : "tail sum exceeds the bound on the grid";
  return report;
}

}  // namespace lilab
