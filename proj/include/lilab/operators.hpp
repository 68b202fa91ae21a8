#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lilab/fourier.hpp"

namespace lilab {

enum class ConditionVerdict { holds, fails, inconclusive };
const char* to_string(ConditionVerdict v);

struct ConditionRow {
  std::size_t n = 0;
  double term = 0.0;
  double partial_sum = 0.0;
  std::optional<double> bound;  // per-row bound where the condition has one
};

struct ConditionReport {
  std::string condition;
  std::vector<ConditionRow> rows;
  std::optional<double> tail_bound;  // nullopt means unknown
  ConditionVerdict verdict = ConditionVerdict::inconclusive;
  /// How the verdict was certified, or why it could not be.
  std::string certificate;
  /// Markov conditions: whether P is normal in L^2(m).
  std::optional<bool> normal_kernel;
};

/// Transfer operator of the doubling map on coefficients: c'_k = c_{2k}.
FourierObservable pf_doubling_apply(const FourierObservable& obs);

using IntMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// f o theta for theta x = M x mod 1: the coefficient c_k moves to M^T k.
FourierObservable koopman_torus_apply(const FourierObservable& obs, const IntMatrix& M);

/// sum_{n>=0} ||K^n f||_2 / sqrt(n) with the n = 0 weight set to 1. Rows
/// run to max(horizon, last nonzero iterate).
ConditionReport cond_dynsys(const FourierObservable& obs, std::size_t horizon, double epsilon = 1e-8);

enum class MarkovConditionKind { sqrt_sum, normal_sq_sum };

/// sqrt_sum:      sum_{n>=1} ||P^n f||_2 / sqrt(n)
/// normal_sq_sum: sum_{n>=1} ||P^n f||_2^2 (meaningful for normal P)
ConditionReport markov_condition(const Eigen::MatrixXd& P, const std::optional<Eigen::VectorXd>& m,
                                 const Eigen::MatrixXd& f, MarkovConditionKind kind, std::size_t horizon,
                                 double epsilon = 1e-8);

struct PhiSequence {
  /// phi[n - 1] = phi(n) for n = 1..horizon.
  std::vector<double> phi;
  /// True when every value is the exact supremum over i >= n; false when the
  /// supremum beyond the evaluated range was replaced by a total-variation bound.
  bool exact = true;

  enum class Certificate { none, zero, geometric, constant };
  Certificate certificate = Certificate::none;
  std::size_t from = 1;      // certificate applies for n >= from
  double C = 0.0;            // geometric: phi(n) <= C rho^n
  double rho = 0.0;
  double constant = 0.0;     // constant: phi(n) = constant for n >= from
};

/// phi(n) = sup_{i>=n} max_s sup_x |P(Y_i <= x | W_0 = s) - P(Y_i <= x)| with Y_i = f(W_i).
PhiSequence phi_mixing_coeffs(const Eigen::MatrixXd& P, const std::optional<Eigen::VectorXd>& m,
                              const Eigen::VectorXd& f, std::size_t horizon);

/// sum_{k>=1} phi(k)^{(p-1)/p} / sqrt(k); p = +inf uses exponent 1.
ConditionReport cond_ddm(const PhiSequence& phi, double p, std::size_t horizon, double epsilon = 1e-8);
/// Raw sequence without a certificate; the tail is extrapolated from the data.
ConditionReport cond_ddm(const std::vector<double>& phi, double p, std::size_t horizon, double epsilon = 1e-8);

/// sum_{|k|>=m} |c_k|^2 <= C / (L(m) L(L(m))^beta) at each m of the grid.
ConditionReport fourier_tail_check(const FourierObservable& obs, double beta, double C,
                                   const std::vector<double>& m_grid);

}  // namespace lilab
