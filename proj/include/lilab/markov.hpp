#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "lilab/rng.hpp"

namespace lilab {

/// Row-stochastic kernel on a finite state space together with its
/// stationary law m. Functions on the state space are S x dim matrices;
/// the natural geometry is L^2(m).
class MarkovKernel {
 public:
  static constexpr double kRowTol = 1e-12;
  static constexpr double kStationaryTol = 1e-10;

  /// Validates P (and m, when given). When m is omitted the stationary law is
  /// solved for; the chain must then have a unique stationary law.
  static MarkovKernel make(Eigen::MatrixXd P, std::optional<Eigen::VectorXd> m = std::nullopt);

  std::size_t states() const noexcept { return static_cast<std::size_t>(P_.rows()); }
  const Eigen::MatrixXd& P() const noexcept { return P_; }
  const Eigen::VectorXd& m() const noexcept { return m_; }

  /// (P f)(s) = sum_t P(s,t) f(t)
  Eigen::MatrixXd apply(const Eigen::MatrixXd& f) const { return P_ * f; }
  /// Adjoint in L^2(m): P*(s,t) = m(t) P(t,s) / m(s).
  Eigen::MatrixXd adjoint() const;
  /// ||f||_{L^2(m)} with Euclidean norm on the values.
  double l2_norm(const Eigen::MatrixXd& f) const;
  /// f - E_m f
  Eigen::MatrixXd center(const Eigen::MatrixXd& f) const;
  /// PP* = P*P to `tol` in max-entry norm.
  bool is_normal(double tol = 1e-10) const;
  /// Operator norm of P on the m-centered subspace of L^2(m), i.e. the
  /// second-largest singular value of D P D^{-1} with D = diag(sqrt m).
  double centered_operator_norm() const;

  std::size_t sample_initial(StreamRng& rng) const;
  std::size_t step(std::size_t state, StreamRng& rng) const;

 private:
  MarkovKernel(Eigen::MatrixXd P, Eigen::VectorXd m);
  static std::size_t pick(const std::vector<double>& cumulative, double u);

  Eigen::MatrixXd P_;
  Eigen::VectorXd m_;
  std::vector<std::vector<double>> row_cdf_;
  std::vector<double> m_cdf_;
};

}  // namespace lilab
