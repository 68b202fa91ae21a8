#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace lilab {

/// Finite-dimensional stand-in for a separable Banach (or Hilbert) space.
/// Either the Euclidean norm or a weighted l^r norm
/// |x| = (sum_i w_i |x_i|^r)^{1/r} with r in (1, 2].
class NormSpec {
 public:
  enum class Kind { euclidean, weighted_lr };

  static NormSpec euclidean(std::size_t dim);
  static NormSpec weighted_lr(double r, std::vector<double> weights);

  Kind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return dim_; }
  double r() const noexcept { return r_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  bool operator==(const NormSpec&) const = default;

 private:
  NormSpec() = default;

  Kind kind_ = Kind::euclidean;
  std::size_t dim_ = 1;
  double r_ = 2.0;
  std::vector<double> weights_;
};

/// Element of the stand-in space; length must match the owning NormSpec.
using VectorSample = std::span<const double>;

double norm(VectorSample v, const NormSpec& space);

/// |x+y|^r + |x-y|^r - 2(|x|^r + D^r |y|^r). Non-positive values certify the
/// r-smoothness inequality for the pair (x, y).
double smoothness_defect(VectorSample x, VectorSample y, const NormSpec& space, double r,
                         double D);

/// Symmetric positive semidefinite covariance operator on the stand-in space.
/// The input matrix is symmetrized as (K + K^T)/2 after validation.
class CovarianceOperator {
 public:
  static constexpr double kSymmetryTol = 1e-10;
  static constexpr double kPsdTol = 1e-10;

  explicit CovarianceOperator(Eigen::MatrixXd matrix);

  /// Same as the constructor but negative eigenvalues are clipped to zero
  /// instead of rejected. `clipped` reports whether clipping happened.
  static CovarianceOperator project_psd(const Eigen::MatrixXd& matrix, bool* clipped = nullptr);

  const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(matrix_.rows()); }

  /// u^T K u
  double quadratic(const Eigen::VectorXd& u) const { return u.dot(matrix_ * u); }
  double max_eigenvalue() const;
  double min_eigenvalue() const;

 private:
  struct Trusted {};
  CovarianceOperator(Eigen::MatrixXd matrix, Trusted) : matrix_(std::move(matrix)) {}

  Eigen::MatrixXd matrix_;
};

/// sup over the dual unit ball of ||x*(d)||_2, i.e. sqrt(lambda_max(K)) for
/// the Euclidean stand-in.
double dual_ball_sup(const CovarianceOperator& K);

}  // namespace lilab
