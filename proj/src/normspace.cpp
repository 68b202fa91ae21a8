#include "lilab/normspace.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lilab {

NormSpec NormSpec::euclidean(std::size_t dim) {
  if (dim == 0) throw std::invalid_argument("NormSpec: dim must be >= 1");
  NormSpec s;
  s.kind_ = Kind::euclidean;
  s.dim_ = dim;
  s.r_ = 2.0;
  return s;
}

NormSpec NormSpec::weighted_lr(double r, std::vector<double> weights) {
  if (weights.empty()) throw std::invalid_argument("NormSpec: dim must be >= 1");
  if (!(r > 1.0 && r <= 2.0)) throw std::invalid_argument("NormSpec: r must lie in (1, 2]");
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w))
      throw std::invalid_argument("NormSpec: weights must be positive");
  }
  NormSpec s;
  s.kind_ = Kind::weighted_lr;
  s.dim_ = weights.size();
  s.r_ = r;
  s.weights_ = std::move(weights);
  return s;
}

namespace {

void check_dim(VectorSample v, const NormSpec& space) {
  if (v.size() != space.dim()) {
    throw std::invalid_argument("dimension mismatch: vector has " + std::to_string(v.size()) +
                                " coordinates, space has " + std::to_string(space.dim()));
  }
}

}  // namespace

double norm(VectorSample v, const NormSpec& space) {
  check_dim(v, space);
  if (space.kind() == NormSpec::Kind::euclidean) {
    double sum = 0.0;
    for (double x : v) sum += x * x;
    return std::sqrt(sum);
  }
  const double r = space.r();
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) sum += space.weights()[i] * std::pow(std::abs(v[i]), r);
  return std::pow(sum, 1.0 / r);
}

namespace {

// |v|^r without taking the root when r matches the space's own exponent.
double norm_pow(VectorSample v, const NormSpec& space, double r) {
  if (r == space.r()) {
    double sum = 0.0;
    if (space.kind() == NormSpec::Kind::euclidean) {
      for (double x : v) sum += x * x;
    } else {
      for (std::size_t i = 0; i < v.size(); ++i)
        sum += space.weights()[i] * std::pow(std::abs(v[i]), r);
    }
    return sum;
  }
  return std::pow(norm(v, space), r);
}

}  // namespace

double smoothness_defect(VectorSample x, VectorSample y, const NormSpec& space, double r,
                         double D) {
  check_dim(x, space);
  check_dim(y, space);
  if (!(r > 1.0 && r <= 2.0)) throw std::invalid_argument("smoothness_defect: r must lie in (1, 2]");
  if (!(D >= 1.0)) throw std::invalid_argument("smoothness_defect: D must be >= 1");

  std::vector<double> sum(x.size()), diff(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    sum[i] = x[i] + y[i];
    diff[i] = x[i] - y[i];
  }
  return norm_pow(sum, space, r) + norm_pow(diff, space, r) -
         2.0 * (norm_pow(x, space, r) + std::pow(D, r) * norm_pow(y, space, r));
}

CovarianceOperator::CovarianceOperator(Eigen::MatrixXd matrix) {
  if (matrix.rows() == 0 || matrix.rows() != matrix.cols())
    throw std::invalid_argument("CovarianceOperator: matrix must be square and non-empty");
  if (!matrix.allFinite()) throw std::invalid_argument("CovarianceOperator: non-finite entries");
  const double asym = (matrix - matrix.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTol)
    throw std::invalid_argument("CovarianceOperator: matrix not symmetric (defect " +
                                std::to_string(asym) + ")");
  matrix_ = 0.5 * (matrix + matrix.transpose());
  if (min_eigenvalue() < -kPsdTol)
    throw std::invalid_argument("CovarianceOperator: matrix not positive semidefinite");
}

CovarianceOperator CovarianceOperator::project_psd(const Eigen::MatrixXd& matrix, bool* clipped) {
  if (matrix.rows() == 0 || matrix.rows() != matrix.cols())
    throw std::invalid_argument("CovarianceOperator: matrix must be square and non-empty");
  const Eigen::MatrixXd sym = 0.5 * (matrix + matrix.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  Eigen::VectorXd values = solver.eigenvalues();
  const bool negative = values.minCoeff() < -kPsdTol;
  if (clipped) *clipped = negative;
  if (!negative) return CovarianceOperator(sym, Trusted{});
  values = values.cwiseMax(0.0);
  Eigen::MatrixXd fixed = solver.eigenvectors() * values.asDiagonal() * solver.eigenvectors().transpose();
  return CovarianceOperator(0.5 * (fixed + fixed.transpose()), Trusted{});
}

double CovarianceOperator::max_eigenvalue() const {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(matrix_, Eigen::EigenvaluesOnly)
      .eigenvalues()
      .maxCoeff();
}

double CovarianceOperator::min_eigenvalue() const {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(matrix_, Eigen::EigenvaluesOnly)
      .eigenvalues()
      .minCoeff();
}

double dual_ball_sup(const CovarianceOperator& K) {
  return std::sqrt(std::max(0.0, K.max_eigenvalue()));
}

}  // namespace lilab
