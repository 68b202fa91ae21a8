#include "lilab/markov.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lilab {

MarkovKernel::MarkovKernel(Eigen::MatrixXd P, Eigen::VectorXd m) : P_(std::move(P)), m_(std::move(m)) {
  const auto S = static_cast<std::size_t>(P_.rows());
  row_cdf_.resize(S);
  for (std::size_t s = 0; s < S; ++s) {
    double acc = 0.0;
    row_cdf_[s].resize(S);
    for (std::size_t t = 0; t < S; ++t) {
      acc += P_(s, t);
      row_cdf_[s][t] = acc;
    }
    row_cdf_[s].back() = 1.0;
  }
  double acc = 0.0;
  m_cdf_.resize(S);
  for (std::size_t s = 0; s < S; ++s) {
    acc += m_(s);
    m_cdf_[s] = acc;
  }
  m_cdf_.back() = 1.0;
}

MarkovKernel MarkovKernel::make(Eigen::MatrixXd P, std::optional<Eigen::VectorXd> m) {
  if (P.rows() == 0 || P.rows() != P.cols()) throw std::invalid_argument("Markov kernel must be square and non-empty");
  if (!P.allFinite() || P.minCoeff() < 0.0) throw std::invalid_argument("Markov kernel has negative or non-finite entries");
  for (Eigen::Index s = 0; s < P.rows(); ++s) {
    if (std::abs(P.row(s).sum() - 1.0) > kRowTol)
      throw std::invalid_argument("Markov kernel is not row-stochastic (row " + std::to_string(s) + ")");
  }
  const Eigen::Index S = P.rows();
  Eigen::VectorXd law;
  if (m) {
    law = *m;
    if (law.size() != S) throw std::invalid_argument("stationary law has wrong length");
  } else {
    // Solve m (P - I) = 0 with sum(m) = 1 as a least-squares system.
    Eigen::MatrixXd A(S + 1, S);
    A.topRows(S) = (P - Eigen::MatrixXd::Identity(S, S)).transpose();
    A.row(S).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(S + 1);
    rhs(S) = 1.0;
    law = A.colPivHouseholderQr().solve(rhs);
    law = law.cwiseMax(0.0);
    law /= law.sum();
  }
  if (law.minCoeff() < 0.0 || std::abs(law.sum() - 1.0) > kStationaryTol)
    throw std::invalid_argument("stationary law must be a probability vector");
  if ((law.transpose() * P - law.transpose()).cwiseAbs().maxCoeff() > kStationaryTol)
    throw std::invalid_argument("m is not stationary for P (m P != m)");
  if (law.minCoeff() <= 0.0)
    throw std::invalid_argument("stationary law must charge every state (remove transient states)");
  return MarkovKernel(std::move(P), std::move(law));
}

Eigen::MatrixXd MarkovKernel::adjoint() const {
  const auto S = P_.rows();
  Eigen::MatrixXd adj(S, S);
  for (Eigen::Index s = 0; s < S; ++s)
    for (Eigen::Index t = 0; t < S; ++t) adj(s, t) = m_(t) * P_(t, s) / m_(s);
  return adj;
}

double MarkovKernel::l2_norm(const Eigen::MatrixXd& f) const {
  double sum = 0.0;
  for (Eigen::Index s = 0; s < f.rows(); ++s) sum += m_(s) * f.row(s).squaredNorm();
  return std::sqrt(sum);
}

Eigen::MatrixXd MarkovKernel::center(const Eigen::MatrixXd& f) const {
  const Eigen::RowVectorXd mean = m_.transpose() * f;
  return f.rowwise() - mean;
}

bool MarkovKernel::is_normal(double tol) const {
  const Eigen::MatrixXd adj = adjoint();
  return (P_ * adj - adj * P_).cwiseAbs().maxCoeff() <= tol;
}

double MarkovKernel::centered_operator_norm() const {
  const auto S = P_.rows();
  const Eigen::VectorXd root = m_.cwiseSqrt();
  Eigen::MatrixXd Q = root.asDiagonal() * P_ * root.cwiseInverse().asDiagonal();
  const Eigen::MatrixXd proj = Eigen::MatrixXd::Identity(S, S) - root * root.transpose();
  Q = Q * proj;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Q);
  return svd.singularValues()(0);
}

std::size_t MarkovKernel::pick(const std::vector<double>& cumulative, double u) {
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  if (it == cumulative.end()) --it;
  return static_cast<std::size_t>(it - cumulative.begin());
}

std::size_t MarkovKernel::sample_initial(StreamRng& rng) const { return pick(m_cdf_, rng.uniform()); }

std::size_t MarkovKernel::step(std::size_t state, StreamRng& rng) const {
  return pick(row_cdf_[state], rng.uniform());
}

}  // namespace lilab
