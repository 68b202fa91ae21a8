#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lilab/filtration.hpp"
#include "lilab/normspace.hpp"
#include "lilab/processes.hpp"
#include "lilab/stats.hpp"

namespace lilab {

/// L(x) = max(1, ln x) for x > 0.
double log_plus(double x);
/// sqrt(n L(L(n)))
double lil_scale(double n);
/// h(u) = (1 + u) log(1 + u) - u
double bennett_h(double u);

/// Normalizer of a maximal function: n^{1/p} for 1 <= p < 2, sqrt(n L(L n)) for lil.
struct Normalization {
  enum class Kind { power, lil };
  Kind kind = Kind::lil;
  double p = 2.0;

  static Normalization power(double p);
  static Normalization lil() { return {Kind::lil, 2.0}; }
  double operator()(double n) const;
  /// Dyadic-block normalizer of M*: 2^{s/p} or 2^{s/2} L(s)^{1/2} with L(0) = 1.
  double block(unsigned s) const;
  std::string name() const;
};

/// 1 / normalizer(n)^2 for n = 1..n_max (index n - 1).
std::shared_ptr<const std::vector<double>> inverse_square_table(const Normalization& norm, std::size_t n_max);

struct LimitReport {
  std::string statistic;
  double estimate = 0.0;
  double se = 0.0;
  std::size_t sample_size = 0;
  std::vector<double> n_grid;
  std::map<std::string, std::vector<double>> curves;
  std::map<std::string, double> values;
  std::optional<bool> pass;
  std::string note;
};

// ------------------------------------------------------------------ per-path trackers
// Each tracker consumes one path step by step (x has `dim` entries).

/// sup_{n <= n_max} |S_n| / norm(n) and M* over the dyadic blocks 2^s <= n_max.
class MaximalTracker {
 public:
  MaximalTracker(const Normalization& norm, std::size_t dim, std::size_t n_max,
                 std::shared_ptr<const std::vector<double>> table = nullptr);
  void push(const double* x);
  double value() const { return std::sqrt(best_sq_); }
  double m_star() const { return m_star_; }
  std::size_t steps() const { return n_; }

 private:
  Normalization norm_;
  std::size_t dim_, n_max_, n_ = 0;
  std::shared_ptr<const std::vector<double>> table_;
  std::vector<double> sum_;
  double best_sq_ = 0.0, run_max_sq_ = 0.0, m_star_ = 0.0;
  std::size_t next_block_ = 1;
  unsigned block_s_ = 0;
};

/// |S_n| / sqrt(2 n L(L(n))): maximum over the dyadic grid points 2^j with
/// j >= ceil((1 - window_fraction) J), 2^J <= n_total, and over all n.
class LilTracker {
 public:
  LilTracker(std::size_t dim, std::size_t n_total, double window_fraction,
             std::shared_ptr<const std::vector<double>> table = nullptr);
  void push(const double* x);
  double windowed() const { return windowed_; }
  double full_range() const { return std::sqrt(full_sq_ / 2.0); }
  unsigned first_exponent() const { return j0_; }
  unsigned last_exponent() const { return J_; }

 private:
  std::size_t dim_, n_ = 0;
  unsigned j0_ = 0, J_ = 0;
  std::shared_ptr<const std::vector<double>> table_;
  std::vector<double> sum_;
  double windowed_ = 0.0, full_sq_ = 0.0;
  std::size_t next_grid_ = 1;
  unsigned grid_j_ = 0;
};

/// Values of |S_n| / norm(n) at the grid points (sorted, >= 1).
class GridTracker {
 public:
  GridTracker(const Normalization& norm, std::size_t dim, std::vector<std::size_t> grid);
  void push(const double* x);
  const std::vector<double>& values() const { return values_; }

 private:
  Normalization norm_;
  std::size_t dim_, n_ = 0, next_ = 0;
  std::vector<std::size_t> grid_;
  std::vector<double> sum_, values_;
};

/// |S_n - M_n| / sqrt(n L(L n)) at the grid points, from paired increments.
class ApproxErrorTracker {
 public:
  ApproxErrorTracker(std::size_t dim, std::vector<std::size_t> grid);
  void push(const double* x, const double* d);
  const std::vector<double>& values() const { return values_; }

 private:
  std::size_t dim_, n_ = 0, next_ = 0;
  std::vector<std::size_t> grid_;
  std::vector<double> diff_, values_;
};

/// Lag sums for the pooled long-run covariance of one path.
class CovarianceTracker {
 public:
  CovarianceTracker(std::size_t dim, std::size_t max_lag, std::size_t n_steps);
  void push(const double* x);
  /// Flattened sums for pooling across paths (see covariance_from_sums):
  /// [lag products (max_lag+1)*dim*dim | total dim | heads (max_lag+1)*dim | tails (max_lag+1)*dim].
  std::vector<double> sums() const;
  static std::size_t sums_size(std::size_t dim, std::size_t max_lag);

 private:
  std::size_t dim_, max_lag_, n_steps_, n_ = 0;
  std::vector<double> ring_;  // last max_lag+1 observations
  std::vector<double> lag_, total_, head_, tail_;
};

struct CovarianceEstimate {
  CovarianceOperator K;
  bool clipped = false;
  std::size_t max_lag = 0;
  std::size_t n_steps = 0;
  std::size_t n_paths = 0;
  std::optional<CovarianceOperator> exact;
};

/// K = C(0) + sum_{m=1}^{max_lag} (C(m) + C(m)^T), C(m) centered by the grand
/// mean and divided by (n_steps - m) per path; negative eigenvalues clipped.
CovarianceEstimate covariance_from_sums(const std::vector<double>& pooled, std::size_t dim, std::size_t max_lag,
                                        std::size_t n_steps, std::size_t n_paths);

// ------------------------------------------------------------------ statistics

struct MaximalStats {
  Normalization norm;
  std::size_t n_max = 0;
  std::vector<double> values;   // per path
  std::vector<double> m_star;   // per path
  std::vector<double> n_grid;   // dyadic block ends used for M*
  /// max over paths of value / M* (the empirical domination constant).
  double domination_constant = 0.0;
};

MaximalStats maximal_stats(const PathBatch& batch, const Normalization& norm, std::size_t n_max);

struct WeakNormResult {
  double estimate = 0.0;
  double lambda_at_sup = 0.0;
  double tail_at_sup = 0.0;  // empirical P(Z >= lambda_at_sup)
  std::size_t n = 0;
  /// (lambda, lambda * P(Z > lambda)^{1/p}) on 64 log-spaced points.
  std::vector<std::pair<double, double>> profile;
};

/// Exact sup of lambda * P(Z > lambda)^{1/p} over lambda >= the 1st
/// percentile (attained as lambda tends to a sample value from below).
WeakNormResult weak_norm(const std::vector<double>& samples, double p);

/// Relative growth of the running sup of the profile over its last decade:
/// (R(lambda_max) - R(lambda_max / 10)) / R(lambda_max).
double last_decade_variation(const WeakNormResult& w);

/// Weak L^{1,infinity} norm of M_1(|X|) against E|X|.
LimitReport hopf_check(const PathBatch& batch, std::size_t n_max);
LimitReport hopf_summary(const std::vector<double>& m1, const std::vector<double>& abs_path_means);

LimitReport lil_limsup(const PathBatch& batch, double window_fraction,
                       const std::optional<CovarianceOperator>& K = std::nullopt);
LimitReport lil_summary(const std::vector<double>& windowed, const std::vector<double>& full,
                        const std::optional<CovarianceOperator>& K);

CovarianceEstimate covariance_series(const PathBatch& batch, std::size_t max_lag,
                                     const ProcessModel* model = nullptr);
/// Closed form where available (linear processes, Markov chains, martingale
/// differences, Fourier observables).
std::optional<CovarianceOperator> covariance_series(const ProcessModel& model);

/// Median and 95th percentile of per-path grid values, with a decay ratio
/// between the last and first grid point.
LimitReport curve_summary(const std::string& statistic, const std::vector<std::vector<double>>& per_path,
                          const std::vector<std::size_t>& grid);

LimitReport approx_error_curve(const ProcessModel& model, const MartingaleApproximant& approx, const PathBatch& batch,
                               const std::vector<std::size_t>& n_grid);
LimitReport mz_decay(const PathBatch& batch, double p, const std::vector<std::size_t>& n_grid);

struct FreedmanPoint {
  double x = 0.0;
  double y = 0.0;
  double empirical = 0.0;
  double se = 0.0;
  double bound = 0.0;
  bool pass = false;
};

struct FreedmanReport {
  double c = 0.0;
  double D = 1.0;
  std::size_t n = 0;
  std::size_t n_paths = 0;
  std::vector<FreedmanPoint> points;
  bool pass = false;
};

/// Bounded martingale differences only. Event: max_{k<=n} |S_k| > x and
/// sum_i E(|d_i|^2 | F_{i-1}) <= y / D^2; bound 2 exp(-(y/c^2) h(xc/y)).
FreedmanReport freedman_pinelis_check(const ProcessModel& model, std::size_t n, std::size_t n_paths,
                                      std::uint64_t seed, const std::vector<std::pair<double, double>>& grid,
                                      double D = 1.0, unsigned workers = 1);

struct CltDirection {
  Eigen::VectorXd u;
  double variance_model = 0.0;   // u^T K u
  double variance_sample = 0.0;  // sample variance of <u, S_n / sqrt n>
  KsResult ks;
  bool skipped = false;
};

struct CltReport {
  std::vector<CltDirection> directions;
  double alpha = 1e-3;
  double per_test_level = 0.0;
  bool pass = false;
  std::string note;
};

/// samples: per-path S_n / sqrt(n) vectors. Kolmogorov-Smirnov of the
/// standardized projections against N(0,1) with Sidak correction.
CltReport clt_diagnostics(const std::vector<Eigen::VectorXd>& samples, const CovarianceOperator& K,
                          const std::vector<Eigen::VectorXd>& directions, double alpha = 1e-3);
/// u_k = (cos(k pi / m), sin(k pi / m)) padded with zeros, k = 0..m-1.
std::vector<Eigen::VectorXd> planar_directions(std::size_t dim, std::size_t m);

/// SE of a sample median from order statistics (distribution free).
double median_se(std::vector<double> values);

}  // namespace lilab
