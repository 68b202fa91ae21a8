#include "lilab/limits.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <mutex>
#include <thread>

#include "lilab/model_io.hpp"

namespace lilab {

double log_plus(double x) {
  if (!(x > 0.0)) throw std::invalid_argument("log_plus: x must be positive");
  return std::max(1.0, std::log(x));
}

double lil_scale(double n) { return std::sqrt(n * log_plus(log_plus(n))); }

double bennett_h(double u) {
  if (!(u > -1.0)) throw std::invalid_argument("bennett_h: u must exceed -1");
  return (1.0 + u) * std::log1p(u) - u;
}

Normalization Normalization::power(double p) {
  if (!(p >= 1.0 && p < 2.0)) throw std::invalid_argument("maximal function: p must lie in [1, 2)");
  return {Kind::power, p};
}

double Normalization::operator()(double n) const {
  return kind == Kind::power ? std::pow(n, 1.0 / p) : lil_scale(n);
}

double Normalization::block(unsigned s) const {
  const double ds = static_cast<double>(s);
  if (kind == Kind::power) return std::exp2(ds / p);
  const double L = s == 0 ? 1.0 : log_plus(ds);
  return std::exp2(ds / 2.0) * std::sqrt(L);
}

std::string Normalization::name() const {
  if (kind == Kind::lil) return "M2";
  return "M" + std::to_string(p).substr(0, 4);
}

std::shared_ptr<const std::vector<double>> inverse_square_table(const Normalization& norm, std::size_t n_max) {
  auto table = std::make_shared<std::vector<double>>(n_max);
  for (std::size_t n = 1; n <= n_max; ++n) {
    const double v = norm(static_cast<double>(n));
    (*table)[n - 1] = 1.0 / (v * v);
  }
  return table;
}

namespace {

double squared_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

unsigned floor_log2(std::size_t n) {
  unsigned j = 0;
  while ((std::size_t{2} << j) <= n) ++j;
  return j;
}

}  // namespace

// ------------------------------------------------------------------ trackers

MaximalTracker::MaximalTracker(const Normalization& norm, std::size_t dim, std::size_t n_max,
                               std::shared_ptr<const std::vector<double>> table)
    : norm_(norm), dim_(dim), n_max_(n_max), table_(std::move(table)), sum_(dim, 0.0) {
  if (!table_ || table_->size() < n_max) table_ = inverse_square_table(norm, n_max);
}

void MaximalTracker::push(const double* x) {
  if (n_ >= n_max_) return;
  ++n_;
  for (std::size_t a = 0; a < dim_; ++a) sum_[a] += x[a];
  const double sq = squared_norm(sum_);
  best_sq_ = std::max(best_sq_, sq * (*table_)[n_ - 1]);
  run_max_sq_ = std::max(run_max_sq_, sq);
  if (n_ == next_block_) {
    m_star_ = std::max(m_star_, std::sqrt(run_max_sq_) / norm_.block(block_s_));
    next_block_ *= 2;
    ++block_s_;
  }
}

LilTracker::LilTracker(std::size_t dim, std::size_t n_total, double window_fraction,
                       std::shared_ptr<const std::vector<double>> table)
    : dim_(dim), table_(std::move(table)), sum_(dim, 0.0) {
  if (!(window_fraction > 0.0 && window_fraction <= 1.0))
    throw std::invalid_argument("lil_limsup: window_fraction must lie in (0, 1]");
  if (n_total == 0) throw std::invalid_argument("lil_limsup: empty path");
  J_ = floor_log2(n_total);
  j0_ = static_cast<unsigned>(std::ceil((1.0 - window_fraction) * static_cast<double>(J_) - 1e-12));
  if (!table_ || table_->size() < n_total) table_ = inverse_square_table(Normalization::lil(), n_total);
}

void LilTracker::push(const double* x) {
  ++n_;
  for (std::size_t a = 0; a < dim_; ++a) sum_[a] += x[a];
  if (n_ > table_->size()) return;
  const double sq = squared_norm(sum_) * (*table_)[n_ - 1];
  full_sq_ = std::max(full_sq_, sq);
  if (n_ == next_grid_) {
    if (grid_j_ >= j0_ && grid_j_ <= J_) windowed_ = std::max(windowed_, std::sqrt(sq / 2.0));
    next_grid_ *= 2;
    ++grid_j_;
  }
}

GridTracker::GridTracker(const Normalization& norm, std::size_t dim, std::vector<std::size_t> grid)
    : norm_(norm), dim_(dim), grid_(std::move(grid)), sum_(dim, 0.0), values_(grid_.size(), 0.0) {
  for (std::size_t i = 0; i < grid_.size(); ++i)
    if (grid_[i] == 0 || (i > 0 && grid_[i] <= grid_[i - 1])) throw std::invalid_argument("n-grid must be strictly increasing and >= 1");
}

void GridTracker::push(const double* x) {
  ++n_;
  for (std::size_t a = 0; a < dim_; ++a) sum_[a] += x[a];
  if (next_ < grid_.size() && n_ == grid_[next_]) {
    values_[next_] = std::sqrt(squared_norm(sum_)) / norm_(static_cast<double>(n_));
    ++next_;
  }
}

ApproxErrorTracker::ApproxErrorTracker(std::size_t dim, std::vector<std::size_t> grid)
    : dim_(dim), grid_(std::move(grid)), diff_(dim, 0.0), values_(grid_.size(), 0.0) {
  for (std::size_t i = 0; i < grid_.size(); ++i)
    if (grid_[i] == 0 || (i > 0 && grid_[i] <= grid_[i - 1])) throw std::invalid_argument("n-grid must be strictly increasing and >= 1");
}

void ApproxErrorTracker::push(const double* x, const double* d) {
  ++n_;
  for (std::size_t a = 0; a < dim_; ++a) diff_[a] += x[a] - d[a];
  if (next_ < grid_.size() && n_ == grid_[next_]) {
    values_[next_] = std::sqrt(squared_norm(diff_)) / lil_scale(static_cast<double>(n_));
    ++next_;
  }
}

CovarianceTracker::CovarianceTracker(std::size_t dim, std::size_t max_lag, std::size_t n_steps)
    : dim_(dim),
      max_lag_(max_lag),
      n_steps_(n_steps),
      ring_((max_lag + 1) * dim, 0.0),
      lag_((max_lag + 1) * dim * dim, 0.0),
      total_(dim, 0.0),
      head_((max_lag + 1) * dim, 0.0),
      tail_((max_lag + 1) * dim, 0.0) {
  if (max_lag >= n_steps) throw std::invalid_argument("covariance_series: max_lag must be below the path length");
}

void CovarianceTracker::push(const double* x) {
  const std::size_t W = max_lag_ + 1;
  const std::size_t slot = n_ % W;
  std::copy(x, x + dim_, ring_.begin() + static_cast<std::ptrdiff_t>(slot * dim_));
  const std::size_t lags = std::min(max_lag_, n_);
  if (dim_ == 1) {
    const double v = x[0];
    std::size_t idx = slot;
    for (std::size_t m = 0; m <= lags; ++m) {
      lag_[m] += ring_[idx] * v;
      idx = idx == 0 ? W - 1 : idx - 1;
    }
  } else {
    std::size_t idx = slot;
    for (std::size_t m = 0; m <= lags; ++m) {
      const double* past = ring_.data() + idx * dim_;
      double* out = lag_.data() + m * dim_ * dim_;
      for (std::size_t a = 0; a < dim_; ++a)
        for (std::size_t b = 0; b < dim_; ++b) out[a * dim_ + b] += past[a] * x[b];
      idx = idx == 0 ? W - 1 : idx - 1;
    }
  }
  for (std::size_t a = 0; a < dim_; ++a) total_[a] += x[a];
  // head_[m] = sum of the first m observations.
  for (std::size_t m = n_ + 1; m <= max_lag_; ++m)
    for (std::size_t a = 0; a < dim_; ++a) head_[m * dim_ + a] += x[a];
  ++n_;
}

std::size_t CovarianceTracker::sums_size(std::size_t dim, std::size_t max_lag) {
  return (max_lag + 1) * dim * dim + dim + 2 * (max_lag + 1) * dim;
}

std::vector<double> CovarianceTracker::sums() const {
  if (n_ != n_steps_) throw std::logic_error("CovarianceTracker: path incomplete");
  std::vector<double> out;
  out.reserve(sums_size(dim_, max_lag_));
  out.insert(out.end(), lag_.begin(), lag_.end());
  out.insert(out.end(), total_.begin(), total_.end());
  out.insert(out.end(), head_.begin(), head_.end());
  // tail[m] = sum of the last m observations, read from the ring.
  const std::size_t W = max_lag_ + 1;
  std::vector<double> tail((max_lag_ + 1) * dim_, 0.0);
  std::size_t idx = (n_ - 1) % W;
  for (std::size_t m = 1; m <= max_lag_; ++m) {
    for (std::size_t a = 0; a < dim_; ++a) tail[m * dim_ + a] = tail[(m - 1) * dim_ + a] + ring_[idx * dim_ + a];
    idx = idx == 0 ? W - 1 : idx - 1;
  }
  out.insert(out.end(), tail.begin(), tail.end());
  return out;
}

CovarianceEstimate covariance_from_sums(const std::vector<double>& pooled, std::size_t dim, std::size_t max_lag,
                                        std::size_t n_steps, std::size_t n_paths) {
  if (pooled.size() != CovarianceTracker::sums_size(dim, max_lag)) throw std::invalid_argument("covariance sums have the wrong size");
  const auto d = static_cast<Eigen::Index>(dim);
  const double* lag = pooled.data();
  const double* total = lag + (max_lag + 1) * dim * dim;
  const double* head = total + dim;
  const double* tail = head + (max_lag + 1) * dim;
  const double P = static_cast<double>(n_paths), N = static_cast<double>(n_steps);
  Eigen::VectorXd T = Eigen::Map<const Eigen::VectorXd>(total, d);
  const Eigen::VectorXd mu = T / (P * N);
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t m = 0; m <= max_lag; ++m) {
    Eigen::MatrixXd C = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        lag + m * dim * dim, d, d);
    const Eigen::VectorXd later = T - Eigen::Map<const Eigen::VectorXd>(head + m * dim, d);  // sum x_{n+m}
    const Eigen::VectorXd earlier = T - Eigen::Map<const Eigen::VectorXd>(tail + m * dim, d);  // sum x_n
    const double count = P * (N - static_cast<double>(m));
    C = C - earlier * mu.transpose() - mu * later.transpose() + count * mu * mu.transpose();
    C /= count;
    K += m == 0 ? C : Eigen::MatrixXd(C + C.transpose());
  }
  K = 0.5 * (K + K.transpose());
  bool clipped = false;
  CovarianceOperator op = CovarianceOperator::project_psd(K, &clipped);
  return {op, clipped, max_lag, n_steps, n_paths, std::nullopt};
}

// ------------------------------------------------------------------ statistics

namespace {

void check_batch(const PathBatch& batch) {
  if (batch.n_paths == 0 || batch.n_steps == 0) throw std::invalid_argument("empty batch");
}

}  // namespace

MaximalStats maximal_stats(const PathBatch& batch, const Normalization& norm, std::size_t n_max) {
  check_batch(batch);
  if (n_max == 0 || n_max > batch.n_steps) throw std::invalid_argument("maximal_stats: n_max must lie in [1, n_steps]");
  MaximalStats out;
  out.norm = norm;
  out.n_max = n_max;
  for (std::size_t n = 1; n <= n_max; n *= 2) out.n_grid.push_back(static_cast<double>(n));
  auto table = inverse_square_table(norm, n_max);
  for (std::size_t p = 0; p < batch.n_paths; ++p) {
    MaximalTracker t(norm, batch.dim, n_max, table);
    const auto path = batch.path(p);
    for (std::size_t n = 0; n < n_max; ++n) t.push(path.data() + n * batch.dim);
    out.values.push_back(t.value());
    out.m_star.push_back(t.m_star());
    if (t.m_star() > 0.0) out.domination_constant = std::max(out.domination_constant, t.value() / t.m_star());
  }
  return out;
}

WeakNormResult weak_norm(const std::vector<double>& samples, double p) {
  if (samples.empty()) throw std::invalid_argument("weak_norm: empty sample");
  if (!(p >= 1.0)) throw std::invalid_argument("weak_norm: p must be >= 1");
  std::vector<double> z(samples.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = std::abs(samples[i]);
  std::sort(z.begin(), z.end());
  WeakNormResult out;
  out.n = z.size();
  const double zmax = z.back();
  if (zmax == 0.0) return out;
  double lower = quantile(z, 0.01);
  if (lower <= 0.0) lower = *std::upper_bound(z.begin(), z.end(), 0.0);
  const double N = static_cast<double>(z.size());

  // Left limits at the sample values v >= lower: v * P(Z >= v)^{1/p}.
  for (std::size_t i = 0; i < z.size();) {
    std::size_t j = i;
    while (j < z.size() && z[j] == z[i]) ++j;
    if (z[i] >= lower) {
      const double tail = (N - static_cast<double>(i)) / N;
      const double v = z[i] * std::pow(tail, 1.0 / p);
      if (v > out.estimate) {
        out.estimate = v;
        out.lambda_at_sup = z[i];
        out.tail_at_sup = tail;
      }
    }
    i = j;
  }

  constexpr int kGrid = 64;
  const double ratio = zmax / lower;
  for (int g = 0; g < kGrid; ++g) {
    const double lambda = g == kGrid - 1 ? zmax : lower * std::pow(ratio, static_cast<double>(g) / (kGrid - 1));
    const auto first_ge = std::lower_bound(z.begin(), z.end(), lambda);
    const double tail = static_cast<double>(z.end() - first_ge) / N;
    out.profile.emplace_back(lambda, lambda * std::pow(tail, 1.0 / p));
  }
  return out;
}

double last_decade_variation(const WeakNormResult& w) {
  if (w.profile.empty()) return 0.0;
  const double lmax = w.profile.back().first;
  double run = 0.0, at_decade = 0.0;
  bool seen = false;
  for (const auto& [lambda, v] : w.profile) {
    run = std::max(run, v);
    if (lambda <= lmax / 10.0) at_decade = run, seen = true;
  }
  if (!seen) at_decade = w.profile.front().second;
  return run > 0.0 ? (run - at_decade) / run : 0.0;
}

LimitReport hopf_summary(const std::vector<double>& m1, const std::vector<double>& abs_path_means) {
  LimitReport r;
  r.statistic = "hopf";
  r.sample_size = m1.size();
  const WeakNormResult w = weak_norm(m1, 1.0);
  const MeanSe mean = mean_se(abs_path_means);
  r.estimate = w.estimate;
  const double N = static_cast<double>(m1.size());
  const double q = w.tail_at_sup;
  const double rel_tail = q > 0.0 ? std::sqrt(q * (1.0 - q) / N) / q : 0.0;
  const double rel_mean = mean.mean > 0.0 ? mean.se / mean.mean : 0.0;
  const double rel = std::sqrt(rel_tail * rel_tail + rel_mean * rel_mean);
  r.se = w.estimate * rel_tail;
  r.values["mean_abs"] = mean.mean;
  r.values["mean_abs_se"] = mean.se;
  r.values["relative_se"] = rel;
  r.values["ratio"] = mean.mean > 0.0 ? w.estimate / mean.mean : 0.0;
  r.values["lambda_at_sup"] = w.lambda_at_sup;
  std::vector<double> lambdas, prof;
  for (auto [l, v] : w.profile) lambdas.push_back(l), prof.push_back(v);
  r.curves["lambda"] = lambdas;
  r.curves["profile"] = prof;
  r.pass = w.estimate <= mean.mean * (1.0 + 3.0 * rel);
  return r;
}

LimitReport hopf_check(const PathBatch& batch, std::size_t n_max) {
  check_batch(batch);
  if (n_max == 0 || n_max > batch.n_steps) throw std::invalid_argument("hopf_check: n_max must lie in [1, n_steps]");
  std::vector<double> m1, means;
  const Normalization norm = Normalization::power(1.0);
  auto table = inverse_square_table(norm, n_max);
  for (std::size_t p = 0; p < batch.n_paths; ++p) {
    MaximalTracker t(norm, 1, n_max, table);
    double s = 0.0;
    for (std::size_t n = 0; n < n_max; ++n) {
      const auto x = batch.at(p, n);
      double sq = 0.0;
      for (double v : x) sq += v * v;
      const double a = std::sqrt(sq);
      s += a;
      t.push(&a);
    }
    m1.push_back(t.value());
    means.push_back(s / static_cast<double>(n_max));
  }
  LimitReport r = hopf_summary(m1, means);
  r.n_grid = {static_cast<double>(n_max)};
  return r;
}

double median_se(std::vector<double> values) {
  const std::size_t N = values.size();
  if (N < 2) return 0.0;
  std::sort(values.begin(), values.end());
  const double half = 1.96 * std::sqrt(static_cast<double>(N)) / 2.0;
  const auto lo = static_cast<std::size_t>(std::max(0.0, std::floor(static_cast<double>(N) / 2.0 - half)));
  const auto hi = std::min(N - 1, static_cast<std::size_t>(std::ceil(static_cast<double>(N) / 2.0 + half)));
  return (values[hi] - values[lo]) / (2.0 * 1.96);
}

LimitReport lil_summary(const std::vector<double>& windowed, const std::vector<double>& full,
                        const std::optional<CovarianceOperator>& K) {
  LimitReport r;
  r.statistic = "lil_limsup";
  r.sample_size = windowed.size();
  r.estimate = median(windowed);
  r.se = median_se(windowed);
  r.values["cross_path_max"] = *std::max_element(windowed.begin(), windowed.end());
  r.values["q10"] = quantile(windowed, 0.10);
  r.values["q90"] = quantile(windowed, 0.90);
  r.values["full_range_median"] = median(full);
  r.values["full_range_max"] = *std::max_element(full.begin(), full.end());
  if (K) {
    const double target = dual_ball_sup(*K);
    r.values["target"] = target;
    r.values["ratio"] = target > 0.0 ? r.estimate / target : 0.0;
  }
  r.curves["windowed"] = windowed;
  return r;
}

LimitReport lil_limsup(const PathBatch& batch, double window_fraction, const std::optional<CovarianceOperator>& K) {
  check_batch(batch);
  auto table = inverse_square_table(Normalization::lil(), batch.n_steps);
  std::vector<double> windowed, full;
  unsigned j0 = 0, J = 0;
  for (std::size_t p = 0; p < batch.n_paths; ++p) {
    LilTracker t(batch.dim, batch.n_steps, window_fraction, table);
    for (std::size_t n = 0; n < batch.n_steps; ++n) t.push(batch.at(p, n).data());
    windowed.push_back(t.windowed());
    full.push_back(t.full_range());
    j0 = t.first_exponent();
    J = t.last_exponent();
  }
  LimitReport r = lil_summary(windowed, full, K);
  for (unsigned j = j0; j <= J; ++j) r.n_grid.push_back(std::exp2(j));
  return r;
}

CovarianceEstimate covariance_series(const PathBatch& batch, std::size_t max_lag, const ProcessModel* model) {
  check_batch(batch);
  if (max_lag > batch.n_steps / 8) throw std::invalid_argument("covariance_series: max_lag exceeds n_steps / 8");
  std::vector<double> pooled(CovarianceTracker::sums_size(batch.dim, max_lag), 0.0);
  for (std::size_t p = 0; p < batch.n_paths; ++p) {
    CovarianceTracker t(batch.dim, max_lag, batch.n_steps);
    for (std::size_t n = 0; n < batch.n_steps; ++n) t.push(batch.at(p, n).data());
    const auto s = t.sums();
    for (std::size_t i = 0; i < s.size(); ++i) pooled[i] += s[i];
  }
  CovarianceEstimate est = covariance_from_sums(pooled, batch.dim, max_lag, batch.n_steps, batch.n_paths);
  if (model) est.exact = covariance_series(*model);
  return est;
}

std::optional<CovarianceOperator> covariance_series(const ProcessModel& model) {
  return exact_long_run_covariance(model);
}

LimitReport curve_summary(const std::string& statistic, const std::vector<std::vector<double>>& per_path,
                          const std::vector<std::size_t>& grid) {
  if (per_path.empty()) throw std::invalid_argument("curve_summary: no paths");
  LimitReport r;
  r.statistic = statistic;
  r.sample_size = per_path.size();
  for (auto n : grid) r.n_grid.push_back(static_cast<double>(n));
  std::vector<double> med, q95, q05;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::vector<double> col;
    col.reserve(per_path.size());
    for (const auto& row : per_path) col.push_back(row[g]);
    med.push_back(median(col));
    q95.push_back(quantile(col, 0.95));
    q05.push_back(quantile(col, 0.05));
    if (g + 1 == grid.size()) r.se = median_se(col);
  }
  r.curves["median"] = med;
  r.curves["q95"] = q95;
  r.curves["q05"] = q05;
  r.estimate = med.empty() ? 0.0 : med.back();
  if (!med.empty()) {
    r.values["first_median"] = med.front();
    r.values["last_median"] = med.back();
    r.values["decay_ratio"] = med.front() > 0.0 ? med.back() / med.front() : 0.0;
    r.values["decreasing"] = med.back() < med.front() ? 1.0 : 0.0;
  }
  return r;
}

LimitReport approx_error_curve(const ProcessModel& model, const MartingaleApproximant& approx, const PathBatch& batch,
                               const std::vector<std::size_t>& n_grid) {
  check_batch(batch);
  if (batch.model_hash != approx.model_hash || model_hash(model) != batch.model_hash)
    throw std::invalid_argument("approx_error_curve: batch is not coupled to this approximant");
  if (n_grid.empty() || n_grid.back() > batch.n_steps) throw std::invalid_argument("approx_error_curve: grid exceeds path length");
  std::vector<std::vector<double>> rows;
  std::vector<double> S, M;
  for (std::size_t p = 0; p < batch.n_paths; ++p) {
    coupled_partial_sums(model, approx, batch.master_seed, p, n_grid.back(), S, M);
    ApproxErrorTracker t(batch.dim, n_grid);
    // Feed the differences of the partial sums back as increments.
    std::vector<double> x(batch.dim), d(batch.dim);
    for (std::size_t n = 0; n < n_grid.back(); ++n) {
      for (std::size_t a = 0; a < batch.dim; ++a) {
        x[a] = S[n * batch.dim + a] - (n ? S[(n - 1) * batch.dim + a] : 0.0);
        d[a] = M[n * batch.dim + a] - (n ? M[(n - 1) * batch.dim + a] : 0.0);
      }
      t.push(x.data(), d.data());
    }
    rows.push_back(t.values());
  }
  return curve_summary("approx_error", rows, n_grid);
}

LimitReport mz_decay(const PathBatch& batch, double p, const std::vector<std::size_t>& n_grid) {
  check_batch(batch);
  if (!(p > 1.0 && p < 2.0)) throw std::invalid_argument("mz_decay: p must lie in (1, 2)");
  if (n_grid.empty() || n_grid.back() > batch.n_steps) throw std::invalid_argument("mz_decay: grid exceeds path length");
  std::vector<std::vector<double>> rows;
  for (std::size_t q = 0; q < batch.n_paths; ++q) {
    GridTracker t(Normalization::power(p), batch.dim, n_grid);
    for (std::size_t n = 0; n < n_grid.back(); ++n) t.push(batch.at(q, n).data());
    rows.push_back(t.values());
  }
  return curve_summary("mz_decay", rows, n_grid);
}

FreedmanReport freedman_pinelis_check(const ProcessModel& model, std::size_t n, std::size_t n_paths, std::uint64_t seed,
                                      const std::vector<std::pair<double, double>>& grid, double D, unsigned workers) {
  const auto* m = std::get_if<MartingaleDifference>(&model);
  if (!m) throw std::invalid_argument("freedman_pinelis_check: martingale difference model required");
  validate(model);
  if (n == 0 || n_paths == 0) throw std::invalid_argument("freedman_pinelis_check: n and n_paths must be >= 1");
  if (!(D >= 1.0)) throw std::invalid_argument("freedman_pinelis_check: D must be >= 1");
  const double g_bound = m->g == MartingaleDifference::Map::identity ? m->innovation.bound() : 1.0;
  const double c = std::sqrt(static_cast<double>(m->innovation.dim)) * g_bound * (1.0 + std::abs(m->h_scale));
  if (!std::isfinite(c)) throw std::invalid_argument("freedman_pinelis_check: unbounded model (|d| has no a.s. bound)");
  const double eg2 = m->g == MartingaleDifference::Map::identity ? m->innovation.variance() : 1.0;
  for (auto [x, y] : grid)
    if (!(x > 0.0 && y > 0.0)) throw std::invalid_argument("freedman_pinelis_check: x and y must be positive");

  const std::size_t dim = m->innovation.dim, q = m->q;
  const InnovationWindow w = innovation_window(model);
  std::vector<std::uint64_t> counts(grid.size(), 0);
  std::atomic<std::size_t> next{0};
  std::mutex merge_lock;
  auto work = [&] {
    std::vector<std::uint64_t> local(grid.size(), 0);
    std::vector<double> out(dim), S(dim);
    for (std::size_t path = next++; path < n_paths; path = next++) {
      const auto seq = innovation_sequence(model, seed, path, n + q);
      std::fill(S.begin(), S.end(), 0.0);
      double max_sq = 0.0, V = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const std::span<const double> window(seq.data() + i * dim, w.length() * dim);
        eval_window(model, window, out);
        double sq = 0.0;
        for (std::size_t a = 0; a < dim; ++a) {
          S[a] += out[a];
          sq += S[a] * S[a];
          double h = 1.0;
          if (q > 0) {
            double s = 0.0;
            for (std::size_t j = 0; j < q; ++j) s += window[j * dim + a];
            h = 1.0 + m->h_scale * std::tanh(s);
          }
          V += h * h * eg2;
        }
        max_sq = std::max(max_sq, sq);
      }
      const double max_abs = std::sqrt(max_sq);
      for (std::size_t g = 0; g < grid.size(); ++g)
        if (max_abs > grid[g].first && V <= grid[g].second / (D * D)) ++local[g];
    }
    std::lock_guard lock(merge_lock);
    for (std::size_t g = 0; g < grid.size(); ++g) counts[g] += local[g];
  };
  workers = std::max(1u, workers);
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < workers; ++i) pool.emplace_back(work);
  }

  FreedmanReport report;
  report.c = c;
  report.D = D;
  report.n = n;
  report.n_paths = n_paths;
  report.pass = true;
  const double N = static_cast<double>(n_paths);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    FreedmanPoint pt;
    pt.x = grid[g].first;
    pt.y = grid[g].second;
    pt.empirical = static_cast<double>(counts[g]) / N;
    pt.se = std::sqrt(pt.empirical * (1.0 - pt.empirical) / N);
    pt.bound = 2.0 * std::exp(-(pt.y / (c * c)) * bennett_h(pt.x * c / pt.y));
    pt.pass = pt.empirical <= pt.bound + 3.0 * pt.se;
    report.pass = report.pass && pt.pass;
    report.points.push_back(pt);
  }
  return report;
}

CltReport clt_diagnostics(const std::vector<Eigen::VectorXd>& samples, const CovarianceOperator& K,
                          const std::vector<Eigen::VectorXd>& directions, double alpha) {
  if (samples.size() < 2) throw std::invalid_argument("clt_diagnostics: need at least two paths");
  CltReport report;
  report.alpha = alpha;
  std::size_t active = 0;
  for (const auto& raw : directions) {
    if (raw.size() != static_cast<Eigen::Index>(K.dim())) throw std::invalid_argument("clt_diagnostics: direction dimension mismatch");
    CltDirection dir;
    dir.u = raw.normalized();
    dir.variance_model = K.quadratic(dir.u);
    if (dir.variance_model < 1e-12) {
      dir.skipped = true;
      report.note += "degenerate direction skipped; ";
    } else {
      ++active;
    }
    report.directions.push_back(dir);
  }
  report.per_test_level = sidak_level(alpha, active);
  report.pass = active > 0;
  for (auto& dir : report.directions) {
    if (dir.skipped) continue;
    std::vector<double> z, proj;
    z.reserve(samples.size());
    for (const auto& s : samples) {
      const double v = dir.u.dot(s);
      proj.push_back(v);
      z.push_back(v / std::sqrt(dir.variance_model));
    }
    const MeanSe ms = mean_se(proj);
    double ss = 0.0;
    for (double v : proj) ss += (v - ms.mean) * (v - ms.mean);
    dir.variance_sample = ss / static_cast<double>(proj.size() - 1);
    dir.ks = ks_one_sample(z, normal_cdf);
    report.pass = report.pass && dir.ks.p_value >= report.per_test_level;
  }
  return report;
}

std::vector<Eigen::VectorXd> planar_directions(std::size_t dim, std::size_t m) {
  std::vector<Eigen::VectorXd> out;
  if (dim == 1) {
    out.push_back(Eigen::VectorXd::Ones(1));
    return out;
  }
  for (std::size_t k = 0; k < m; ++k) {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
    const double angle = static_cast<double>(k) * std::numbers::pi / static_cast<double>(m);
    u(0) = std::cos(angle);
    u(1) = std::sin(angle);
    out.push_back(u);
  }
  return out;
}

}  // namespace lilab
