#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace lilab {

using Frequency = std::vector<std::int64_t>;
using Coefficient = std::vector<std::complex<double>>;

/// Real-valued trigonometric polynomial on the d-torus with values in R^dim:
///   f(x) = sum_k c_k exp(2 pi i <k, x>),  c_{-k} = conj(c_k),  c_0 = 0.
/// Points of the torus are 64-bit fixed-point fractions, so <k, x> mod 1 is
/// computed exactly in wrapping integer arithmetic.
class FourierObservable {
 public:
  FourierObservable(std::size_t torus_dim, std::size_t out_dim);

  /// Builds an observable from (k, c_k) pairs. Missing partners -k are filled
  /// with conj(c_k); partners that are present must match to 1e-14.
  static FourierObservable from_terms(std::size_t torus_dim, std::size_t out_dim,
                                      const std::vector<std::pair<Frequency, Coefficient>>& terms);

  std::size_t torus_dim() const noexcept { return torus_dim_; }
  std::size_t out_dim() const noexcept { return out_dim_; }
  const std::map<Frequency, Coefficient>& terms() const noexcept { return terms_; }
  bool empty() const noexcept { return terms_.empty(); }

  /// Coefficient at k (zero when k is outside the support).
  Coefficient coefficient(const Frequency& k) const;

  /// sum_k |c_k|^2 = ||f||_2^2 under Lebesgue measure.
  double l2_norm_squared() const;
  /// Largest Euclidean |k| in the support (0 for the zero observable).
  double max_frequency_norm() const;

  /// f(x); `out` must have out_dim entries.
  void evaluate(std::span<const std::uint64_t> point, std::span<double> out) const;
  /// f at a real point of [0,1)^d (quadrature and tests).
  void evaluate_real(std::span<const double> point, std::span<double> out) const;

  /// Checks Hermitian symmetry and zero mean; throws std::invalid_argument.
  void validate() const;

  bool operator==(const FourierObservable&) const = default;

 private:
  void rebuild_half();

  std::size_t torus_dim_;
  std::size_t out_dim_;
  std::map<Frequency, Coefficient> terms_;
  // Terms with k > 0 in lexicographic sign order; f = 2 Re sum_half c_k e_k.
  std::vector<std::pair<Frequency, Coefficient>> half_;
};

Frequency negate(const Frequency& k);
/// True when the first nonzero component of k is positive.
bool is_positive(const Frequency& k);

}  // namespace lilab
