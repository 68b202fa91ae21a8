#include "lilab/fourier.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace lilab {

Frequency negate(const Frequency& k) {
  Frequency out(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) out[i] = -k[i];
  return out;
}

bool is_positive(const Frequency& k) {
  for (auto v : k) {
    if (v != 0) return v > 0;
  }
  return false;
}

FourierObservable::FourierObservable(std::size_t torus_dim, std::size_t out_dim)
    : torus_dim_(torus_dim), out_dim_(out_dim) {
  if (torus_dim == 0 || out_dim == 0)
    throw std::invalid_argument("FourierObservable: dimensions must be >= 1");
}

FourierObservable FourierObservable::from_terms(
    std::size_t torus_dim, std::size_t out_dim,
    const std::vector<std::pair<Frequency, Coefficient>>& terms) {
  FourierObservable obs(torus_dim, out_dim);
  for (const auto& [k, c] : terms) {
    if (k.size() != torus_dim) throw std::invalid_argument("FourierObservable: frequency dimension mismatch");
    if (c.size() != out_dim) throw std::invalid_argument("FourierObservable: coefficient dimension mismatch");
    bool zero_coeff = true;
    for (auto z : c) zero_coeff = zero_coeff && z == std::complex<double>{};
    if (!is_positive(k) && !is_positive(negate(k))) {
      if (!zero_coeff) throw std::invalid_argument("FourierObservable: c_0 must vanish");
      continue;
    }
    if (zero_coeff) continue;
    obs.terms_[k] = c;
  }
  // Hermitian completion.
  std::vector<std::pair<Frequency, Coefficient>> missing;
  for (const auto& [k, c] : obs.terms_) {
    const Frequency nk = negate(k);
    auto it = obs.terms_.find(nk);
    Coefficient conj_c(c.size());
    for (std::size_t a = 0; a < c.size(); ++a) conj_c[a] = std::conj(c[a]);
    if (it == obs.terms_.end()) {
      missing.emplace_back(nk, conj_c);
    }
  }
  for (auto& [k, c] : missing) obs.terms_[k] = c;
  obs.validate();
  obs.rebuild_half();
  return obs;
}

Coefficient FourierObservable::coefficient(const Frequency& k) const {
  auto it = terms_.find(k);
  if (it == terms_.end()) return Coefficient(out_dim_);
  return it->second;
}

double FourierObservable::l2_norm_squared() const {
  double sum = 0.0;
  for (const auto& [k, c] : terms_) {
    for (auto z : c) sum += std::norm(z);
  }
  return sum;
}

double FourierObservable::max_frequency_norm() const {
  double best = 0.0;
  for (const auto& [k, c] : terms_) {
    double s = 0.0;
    for (auto v : k) s += static_cast<double>(v) * static_cast<double>(v);
    best = std::max(best, std::sqrt(s));
  }
  return best;
}

void FourierObservable::validate() const {
  for (const auto& [k, c] : terms_) {
    if (k.size() != torus_dim_ || c.size() != out_dim_)
      throw std::invalid_argument("FourierObservable: dimension mismatch");
    if (!is_positive(k) && !is_positive(negate(k)))
      throw std::invalid_argument("FourierObservable: c_0 must vanish");
    auto it = terms_.find(negate(k));
    if (it == terms_.end()) throw std::invalid_argument("FourierObservable: missing conjugate partner");
    for (std::size_t a = 0; a < out_dim_; ++a) {
      const auto expected = std::conj(c[a]);
      const double scale = std::max(1.0, std::abs(expected));
      if (std::abs(it->second[a] - expected) > 1e-14 * scale)
        throw std::invalid_argument("FourierObservable: coefficients are not Hermitian symmetric");
    }
  }
}

void FourierObservable::rebuild_half() {
  half_.clear();
  for (const auto& [k, c] : terms_) {
    if (is_positive(k)) half_.emplace_back(k, c);
  }
}

void FourierObservable::evaluate(std::span<const std::uint64_t> point, std::span<double> out) const {
  for (std::size_t a = 0; a < out_dim_; ++a) out[a] = 0.0;
  for (const auto& [k, c] : half_) {
    std::uint64_t phase = 0;
    for (std::size_t j = 0; j < torus_dim_; ++j) phase += static_cast<std::uint64_t>(k[j]) * point[j];
    const double angle = 2.0 * std::numbers::pi * (static_cast<double>(phase >> 11) * 0x1.0p-53);
    const double cs = std::cos(angle), sn = std::sin(angle);
    for (std::size_t a = 0; a < out_dim_; ++a)
      out[a] += 2.0 * (c[a].real() * cs - c[a].imag() * sn);
  }
}

void FourierObservable::evaluate_real(std::span<const double> point, std::span<double> out) const {
  for (std::size_t a = 0; a < out_dim_; ++a) out[a] = 0.0;
  for (const auto& [k, c] : half_) {
    double phase = 0.0;
    for (std::size_t j = 0; j < torus_dim_; ++j) phase += static_cast<double>(k[j]) * point[j];
    const double angle = 2.0 * std::numbers::pi * phase;
    const double cs = std::cos(angle), sn = std::sin(angle);
    for (std::size_t a = 0; a < out_dim_; ++a)
      out[a] += 2.0 * (c[a].real() * cs - c[a].imag() * sn);
  }
}

}  // namespace lilab
