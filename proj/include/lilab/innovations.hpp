#pragma once

#include <cstddef>

#include "lilab/rng.hpp"

namespace lilab {

/// Law of one i.i.d. innovation coordinate. Every law is centered and has
/// finite variance.
struct InnovationSpec {
  enum class Law { rademacher, gaussian, uniform, centered_pareto };

  Law law = Law::rademacher;
  double sigma = 1.0;   // gaussian
  double lower = -1.0;  // uniform
  double upper = 1.0;   // uniform
  double alpha = 3.0;   // centered_pareto, tail index > 2
  std::size_t dim = 1;

  static InnovationSpec rademacher(std::size_t dim = 1);
  static InnovationSpec gaussian(double sigma, std::size_t dim = 1);
  static InnovationSpec uniform(double lower, double upper, std::size_t dim = 1);
  static InnovationSpec centered_pareto(double alpha, std::size_t dim = 1);

  /// Throws std::invalid_argument when a parameter breaks centering or the
  /// finite-variance requirement.
  void validate() const;

  double variance() const;
  bool symmetric() const noexcept { return law != Law::centered_pareto; }
  /// Almost-sure bound on |xi|, or +inf.
  double bound() const;

  double sample(StreamRng& rng) const;

  bool operator==(const InnovationSpec&) const = default;
};

}  // namespace lilab
