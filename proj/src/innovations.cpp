#include "lilab/innovations.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace lilab {

InnovationSpec InnovationSpec::rademacher(std::size_t dim) {
  InnovationSpec s;
  s.law = Law::rademacher;
  s.dim = dim;
  return s;
}

InnovationSpec InnovationSpec::gaussian(double sigma, std::size_t dim) {
  InnovationSpec s;
  s.law = Law::gaussian;
  s.sigma = sigma;
  s.dim = dim;
  s.validate();
  return s;
}

InnovationSpec InnovationSpec::uniform(double lower, double upper, std::size_t dim) {
  InnovationSpec s;
  s.law = Law::uniform;
  s.lower = lower;
  s.upper = upper;
  s.dim = dim;
  s.validate();
  return s;
}

InnovationSpec InnovationSpec::centered_pareto(double alpha, std::size_t dim) {
  InnovationSpec s;
  s.law = Law::centered_pareto;
  s.alpha = alpha;
  s.dim = dim;
  s.validate();
  return s;
}

void InnovationSpec::validate() const {
  if (dim == 0) throw std::invalid_argument("innovation dim must be >= 1");
  switch (law) {
    case Law::rademacher:
      break;
    case Law::gaussian:
      if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw std::invalid_argument("gaussian innovation: sigma must be positive");
      break;
    case Law::uniform:
      if (!(upper > lower)) throw std::invalid_argument("uniform innovation: need lower < upper");
      if (std::abs(lower + upper) > 1e-12 * (upper - lower))
        throw std::invalid_argument("uniform innovation: law must be centered (lower = -upper)");
      break;
    case Law::centered_pareto:
      if (!(alpha > 2.0))
        throw std::invalid_argument("centered_pareto innovation: alpha must exceed 2");
      break;
  }
}

double InnovationSpec::variance() const {
  switch (law) {
    case Law::rademacher:
      return 1.0;
    case Law::gaussian:
      return sigma * sigma;
    case Law::uniform:
      return (upper - lower) * (upper - lower) / 12.0;
    case Law::centered_pareto:
      // Pareto(x_m = 1, alpha)
      return alpha / ((alpha - 1.0) * (alpha - 1.0) * (alpha - 2.0));
  }
  return 0.0;
}

double InnovationSpec::bound() const {
  switch (law) {
    case Law::rademacher:
      return 1.0;
    case Law::uniform:
      return std::max(std::abs(lower), std::abs(upper));
    default:
      return std::numeric_limits<double>::infinity();
  }
}

double InnovationSpec::sample(StreamRng& rng) const {
  switch (law) {
    case Law::rademacher:
      return rng.rademacher();
    case Law::gaussian:
      return sigma * rng.normal();
    case Law::uniform:
      return lower + (upper - lower) * rng.uniform();
    case Law::centered_pareto:
      return std::pow(rng.uniform_open(), -1.0 / alpha) - alpha / (alpha - 1.0);
  }
  return 0.0;
}

}  // namespace lilab
