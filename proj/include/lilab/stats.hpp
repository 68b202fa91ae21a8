#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace lilab {

double normal_cdf(double x);

/// P(K > lambda) for the Kolmogorov distribution.
double kolmogorov_sf(double lambda);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

/// One-sample KS against a continuous cdf. Asymptotic p-value with the
/// Stephens small-sample correction.
KsResult ks_one_sample(std::vector<double> sample, const std::function<double(double)>& cdf);
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Per-test level giving family-wise level alpha over m independent tests.
double sidak_level(double alpha, std::size_t m);

/// Upper tail of the chi-square distribution.
double chi2_sf(double x, double dof);

/// Linear-interpolation quantile (type 7) of an unsorted sample.
double quantile(std::vector<double> values, double q);
double median(std::vector<double> values);

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};
MeanSe mean_se(std::span<const double> values);

}  // namespace lilab
