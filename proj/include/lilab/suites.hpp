#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lilab/fourier.hpp"
#include "lilab/normspace.hpp"
#include "lilab/processes.hpp"

namespace lilab {

/// Models used by the acceptance criteria and the shipped configs.
namespace shipped {
/// P = [[1-a, a], [a, 1-a]], f = (1, -1).
ProcessModel two_state_chain(double a);
/// Deterministic 2-cycle, f = (1, -1).
ProcessModel periodic_chain();
/// Cyclic shift on 3 states.
Eigen::MatrixXd circulant3();
/// Cat map [[2,1],[1,1]] with f = (cos 2 pi x1, cos 2 pi x2 + cos 2 pi (x1 + x2)).
ProcessModel cat_map();
/// Exact long-run covariance of cat_map(): diag(1/2, 2).
Eigen::MatrixXd cat_map_covariance();
/// c_{2^j} = 2^{-j} for j = 0..10 on the circle.
FourierObservable dyadic_observable();
/// ||K^n f||_2^2 for dyadic_observable(): (8/3)(4^{-n} - 4^{-11}) for n <= 10, else 0.
double dyadic_norm_squared(std::size_t n);
/// Weighted l^1.5 space on R^3 with weights (1, 2, 0.5); certified with D = 2.
NormSpec weighted_space();
}  // namespace shipped

struct CriterionResult {
  std::string id;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct SuiteOptions {
  unsigned workers = 1;
  /// Replaces the fixed per-criterion seeds (seed + criterion number).
  std::optional<std::uint64_t> seed;
  /// Scratch directory for criteria that write files.
  std::filesystem::path scratch = std::filesystem::temp_directory_path() / "lilab-suite";
  /// Called after each criterion finishes.
  std::function<void(const CriterionResult&)> on_result;
};

/// trivial, lil-scalar, ac-1 .. ac-12, all
const std::vector<std::string>& suite_names();
bool suite_exists(const std::string& name);
/// Throws std::invalid_argument for an unknown suite.
std::vector<CriterionResult> run_suite(const std::string& name, const SuiteOptions& options = {});

}  // namespace lilab
