#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "lilab/fourier.hpp"
#include "lilab/innovations.hpp"
#include "lilab/markov.hpp"
#include "lilab/normspace.hpp"

namespace lilab {

/// Modulus of continuity in the class Lambda: non-decreasing, continuous,
/// bounded by 1, phi(0) = 0, and either phi^2 concave or phi = min(1, x^alpha).
struct ModulusSpec {
  enum class Kind { concave_sqrt, power, concave_custom };

  Kind kind = Kind::power;
  double alpha = 1.0;
  /// concave_custom: nodes (x_i, phi(x_i)) with x_0 = 0, phi(x_0) = 0.
  /// phi^2 is interpolated linearly between nodes and held constant after
  /// the last one, so concavity of phi^2 reduces to decreasing slopes.
  std::vector<std::pair<double, double>> table;

  static ModulusSpec concave_sqrt() { return {Kind::concave_sqrt, 0.5, {}}; }
  static ModulusSpec power(double alpha) { return {Kind::power, alpha, {}}; }
  static ModulusSpec concave_custom(std::vector<std::pair<double, double>> table);

  void validate() const;
  bool operator==(const ModulusSpec&) const = default;
};

double phi_modulus_eval(const ModulusSpec& phi, double x);

/// d_n = g(xi_n) * h(xi_{n-1}, ..., xi_{n-q}) coordinatewise, with
/// h = 1 + h_scale * tanh(xi_{n-1} + ... + xi_{n-q}) (h = 1 when q = 0).
struct MartingaleDifference {
  enum class Map { identity, sign };

  InnovationSpec innovation;
  Map g = Map::identity;
  std::size_t q = 0;
  double h_scale = 0.0;

  bool operator==(const MartingaleDifference&) const = default;
};

/// X_n = sum_{i = first_index}^{first_index + A.size() - 1} A_i xi_{n-i}.
struct LinearProcess {
  InnovationSpec innovation;
  int first_index = 0;
  std::vector<Eigen::MatrixXd> coeffs;  // each out_dim x innovation.dim

  std::size_t out_dim() const { return static_cast<std::size_t>(coeffs.front().rows()); }
  int last_index() const { return first_index + static_cast<int>(coeffs.size()) - 1; }
  bool operator==(const LinearProcess& o) const;
};

/// X_n = f(Y_n) - E f(Y_n) with Y_n = sum_{k=0}^{K} a_k xi_{n-k} (scalar).
struct FunctionOfLinear {
  enum class Function { abs, cos, square, signed_sqrt };

  InnovationSpec innovation;
  std::vector<double> a;
  Function f = Function::abs;
  ModulusSpec modulus;
  double growth_r = 1.0;
  double centering = 0.0;  // E f(Y_0), frozen at construction

  bool operator==(const FunctionOfLinear&) const = default;
};

/// X_n = f(W_n) for the stationary chain (W_n) with kernel P and law m;
/// f is stored centered under m.
struct MarkovChainFn {
  MarkovKernel kernel;
  Eigen::MatrixXd f;  // states x dim

  std::size_t dim() const { return static_cast<std::size_t>(f.cols()); }
  bool operator==(const MarkovChainFn& o) const;
};

/// X_n = f(theta^n x), theta x = 2x mod 1, x uniform on [0,1).
struct DoublingMap {
  FourierObservable observable;
  bool operator==(const DoublingMap&) const = default;
};

/// X_n = f(M^n x mod 1) on the d-torus, M unimodular and hyperbolic-ergodic.
struct TorusAutomorphism {
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> M;
  FourierObservable observable;
  bool operator==(const TorusAutomorphism& o) const;
};

using ProcessModel = std::variant<MartingaleDifference, LinearProcess, FunctionOfLinear,
                                  MarkovChainFn, DoublingMap, TorusAutomorphism>;

// Model builders; each validates its result.
ProcessModel make_martingale_difference(InnovationSpec innovation,
                                        MartingaleDifference::Map g = MartingaleDifference::Map::identity,
                                        std::size_t q = 0, double h_scale = 0.0);
ProcessModel make_linear(InnovationSpec innovation, std::vector<Eigen::MatrixXd> coeffs,
                         int first_index = 0);
/// Scalar coefficients a_i applied as a_i * I on every innovation coordinate.
ProcessModel make_linear_scalar(InnovationSpec innovation, const std::vector<double>& a,
                                int first_index = 0);
/// Estimates the centering constant by Monte Carlo (10^7 samples, fixed
/// oracle seed) unless `centering` is given.
ProcessModel make_function_of_linear(InnovationSpec innovation, std::vector<double> a,
                                     FunctionOfLinear::Function f,
                                     std::optional<ModulusSpec> modulus = std::nullopt,
                                     std::optional<double> growth_r = std::nullopt,
                                     std::optional<double> centering = std::nullopt);
ProcessModel make_markov_chain(const Eigen::MatrixXd& P, const Eigen::MatrixXd& f,
                               std::optional<Eigen::VectorXd> m = std::nullopt);
ProcessModel make_doubling_map(FourierObservable observable);
ProcessModel make_torus_automorphism(Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> M,
                                     FourierObservable observable);

/// Throws std::invalid_argument when a model invariant fails.
void validate(const ProcessModel& model);
std::size_t model_dim(const ProcessModel& model);
std::string model_kind(const ProcessModel& model);

/// Natural modulus and growth exponent for a FunctionOfLinear map.
ModulusSpec default_modulus(FunctionOfLinear::Function f);
double default_growth(FunctionOfLinear::Function f);
double apply_function(FunctionOfLinear::Function f, double y);

/// Martingale increment attached to a model, evaluated on the same driving
/// randomness as the path:
///  - martingale differences: d_n = X_n;
///  - linear processes:       d_n = B xi_n with B = sum_i A_i;
///  - Markov chains:          d_n = h(W_n) - (P h)(W_{n-1}) with f = h - P h.
struct Coupling {
  enum class Kind { identity, linear, markov };
  Kind kind = Kind::identity;
  Eigen::MatrixXd B;        // linear
  Eigen::MatrixXd h;        // markov, states x dim
  Eigen::MatrixXd Ph;       // markov
};

/// Streaming generator for one path. Path p of a batch depends only on
/// (model, master_seed, p).
class PathStream {
 public:
  PathStream(const ProcessModel& model, std::uint64_t master_seed, std::uint64_t path,
             const Coupling* coupling = nullptr);
  ~PathStream();
  PathStream(PathStream&&) noexcept;
  PathStream& operator=(PathStream&&) noexcept;

  std::size_t dim() const noexcept;
  /// Produces the next x.size()/dim steps. When `d` is non-empty it receives
  /// the coupled martingale increments (requires a coupling).
  void fill(std::span<double> x, std::span<double> d = {});

  class Impl;

 private:
  std::unique_ptr<Impl> impl_;
  bool coupled_ = false;
};

/// Time window of innovations that X_n depends on: [n - past, n + future].
struct InnovationWindow {
  std::size_t past = 0;
  std::size_t future = 0;
  std::size_t length() const { return past + future + 1; }
};

/// Defined for innovation-driven models (martingale differences, linear
/// processes, functions of linear processes).
bool innovation_driven(const ProcessModel& model);
InnovationWindow innovation_window(const ProcessModel& model);
const InnovationSpec& innovation_of(const ProcessModel& model);
/// X_n from its innovation window (chronological, length()*innovation.dim).
void eval_window(const ProcessModel& model, std::span<const double> window, std::span<double> out);
/// The first `count` innovations of path p in time order, starting at time
/// -window.past; coordinate-interleaved.
std::vector<double> innovation_sequence(const ProcessModel& model, std::uint64_t master_seed,
                                        std::uint64_t path, std::size_t count);

/// Materialized batch of paths, path-major: values[(p * n_steps + n) * dim + a].
struct PathBatch {
  std::string model_kind;
  std::uint64_t model_hash = 0;
  std::size_t n_steps = 0;
  std::size_t n_paths = 0;
  std::uint64_t master_seed = 0;
  std::size_t dim = 1;
  std::vector<double> values;

  std::span<const double> path(std::size_t p) const {
    return {values.data() + p * n_steps * dim, n_steps * dim};
  }
  std::span<const double> at(std::size_t p, std::size_t n) const {
    return {values.data() + (p * n_steps + n) * dim, dim};
  }
};

inline constexpr std::size_t kDefaultMemoryBudget = std::size_t{1} << 30;

/// Simulates n_paths paths of n_steps each. Throws std::length_error when the
/// batch does not fit the memory budget; use PathStream (or the engine) then.
PathBatch simulate(const ProcessModel& model, std::size_t n_steps, std::size_t n_paths,
                   std::uint64_t master_seed, std::size_t memory_budget = kDefaultMemoryBudget,
                   unsigned workers = 1);

/// Var(X_0) in closed form, or nullopt when unavailable.
std::optional<CovarianceOperator> exact_variance(const ProcessModel& model);
/// sum_m Cov(X_0, X_m) in closed form, or nullopt when unavailable.
std::optional<CovarianceOperator> exact_long_run_covariance(const ProcessModel& model);

/// Columnar binary cache. Layout (little endian):
///   "LILABPB1" | u64 model_hash | u64 seed | u64 n_steps | u64 n_paths | u64 dim
///   then for each coordinate a, for each path p: n_steps doubles.
void export_columnar(const PathBatch& batch, const std::filesystem::path& file);
PathBatch import_columnar(const std::filesystem::path& file);

}  // namespace lilab
