#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lilab/engine.hpp"
#include "lilab/model_io.hpp"
#include "lilab/normspace.hpp"
#include "lilab/operators.hpp"

namespace lilab {

/// One requested condition check.
///   {"condition": "hannan", "p": 2}
///   {"condition": "hanbis", "horizon": 64}
///   {"condition": "markov", "horizon": 256}        sum ||P^n f|| / sqrt(n)
///   {"condition": "normal", "horizon": 256}        sum ||P^n f||^2
///   {"condition": "conddynsys", "horizon": 64}
///   {"condition": "condDDM", "p": 2, "horizon": 256}
///   {"condition": "fourier_tail", "beta": 3, "C": 1, "m_grid": [1, 2, 4]}
struct CheckSpec {
  std::string condition;
  double p = 2.0;
  std::size_t horizon = 256;
  double epsilon = 1e-8;
  double beta = 3.0;
  double C = 1.0;
  std::vector<double> m_grid;
};

/// Experiment document (JSON). Keys:
///   name, model, space, statistics, checks, n_grid, n_paths, seed,
///   memory_budget, workers, strict_sums, block_paths, output
/// Unknown keys are rejected.
struct ExperimentConfig {
  std::string name = "experiment";
  ProcessModel model;
  std::optional<NormSpec> space;
  std::vector<StatisticSpec> statistics;
  std::vector<CheckSpec> checks;
  std::vector<std::size_t> n_grid;
  std::size_t n_paths = 1;
  std::uint64_t seed = 0;
  std::size_t memory_budget = kDefaultMemoryBudget;
  unsigned workers = 1;
  bool strict_sums = false;
  std::size_t block_paths = 64;
  std::string output = "out";
};

Json norm_spec_to_json(const NormSpec& space);
NormSpec norm_spec_from_json(const Json& j);
Json statistic_to_json(const StatisticSpec& s);
StatisticSpec statistic_from_json(const Json& j);
Json check_to_json(const CheckSpec& c);
CheckSpec check_from_json(const Json& j);

/// Throws ConfigError on schema violations.
ExperimentConfig config_from_json(const Json& j);
Json config_to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const std::filesystem::path& file);
/// FNV-1a of the canonical serialization.
std::uint64_t config_hash(const ExperimentConfig& c);

/// Engine plan for the config; builds the martingale approximant when an
/// approx_error statistic asks for one.
ExperimentPlan make_plan(const ExperimentConfig& c);

ConditionReport run_check(const ProcessModel& model, const CheckSpec& check);

}  // namespace lilab
