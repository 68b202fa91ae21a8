#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lilab/filtration.hpp"
#include "lilab/limits.hpp"
#include "lilab/processes.hpp"

namespace lilab {

struct StatisticSpec {
  enum class Kind {
    maximal,        // M_p (p in [1,2)) or M_2 (lil) and the blockwise M*
    hopf,           // M_1 of |X| against E|X|
    lil,            // windowed limsup of |S_n| / sqrt(2 n L(L n))
    covariance,     // pooled lag sums for the long-run covariance
    mz,             // |S_n| / n^{1/p} on the grid
    normalized,     // |S_n| / sqrt(n L(L n)) on the grid (plot data)
    approx_error,   // |S_n - M_n| / sqrt(n L(L n)) on the grid
    endpoint,       // S_N / sqrt(N) per path
  };
  Kind kind = Kind::maximal;
  std::string id;              // unique within a plan; defaults to the kind name
  double p = 2.0;              // maximal: 2 means lil; mz: in (1,2)
  double weak_p = 0.0;         // exponent of the reported weak norm; 0 = p, or 1.5 for lil
  std::size_t n_max = 0;       // 0 = path length
  double window_fraction = 0.75;
  std::size_t max_lag = 16;
  std::vector<std::size_t> grid;  // empty = plan n_grid
};

const char* to_string(StatisticSpec::Kind k);
StatisticSpec::Kind statistic_kind_from_string(const std::string& s);

struct ExperimentPlan {
  ProcessModel model;
  std::vector<StatisticSpec> statistics;
  std::vector<std::size_t> n_grid;  // strictly increasing; path length = n_grid.back()
  std::size_t n_paths = 1;
  std::uint64_t master_seed = 0;
  std::size_t memory_budget = kDefaultMemoryBudget;
  unsigned workers = 1;
  bool strict_sums = false;
  std::size_t block_paths = 64;
  std::optional<MartingaleApproximant> approximant;
  /// Receives one JSON progress line per completed block; empty = silent.
  std::function<void(const std::string&)> progress;

  std::size_t n_steps() const { return n_grid.empty() ? 0 : n_grid.back(); }
};

/// Statistics with defaults filled in (ids, n_max, grids, weak_p).
std::vector<StatisticSpec> resolved_statistics(const ExperimentPlan& plan);

/// Throws std::invalid_argument on an invalid plan.
void validate(const ExperimentPlan& plan);

inline constexpr std::size_t kHistogramBins = 64;
inline constexpr std::size_t kReservoirSize = 4096;

/// 64 logarithmic bins on [lo, hi) plus zero, underflow and overflow counts.
struct LogHistogram {
  double lo = 1e-6;
  double hi = 1e6;
  std::vector<std::uint64_t> bins = std::vector<std::uint64_t>(kHistogramBins, 0);
  std::uint64_t zero = 0, underflow = 0, overflow = 0;

  void add(double x);
  std::uint64_t total() const;
  double lower_edge(std::size_t b) const;
  double upper_edge(std::size_t b) const;
  bool operator==(const LogHistogram&) const = default;
};

/// Lower estimate of the weak L^{p,inf} norm from bin edges: max over bins of
/// lower_edge * P(Z >= lower_edge)^{1/p}.
double weak_norm_from_histogram(const LogHistogram& h, double p);

/// Bottom-k sample keyed by a hash of (seed, path): the kept set depends only
/// on the paths seen, never on the merge order.
struct Reservoir {
  struct Entry {
    std::uint64_t key = 0;
    std::uint64_t path = 0;
    double value = 0.0;
    bool operator==(const Entry&) const = default;
  };
  std::size_t capacity = kReservoirSize;
  std::vector<Entry> entries;  // sorted by key

  void add(std::uint64_t seed, std::uint64_t path, double value);
  std::vector<double> values() const;
  bool operator==(const Reservoir&) const = default;
};

struct Accumulator {
  std::vector<std::string> schema;  // statistic ids; empty = the neutral element
  std::map<std::string, std::uint64_t> counts;
  std::map<std::string, double> maxima;
  std::map<std::string, std::vector<double>> sums;
  std::map<std::string, LogHistogram> histograms;
  std::map<std::string, Reservoir> reservoirs;
  /// Per-path rows keyed by statistic id then path index.
  std::map<std::string, std::map<std::uint64_t, std::vector<double>>> tables;

  bool empty() const { return schema.empty(); }
};

/// Counts add, maxima take the max, histograms add, reservoirs keep the k
/// smallest keys, tables take the union, sums add. Throws on schema mismatch
/// or when both sides hold the same path.
Accumulator merge(const Accumulator& a, const Accumulator& b);
void merge_into(Accumulator& into, const Accumulator& from);

struct ReportBundle {
  std::string model_kind;
  std::uint64_t model_hash = 0;
  std::uint64_t master_seed = 0;
  std::size_t n_paths = 0;
  std::size_t n_steps = 0;
  std::vector<LimitReport> reports;
  std::map<std::string, CovarianceEstimate> covariances;
  Accumulator accumulator;
  double elapsed_seconds = 0.0;
};

/// Per-path column names of a statistic's table.
std::vector<std::string> table_columns(const StatisticSpec& s, std::size_t dim, std::size_t grid_size);

/// Bytes needed by one worker processing one block.
std::size_t block_bytes(const ExperimentPlan& plan);

ReportBundle run(const ExperimentPlan& plan);

}  // namespace lilab
