#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lilab/config.hpp"
#include "lilab/engine.hpp"
#include "lilab/operators.hpp"

namespace lilab {

inline constexpr const char* kVersion = "0.1.0";

/// Shortest round-trip decimal form ('.' separator).
std::string format_double(double v);

/// Columns: condition, n, term, partial_sum, tail_bound, verdict. The final
/// row of each report has n = "tail" and carries the certificate.
void write_condition_csv(const std::filesystem::path& file, const std::vector<ConditionReport>& reports);

/// Writes the bundle's CSV files into `dir` and returns their names
/// (relative to `dir`). Count and maximum outputs go to separate files so
/// they can be compared across worker counts.
std::vector<std::string> write_bundle(const std::filesystem::path& dir, const ReportBundle& bundle,
                                      const std::vector<StatisticSpec>& statistics);

/// manifest.json: config name and hash, seed, version, model hash and the
/// declared output files.
void write_manifest(const std::filesystem::path& dir, const ExperimentConfig& config,
                    const std::vector<std::string>& files);

}  // namespace lilab
