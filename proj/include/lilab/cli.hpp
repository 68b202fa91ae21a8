#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace lilab {

enum ExitCode : int { kExitPass = 0, kExitFail = 1, kExitUsage = 2, kExitRuntime = 3 };

struct CliOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::string suite;
  bool strict_sums = false;
};

/// --workers, else LILAB_WORKERS, else `fallback`. Throws std::invalid_argument
/// on a malformed environment value.
unsigned resolve_workers(std::optional<unsigned> flag, unsigned fallback);

int cmd_check(const CliOptions& opt, std::ostream& out, std::ostream& err);
int cmd_simulate(const CliOptions& opt, std::ostream& out, std::ostream& err);
int cmd_verify(const CliOptions& opt, std::ostream& out, std::ostream& err);

}  // namespace lilab
