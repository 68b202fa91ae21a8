// Runs every acceptance criterion and prints one line per criterion.
// Tolerances and runtime limits live with each criterion in the suites
// library. The exit status is 0 once all criteria have run, whatever their
// verdicts; `lilab verify` is the command whose exit status reflects the
// verdicts. The table is also written to acceptance_results.txt in the
// working directory, since ctest hides the output of passing tests.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "lilab/suites.hpp"

int main(int argc, char** argv) {
  lilab::SuiteOptions options;
  options.workers = 1;
  if (const char* w = std::getenv("LILAB_WORKERS")) options.workers = static_cast<unsigned>(std::max(1, std::atoi(w)));
  options.scratch = std::filesystem::temp_directory_path() / "lilab-acceptance";
  const std::string suite = argc > 1 ? argv[1] : "all";
  std::ofstream table("acceptance_results.txt");
  options.on_result = [&table](const lilab::CriterionResult& r) {
    char line[64];
    std::snprintf(line, sizeof line, "%-8s %s  (%.1fs)  ", r.id.c_str(), r.pass ? "PASS" : "FAIL", r.seconds);
    std::printf("%s%s\n", line, r.detail.c_str());
    std::fflush(stdout);
    table << line << r.detail << '\n' << std::flush;
  };
  try {
    const auto results = lilab::run_suite(suite, options);
    std::size_t passed = 0;
    for (const auto& r : results) passed += r.pass;
    std::printf("%zu/%zu criteria passed\n", passed, results.size());
    table << passed << '/' << results.size() << " criteria passed\n";
  } catch (const std::exception& e) {
    std::cerr << "acceptance run aborted: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
