#include "lilab/cli.hpp"

#include <cstdlib>
#include <iomanip>
#include <iostream>

#include "lilab/config.hpp"
#include "lilab/report.hpp"
#include "lilab/suites.hpp"

namespace lilab {

unsigned resolve_workers(std::optional<unsigned> flag, unsigned fallback) {
  if (flag) return std::max(1u, *flag);
  if (const char* env = std::getenv("LILAB_WORKERS"); env && *env) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (*end != '\0' || v == 0 || v > 4096) throw std::invalid_argument("LILAB_WORKERS must be a positive integer");
    return static_cast<unsigned>(v);
  }
  return std::max(1u, fallback);
}

namespace {

ExperimentConfig load(const CliOptions& opt) {
  if (!opt.config) throw ConfigError("--config is required");
  ExperimentConfig c = load_config(*opt.config);
  if (opt.seed) c.seed = *opt.seed;
  if (opt.strict_sums) c.strict_sums = true;
  c.workers = resolve_workers(opt.workers, c.workers);
  if (opt.out) c.output = opt.out->string();
  return c;
}

}  // namespace

int cmd_check(const CliOptions& opt, std::ostream& out, std::ostream& err) {
  ExperimentConfig c;
  try {
    c = load(opt);
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  }
  try {
    std::vector<ConditionReport> reports;
    for (const auto& check : c.checks) reports.push_back(run_check(c.model, check));
    const std::filesystem::path dir = c.output;
    std::filesystem::create_directories(dir);
    write_condition_csv(dir / "conditions.csv", reports);
    write_manifest(dir, c, {"conditions.csv", "manifest.json"});
    bool all = true;
    for (const auto& r : reports) {
      out << r.condition << ": " << to_string(r.verdict);
      if (!r.rows.empty()) out << "  partial_sum=" << format_double(r.rows.back().partial_sum);
      out << "  tail_bound=" << (r.tail_bound ? format_double(*r.tail_bound) : "unknown");
      if (!r.certificate.empty()) out << "  (" << r.certificate << ")";
      out << '\n';
      all = all && r.verdict == ConditionVerdict::holds;
    }
    return all ? kExitPass : kExitFail;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

int cmd_simulate(const CliOptions& opt, std::ostream& out, std::ostream& err) {
  ExperimentConfig c;
  ExperimentPlan plan;
  try {
    c = load(opt);
    plan = make_plan(c);
    validate(plan);
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  }
  try {
    plan.progress = [&err](const std::string& line) { err << line << '\n'; };
    const ReportBundle bundle = run(plan);
    const std::filesystem::path dir = c.output;
    auto files = write_bundle(dir, bundle, resolved_statistics(plan));
    files.push_back("manifest.json");
    write_manifest(dir, c, files);
    for (const auto& r : bundle.reports)
      out << r.statistic << ": estimate=" << format_double(r.estimate) << " se=" << format_double(r.se)
          << " n=" << r.sample_size << '\n';
    out << "wrote " << files.size() << " files to " << dir.string() << '\n';
    return kExitPass;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

int cmd_verify(const CliOptions& opt, std::ostream& out, std::ostream& err) {
  if (!suite_exists(opt.suite)) {
    err << "unknown suite '" << opt.suite << "'; available:";
    for (const auto& s : suite_names()) err << ' ' << s;
    err << '\n';
    return kExitUsage;
  }
  try {
    SuiteOptions so;
    so.workers = resolve_workers(opt.workers, 1);
    so.seed = opt.seed;
    if (opt.out) so.scratch = *opt.out;
    so.on_result = [&out](const CriterionResult& r) {
      out << std::left << std::setw(10) << r.id << (r.pass ? "PASS" : "FAIL") << "  " << std::fixed
          << std::setprecision(2) << r.seconds << "s  " << r.detail << std::endl;
    };
    const auto results = run_suite(opt.suite, so);
    bool all = true;
    for (const auto& r : results) all = all && r.pass;
    return all ? kExitPass : kExitFail;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace lilab
