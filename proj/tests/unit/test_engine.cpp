#include <doctest.h>

#include <cmath>
#include <vector>

#include <json.hpp>

#include "lilab/engine.hpp"
#include "lilab/rng.hpp"
#include "lilab/suites.hpp"

using namespace lilab;

namespace {

ExperimentPlan base_plan(std::size_t paths) {
  ExperimentPlan plan;
  plan.model = make_linear_scalar(InnovationSpec::rademacher(), {1.0, 0.5});
  plan.n_grid = {64, 1024, 8192};
  plan.n_paths = paths;
  plan.master_seed = 99;
  plan.block_paths = 16;
  StatisticSpec maximal{};
  maximal.kind = StatisticSpec::Kind::maximal;
  maximal.p = 1.5;
  StatisticSpec lil{};
  lil.kind = StatisticSpec::Kind::lil;
  StatisticSpec mz{};
  mz.kind = StatisticSpec::Kind::mz;
  mz.p = 1.5;
  StatisticSpec cov{};
  cov.kind = StatisticSpec::Kind::covariance;
  cov.max_lag = 4;
  StatisticSpec hopf{};
  hopf.kind = StatisticSpec::Kind::hopf;
  plan.statistics = {maximal, lil, mz, cov, hopf};
  return plan;
}

Accumulator with_counts(std::vector<std::string> schema, std::map<std::string, std::uint64_t> counts,
                        std::map<std::string, double> maxima) {
  Accumulator a;
  a.schema = std::move(schema);
  a.counts = std::move(counts);
  a.maxima = std::move(maxima);
  return a;
}

}  // namespace

TEST_CASE("single path run equals direct computation") {
  auto plan = base_plan(1);
  const auto bundle = run(plan);
  PathStream s(plan.model, plan.master_seed, 0);
  std::vector<double> x(plan.n_steps());
  s.fill(x);
  double sum = 0.0, best = 0.0;
  std::vector<double> mz;
  for (std::size_t n = 1; n <= x.size(); ++n) {
    sum += x[n - 1];
    best = std::max(best, std::abs(sum) / std::pow(static_cast<double>(n), 1 / 1.5));
    for (auto g : plan.n_grid)
      if (g == n) mz.push_back(std::abs(sum) / std::pow(static_cast<double>(n), 1 / 1.5));
  }
  const auto& acc = bundle.accumulator;
  CHECK(acc.tables.at("maximal").at(0)[0] == doctest::Approx(best).epsilon(1e-12));
  const auto& row = acc.tables.at("mz").at(0);
  REQUIRE(row.size() == mz.size());
  for (std::size_t i = 0; i < mz.size(); ++i) CHECK(row[i] == doctest::Approx(mz[i]).epsilon(1e-12));
  CHECK(acc.counts.at("maximal.paths") == 1);
}

TEST_CASE("results do not depend on the worker count") {
  auto plan = base_plan(100);
  plan.workers = 1;
  const auto one = run(plan);
  plan.workers = 4;
  const auto four = run(plan);
  CHECK(one.accumulator.counts == four.accumulator.counts);
  CHECK(one.accumulator.maxima == four.accumulator.maxima);
  CHECK(one.accumulator.histograms == four.accumulator.histograms);
  CHECK(one.accumulator.reservoirs == four.accumulator.reservoirs);
  CHECK(one.accumulator.tables == four.accumulator.tables);
  // Floating sums agree to rounding, and exactly in strict mode.
  const auto& s1 = one.accumulator.sums.at("covariance");
  const auto& s4 = four.accumulator.sums.at("covariance");
  for (std::size_t i = 0; i < s1.size(); ++i) CHECK(std::abs(s1[i] - s4[i]) <= 1e-12 * std::max(1.0, std::abs(s1[i])));
  plan.strict_sums = true;
  plan.workers = 1;
  const auto strict1 = run(plan);
  plan.workers = 3;
  const auto strict3 = run(plan);
  CHECK(strict1.accumulator.sums == strict3.accumulator.sums);
}

TEST_CASE("memory budget") {
  auto plan = base_plan(32);
  plan.memory_budget = block_bytes(plan) - 1;
  CHECK_THROWS(run(plan));
  plan.memory_budget = block_bytes(plan);
  plan.workers = 4;
  CHECK_NOTHROW(run(plan));
}

TEST_CASE("plan validation") {
  auto plan = base_plan(4);
  plan.n_grid = {64, 32};
  CHECK_THROWS(validate(plan));
  plan = base_plan(4);
  plan.statistics.push_back(plan.statistics.front());
  CHECK_THROWS(validate(plan));  // duplicate id
  plan = base_plan(4);
  plan.statistics[2].p = 2.5;
  CHECK_THROWS(validate(plan));
  plan = base_plan(0);
  CHECK_THROWS(validate(plan));
}

TEST_CASE("progress lines") {
  auto plan = base_plan(40);
  std::vector<std::string> lines;
  plan.progress = [&lines](const std::string& l) { lines.push_back(l); };
  run(plan);
  REQUIRE_FALSE(lines.empty());
  const auto j = nlohmann::json::parse(lines.back());
  CHECK(j.at("paths_done") == 40);
  CHECK(j.at("paths_total") == 40);
  CHECK(j.contains("elapsed"));
  CHECK(j.contains("statistic"));
}

TEST_CASE("merge") {
  const Accumulator a = with_counts({"s"}, {{"s.paths", 3}}, {{"s.value", 2.0}});
  const Accumulator b = with_counts({"s"}, {{"s.paths", 5}}, {{"s.value", 7.0}});
  const Accumulator empty;
  const auto ae = merge(a, empty);
  CHECK(ae.counts == a.counts);
  CHECK(ae.maxima == a.maxima);
  CHECK(merge(empty, a).schema == a.schema);
  const auto ab = merge(a, b), ba = merge(b, a);
  CHECK(ab.counts == ba.counts);
  CHECK(ab.maxima == ba.maxima);
  CHECK(ab.counts.at("s.paths") == 8);
  CHECK(ab.maxima.at("s.value") == 7.0);

  const Accumulator other = with_counts({"t"}, {}, {});
  CHECK_THROWS(merge(a, other));

  Accumulator p1 = a, p2 = b;
  p1.tables["s"][4] = {1.0};
  p2.tables["s"][4] = {2.0};
  CHECK_THROWS(merge(p1, p2));
  p2.tables["s"].clear();
  p2.tables["s"][5] = {2.0};
  CHECK(merge(p1, p2).tables.at("s").size() == 2);
}

TEST_CASE("histogram merge equals a single pass") {
  StreamRng rng(4, 0);
  std::vector<double> values(1000);
  for (auto& v : values) v = std::exp(8.0 * rng.normal()) * (rng.bit() ? 1.0 : 0.0);
  LogHistogram whole, left, right;
  for (std::size_t i = 0; i < values.size(); ++i) {
    whole.add(values[i]);
    (i % 3 == 0 ? left : right).add(values[i]);
  }
  Accumulator a, b;
  a.schema = b.schema = {"h"};
  a.histograms["h"] = left;
  b.histograms["h"] = right;
  CHECK(merge(a, b).histograms.at("h") == whole);
  CHECK(whole.total() == 1000);
  // Brute force bin assignment.
  std::vector<std::uint64_t> bins(kHistogramBins, 0);
  std::uint64_t zero = 0, under = 0, over = 0;
  for (double v : values) {
    if (v == 0.0) ++zero;
    else if (v < 1e-6) ++under;
    else if (v >= 1e6) ++over;
    else {
      const double pos = std::log(v / 1e-6) / std::log(1e12) * kHistogramBins;
      ++bins[std::min<std::size_t>(kHistogramBins - 1, static_cast<std::size_t>(pos))];
    }
  }
  CHECK(whole.zero == zero);
  CHECK(whole.underflow == under);
  CHECK(whole.overflow == over);
  CHECK(whole.bins == bins);
}

TEST_CASE("reservoir keeps the same sample regardless of order") {
  Reservoir a, b;
  a.capacity = b.capacity = 50;
  for (std::uint64_t p = 0; p < 500; ++p) a.add(1, p, static_cast<double>(p));
  for (std::uint64_t p = 500; p-- > 0;) b.add(1, p, static_cast<double>(p));
  CHECK(a == b);
  CHECK(a.entries.size() == 50);
}

TEST_CASE("weak norm from histogram bounds the exact estimate from below") {
  StreamRng rng(6, 0);
  std::vector<double> z(5000);
  LogHistogram h;
  for (auto& v : z) {
    v = std::abs(rng.normal());
    h.add(v);
  }
  CHECK(weak_norm_from_histogram(h, 1.5) <= weak_norm(z, 1.5).estimate + 1e-12);
  CHECK(weak_norm_from_histogram(h, 1.5) > 0.5 * weak_norm(z, 1.5).estimate);
}
