#include "lilab/engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>

#include "lilab/model_io.hpp"

namespace lilab {

const char* to_string(StatisticSpec::Kind k) {
  switch (k) {
    case StatisticSpec::Kind::maximal: return "maximal";
    case StatisticSpec::Kind::hopf: return "hopf";
    case StatisticSpec::Kind::lil: return "lil";
    case StatisticSpec::Kind::covariance: return "covariance";
    case StatisticSpec::Kind::mz: return "mz";
    case StatisticSpec::Kind::normalized: return "normalized";
    case StatisticSpec::Kind::approx_error: return "approx_error";
    case StatisticSpec::Kind::endpoint: return "endpoint";
  }
  return "?";
}

StatisticSpec::Kind statistic_kind_from_string(const std::string& s) {
  using K = StatisticSpec::Kind;
  for (K k : {K::maximal, K::hopf, K::lil, K::covariance, K::mz, K::normalized, K::approx_error, K::endpoint})
    if (s == to_string(k)) return k;
  throw std::invalid_argument("unknown statistic kind: " + s);
}

// ------------------------------------------------------------------ histogram, reservoir

void LogHistogram::add(double x) {
  x = std::abs(x);
  if (x == 0.0) {
    ++zero;
  } else if (x < lo) {
    ++underflow;
  } else if (!(x < hi)) {
    ++overflow;
  } else {
    const double t = std::log(x / lo) / std::log(hi / lo);
    const auto b = std::min(kHistogramBins - 1, static_cast<std::size_t>(t * static_cast<double>(kHistogramBins)));
    ++bins[b];
  }
}

std::uint64_t LogHistogram::total() const {
  std::uint64_t t = zero + underflow + overflow;
  for (auto c : bins) t += c;
  return t;
}

double LogHistogram::lower_edge(std::size_t b) const {
  return lo * std::pow(hi / lo, static_cast<double>(b) / static_cast<double>(kHistogramBins));
}

double LogHistogram::upper_edge(std::size_t b) const { return lower_edge(b + 1); }

double weak_norm_from_histogram(const LogHistogram& h, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("weak_norm: p must be >= 1");
  const double N = static_cast<double>(h.total());
  if (N == 0.0) return 0.0;
  double best = 0.0;
  std::uint64_t above = h.overflow;
  for (std::size_t b = kHistogramBins; b-- > 0;) {
    above += h.bins[b];
    best = std::max(best, h.lower_edge(b) * std::pow(static_cast<double>(above) / N, 1.0 / p));
  }
  if (h.overflow > 0) best = std::max(best, h.hi * std::pow(static_cast<double>(h.overflow) / N, 1.0 / p));
  return best;
}

namespace {

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

bool entry_less(const Reservoir::Entry& a, const Reservoir::Entry& b) {
  return a.key != b.key ? a.key < b.key : a.path < b.path;
}

}  // namespace

void Reservoir::add(std::uint64_t seed, std::uint64_t path, double value) {
  const Entry e{mix64(mix64(seed) ^ path), path, value};
  if (entries.size() >= capacity && !entry_less(e, entries.back())) return;
  entries.insert(std::upper_bound(entries.begin(), entries.end(), e, entry_less), e);
  if (entries.size() > capacity) entries.pop_back();
}

std::vector<double> Reservoir::values() const {
  std::vector<double> v;
  v.reserve(entries.size());
  for (const auto& e : entries) v.push_back(e.value);
  return v;
}

// ------------------------------------------------------------------ merge

void merge_into(Accumulator& into, const Accumulator& from) {
  if (from.empty()) return;
  if (into.empty()) {
    into = from;
    return;
  }
  if (into.schema != from.schema) throw std::invalid_argument("merge: accumulator schemas differ");
  for (const auto& [k, v] : from.counts) into.counts[k] += v;
  for (const auto& [k, v] : from.maxima) {
    auto [it, fresh] = into.maxima.try_emplace(k, v);
    if (!fresh) it->second = std::max(it->second, v);
  }
  for (const auto& [k, v] : from.sums) {
    auto [it, fresh] = into.sums.try_emplace(k, v);
    if (fresh) continue;
    if (it->second.size() != v.size()) throw std::invalid_argument("merge: sum vectors differ in size");
    for (std::size_t i = 0; i < v.size(); ++i) it->second[i] += v[i];
  }
  for (const auto& [k, h] : from.histograms) {
    auto [it, fresh] = into.histograms.try_emplace(k, h);
    if (fresh) continue;
    auto& g = it->second;
    if (g.lo != h.lo || g.hi != h.hi) throw std::invalid_argument("merge: histogram ranges differ");
    for (std::size_t b = 0; b < kHistogramBins; ++b) g.bins[b] += h.bins[b];
    g.zero += h.zero;
    g.underflow += h.underflow;
    g.overflow += h.overflow;
  }
  for (const auto& [k, r] : from.reservoirs) {
    auto [it, fresh] = into.reservoirs.try_emplace(k, r);
    if (fresh) continue;
    auto& dst = it->second;
    std::vector<Reservoir::Entry> all;
    all.reserve(dst.entries.size() + r.entries.size());
    std::merge(dst.entries.begin(), dst.entries.end(), r.entries.begin(), r.entries.end(), std::back_inserter(all),
               entry_less);
    dst.capacity = std::min(dst.capacity, r.capacity);
    if (all.size() > dst.capacity) all.resize(dst.capacity);
    dst.entries = std::move(all);
  }
  for (const auto& [k, rows] : from.tables) {
    auto& dst = into.tables[k];
    for (const auto& [path, row] : rows)
      if (!dst.emplace(path, row).second)
        throw std::invalid_argument("merge: path " + std::to_string(path) + " present on both sides");
  }
}

Accumulator merge(const Accumulator& a, const Accumulator& b) {
  Accumulator out = a;
  merge_into(out, b);
  return out;
}

// ------------------------------------------------------------------ plan

namespace {

void check_grid(const std::vector<std::size_t>& g, std::size_t n_steps, const std::string& where) {
  if (g.empty()) throw std::invalid_argument(where + ": empty n-grid");
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g[i] == 0 || (i > 0 && g[i] <= g[i - 1])) throw std::invalid_argument(where + ": n-grid must be strictly increasing and >= 1");
  if (g.back() > n_steps) throw std::invalid_argument(where + ": grid exceeds the path length");
}

}  // namespace

std::vector<StatisticSpec> resolved_statistics(const ExperimentPlan& plan) {
  std::vector<StatisticSpec> out = plan.statistics;
  for (auto& s : out) {
    if (s.id.empty()) s.id = to_string(s.kind);
    if (s.n_max == 0) s.n_max = plan.n_steps();
    if (s.grid.empty()) s.grid = plan.n_grid;
    if (s.weak_p == 0.0) s.weak_p = s.kind == StatisticSpec::Kind::hopf ? 1.0 : (s.p >= 2.0 ? 1.5 : s.p);
  }
  return out;
}

void validate(const ExperimentPlan& plan) {
  validate(plan.model);
  check_grid(plan.n_grid, plan.n_grid.empty() ? 0 : plan.n_grid.back(), "plan");
  if (plan.n_paths == 0) throw std::invalid_argument("plan: n_paths must be >= 1");
  if (plan.block_paths == 0) throw std::invalid_argument("plan: block_paths must be >= 1");
  if (plan.n_paths > (std::uint64_t{1} << 32)) throw std::invalid_argument("plan: at most 2^32 paths");
  std::set<std::string> ids;
  using K = StatisticSpec::Kind;
  for (const auto& s : resolved_statistics(plan)) {
    if (!ids.insert(s.id).second) throw std::invalid_argument("plan: duplicate statistic id " + s.id);
    const std::string where = "statistic " + s.id;
    if (s.id.find_first_of(",\"/\\\n") != std::string::npos) throw std::invalid_argument(where + ": invalid id");
    if (s.n_max > plan.n_steps()) throw std::invalid_argument(where + ": n_max exceeds the path length");
    if (!(s.weak_p >= 1.0)) throw std::invalid_argument(where + ": weak_p must be >= 1");
    switch (s.kind) {
      case K::maximal:
        if (s.p != 2.0) (void)Normalization::power(s.p);
        break;
      case K::lil:
        if (!(s.window_fraction > 0.0 && s.window_fraction <= 1.0))
          throw std::invalid_argument(where + ": window_fraction must lie in (0, 1]");
        break;
      case K::covariance:
        if (s.max_lag > plan.n_steps() / 8) throw std::invalid_argument(where + ": max_lag exceeds n_steps / 8");
        break;
      case K::mz:
        if (!(s.p > 1.0 && s.p < 2.0)) throw std::invalid_argument(where + ": p must lie in (1, 2)");
        check_grid(s.grid, plan.n_steps(), where);
        break;
      case K::normalized:
        check_grid(s.grid, plan.n_steps(), where);
        break;
      case K::approx_error:
        check_grid(s.grid, plan.n_steps(), where);
        if (!plan.approximant) throw std::invalid_argument(where + ": requires a martingale approximant");
        if (plan.approximant->model_hash != model_hash(plan.model))
          throw std::invalid_argument(where + ": approximant belongs to a different model");
        break;
      case K::hopf:
      case K::endpoint:
        break;
    }
  }
}

std::vector<std::string> table_columns(const StatisticSpec& s, std::size_t dim, std::size_t grid_size) {
  using K = StatisticSpec::Kind;
  std::vector<std::string> cols;
  switch (s.kind) {
    case K::maximal: return {"value", "m_star"};
    case K::hopf: return {"m1", "mean_abs"};
    case K::lil: return {"windowed", "full_range"};
    case K::covariance: return {};
    case K::mz:
    case K::normalized:
    case K::approx_error:
      for (std::size_t g = 0; g < grid_size; ++g) cols.push_back("n" + std::to_string(s.grid.at(g)));
      return cols;
    case K::endpoint:
      for (std::size_t a = 0; a < dim; ++a) cols.push_back("x" + std::to_string(a));
      return cols;
  }
  return cols;
}

namespace {

constexpr std::size_t kChunk = 4096;

std::size_t state_bytes(const StatisticSpec& s, std::size_t dim, std::size_t block_paths) {
  using K = StatisticSpec::Kind;
  std::size_t row = 64 + 8 * std::max<std::size_t>(table_columns(s, dim, s.grid.size()).size(), 1);
  std::size_t bytes = block_paths * row + kReservoirSize * sizeof(Reservoir::Entry) + sizeof(LogHistogram) + 512;
  switch (s.kind) {
    case K::maximal:
    case K::hopf:
    case K::lil: bytes += 8 * dim; break;
    case K::covariance: bytes += 16 * CovarianceTracker::sums_size(dim, s.max_lag); break;
    default: bytes += 16 * (dim + s.grid.size()); break;
  }
  return bytes;
}

}  // namespace

std::size_t block_bytes(const ExperimentPlan& plan) {
  const std::size_t dim = model_dim(plan.model);
  const std::size_t chunk = std::min(kChunk, std::max<std::size_t>(plan.n_steps(), 1));
  std::size_t bytes = 2 * chunk * dim * sizeof(double) + 4096;
  const std::size_t bp = std::min(plan.block_paths, plan.n_paths);
  for (const auto& s : resolved_statistics(plan)) bytes += state_bytes(s, dim, bp);
  return bytes;
}

// ------------------------------------------------------------------ per-path work

namespace {

struct PathResult {
  std::vector<std::vector<double>> rows;   // per statistic
  std::vector<std::vector<double>> sums;   // per statistic (covariance only)
};

class PathProcessor {
 public:
  PathProcessor(const ExperimentPlan& plan, const std::vector<StatisticSpec>& stats)
      : plan_(plan), stats_(stats), dim_(model_dim(plan.model)) {
    using K = StatisticSpec::Kind;
    for (const auto& s : stats_) {
      tables_.push_back(nullptr);
      if (s.kind == K::maximal) tables_.back() = inverse_square_table(norm_of(s), s.n_max);
      if (s.kind == K::hopf) tables_.back() = inverse_square_table(Normalization::power(1.0), s.n_max);
      if (s.kind == K::lil) tables_.back() = inverse_square_table(Normalization::lil(), plan.n_steps());
      if (s.kind == K::approx_error) coupled_ = true;
    }
    if (coupled_) coupling_ = plan.approximant->coupling();
    const std::size_t chunk = std::min(kChunk, plan.n_steps());
    x_.resize(chunk * dim_);
    if (coupled_) d_.resize(chunk * dim_);
  }

  static Normalization norm_of(const StatisticSpec& s) {
    return s.p >= 2.0 ? Normalization::lil() : Normalization::power(s.p);
  }

  PathResult process(std::uint64_t path) {
    using K = StatisticSpec::Kind;
    PathStream stream(plan_.model, plan_.master_seed, path, coupled_ ? &coupling_ : nullptr);
    const std::size_t N = plan_.n_steps();
    std::vector<std::optional<MaximalTracker>> maximal(stats_.size());
    std::vector<std::optional<LilTracker>> lil(stats_.size());
    std::vector<std::optional<GridTracker>> grid(stats_.size());
    std::vector<std::optional<ApproxErrorTracker>> approx(stats_.size());
    std::vector<std::optional<CovarianceTracker>> cov(stats_.size());
    std::vector<double> abs_sum(stats_.size(), 0.0);
    std::vector<double> endpoint(dim_, 0.0);
    for (std::size_t i = 0; i < stats_.size(); ++i) {
      const auto& s = stats_[i];
      switch (s.kind) {
        case K::maximal: maximal[i].emplace(norm_of(s), dim_, s.n_max, tables_[i]); break;
        case K::hopf: maximal[i].emplace(Normalization::power(1.0), 1, s.n_max, tables_[i]); break;
        case K::lil: lil[i].emplace(dim_, N, s.window_fraction, tables_[i]); break;
        case K::covariance: cov[i].emplace(dim_, s.max_lag, N); break;
        case K::mz: grid[i].emplace(Normalization::power(s.p), dim_, s.grid); break;
        case K::normalized: grid[i].emplace(Normalization::lil(), dim_, s.grid); break;
        case K::approx_error: approx[i].emplace(dim_, s.grid); break;
        case K::endpoint: break;
      }
    }
    for (std::size_t start = 0; start < N; start += kChunk) {
      const std::size_t len = std::min(kChunk, N - start);
      std::span<double> x(x_.data(), len * dim_);
      std::span<double> d = coupled_ ? std::span<double>(d_.data(), len * dim_) : std::span<double>{};
      stream.fill(x, d);
      for (std::size_t i = 0; i < stats_.size(); ++i) {
        const auto& s = stats_[i];
        switch (s.kind) {
          case K::maximal:
            for (std::size_t t = 0; t < len && start + t < s.n_max; ++t) maximal[i]->push(x.data() + t * dim_);
            break;
          case K::hopf:
            for (std::size_t t = 0; t < len && start + t < s.n_max; ++t) {
              double sq = 0.0;
              for (std::size_t a = 0; a < dim_; ++a) sq += x[t * dim_ + a] * x[t * dim_ + a];
              const double v = std::sqrt(sq);
              abs_sum[i] += v;
              maximal[i]->push(&v);
            }
            break;
          case K::lil:
            for (std::size_t t = 0; t < len; ++t) lil[i]->push(x.data() + t * dim_);
            break;
          case K::covariance:
            for (std::size_t t = 0; t < len; ++t) cov[i]->push(x.data() + t * dim_);
            break;
          case K::mz:
          case K::normalized:
            for (std::size_t t = 0; t < len; ++t) grid[i]->push(x.data() + t * dim_);
            break;
          case K::approx_error:
            for (std::size_t t = 0; t < len; ++t) approx[i]->push(x.data() + t * dim_, d.data() + t * dim_);
            break;
          case K::endpoint: break;
        }
      }
      for (std::size_t t = 0; t < len; ++t)
        for (std::size_t a = 0; a < dim_; ++a) endpoint[a] += x[t * dim_ + a];
    }
    PathResult r;
    r.rows.resize(stats_.size());
    r.sums.resize(stats_.size());
    for (std::size_t i = 0; i < stats_.size(); ++i) {
      const auto& s = stats_[i];
      switch (s.kind) {
        case K::maximal: r.rows[i] = {maximal[i]->value(), maximal[i]->m_star()}; break;
        case K::hopf: r.rows[i] = {maximal[i]->value(), abs_sum[i] / static_cast<double>(s.n_max)}; break;
        case K::lil: r.rows[i] = {lil[i]->windowed(), lil[i]->full_range()}; break;
        case K::covariance: r.sums[i] = cov[i]->sums(); break;
        case K::mz:
        case K::normalized: r.rows[i] = grid[i]->values(); break;
        case K::approx_error: r.rows[i] = approx[i]->values(); break;
        case K::endpoint:
          r.rows[i] = endpoint;
          for (double& v : r.rows[i]) v /= std::sqrt(static_cast<double>(N));
          break;
      }
    }
    return r;
  }

 private:
  const ExperimentPlan& plan_;
  const std::vector<StatisticSpec>& stats_;
  std::size_t dim_;
  std::vector<std::shared_ptr<const std::vector<double>>> tables_;
  bool coupled_ = false;
  Coupling coupling_;
  std::vector<double> x_, d_;
};

Accumulator fresh_accumulator(const std::vector<StatisticSpec>& stats) {
  Accumulator acc;
  for (const auto& s : stats) acc.schema.push_back(s.id);
  return acc;
}

void record(Accumulator& acc, const std::vector<StatisticSpec>& stats, std::uint64_t seed, std::uint64_t path,
            PathResult&& r) {
  using K = StatisticSpec::Kind;
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const auto& s = stats[i];
    acc.counts[s.id + ".paths"] += 1;
    if (s.kind == K::covariance) {
      auto [it, fresh] = acc.sums.try_emplace(s.id, std::move(r.sums[i]));
      if (!fresh)
        for (std::size_t k = 0; k < it->second.size(); ++k) it->second[k] += r.sums[i][k];
      continue;
    }
    const auto& row = r.rows[i];
    const auto cols = table_columns(s, row.size(), row.size());
    for (std::size_t c = 0; c < row.size(); ++c) {
      const std::string key = s.id + "." + cols[c];
      auto [it, fresh] = acc.maxima.try_emplace(key, std::abs(row[c]));
      if (!fresh) it->second = std::max(it->second, std::abs(row[c]));
    }
    if (!row.empty()) {
      acc.histograms[s.id].add(row[0]);
      acc.reservoirs[s.id].add(seed, path, row[0]);
      if (s.kind == K::maximal || s.kind == K::lil)
        if (row[0] > 1.0) acc.counts[s.id + ".exceed1"] += 1;
    }
    acc.tables[s.id].emplace(path, std::move(r.rows[i]));
  }
}

std::vector<double> column(const std::map<std::uint64_t, std::vector<double>>& table, std::size_t c) {
  std::vector<double> out;
  out.reserve(table.size());
  for (const auto& [path, row] : table) out.push_back(row.at(c));
  return out;
}

LimitReport maximal_report(const StatisticSpec& s, const Accumulator& acc) {
  const auto& table = acc.tables.at(s.id);
  const auto values = column(table, 0);
  const auto m_star = column(table, 1);
  LimitReport r;
  r.statistic = s.id;
  r.sample_size = values.size();
  const WeakNormResult w = weak_norm(values, s.weak_p);
  r.estimate = w.estimate;
  r.se = w.tail_at_sup > 0.0 ? w.estimate * std::sqrt(w.tail_at_sup * (1.0 - w.tail_at_sup) / static_cast<double>(values.size())) / w.tail_at_sup / s.weak_p : 0.0;
  r.values["weak_p"] = s.weak_p;
  r.values["weak_norm_histogram"] = weak_norm_from_histogram(acc.histograms.at(s.id), s.weak_p);
  r.values["last_decade_variation"] = last_decade_variation(w);
  r.values["lambda_at_sup"] = w.lambda_at_sup;
  r.values["median"] = median(values);
  r.values["max"] = *std::max_element(values.begin(), values.end());
  double dom = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (m_star[i] > 0.0) dom = std::max(dom, values[i] / m_star[i]);
  r.values["domination_constant"] = dom;
  for (std::size_t n = 1; n <= s.n_max; n *= 2) r.n_grid.push_back(static_cast<double>(n));
  std::vector<double> lambdas, prof;
  for (auto [l, v] : w.profile) lambdas.push_back(l), prof.push_back(v);
  r.curves["lambda"] = lambdas;
  r.curves["profile"] = prof;
  return r;
}

}  // namespace

ReportBundle run(const ExperimentPlan& plan) {
  validate(plan);
  const auto stats = resolved_statistics(plan);
  const std::size_t need = block_bytes(plan);
  if (plan.memory_budget < need)
    throw std::length_error("memory budget of " + std::to_string(plan.memory_budget) + " bytes is below one block (" +
                            std::to_string(need) + " bytes)");
  const unsigned workers = static_cast<unsigned>(
      std::clamp<std::size_t>(plan.memory_budget / need, 1, std::max(1u, plan.workers)));
  const std::size_t n_blocks = (plan.n_paths + plan.block_paths - 1) / plan.block_paths;
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

  std::string stat_names;
  for (const auto& s : stats) stat_names += (stat_names.empty() ? "" : ",") + s.id;

  std::vector<Accumulator> per_block(plan.strict_sums ? n_blocks : 0);
  std::vector<Accumulator> per_worker(workers);
  std::atomic<std::size_t> next_block{0};
  std::atomic<std::size_t> paths_done{0};
  std::mutex log_lock;
  std::exception_ptr failure;
  std::mutex failure_lock;

  auto work = [&](unsigned w) {
    try {
      PathProcessor proc(plan, stats);
      for (std::size_t b = next_block++; b < n_blocks; b = next_block++) {
        Accumulator acc = fresh_accumulator(stats);
        const std::size_t lo = b * plan.block_paths, hi = std::min(plan.n_paths, lo + plan.block_paths);
        for (std::size_t p = lo; p < hi; ++p) record(acc, stats, plan.master_seed, p, proc.process(p));
        if (plan.strict_sums)
          per_block[b] = std::move(acc);
        else
          merge_into(per_worker[w], acc);
        const std::size_t done = paths_done += hi - lo;
        if (plan.progress) {
          Json line{{"statistic", stat_names}, {"paths_done", done}, {"paths_total", plan.n_paths},
                    {"elapsed", elapsed()}};
          std::lock_guard lock(log_lock);
          plan.progress(line.dump());
        }
      }
    } catch (...) {
      std::lock_guard lock(failure_lock);
      if (!failure) failure = std::current_exception();
      next_block = n_blocks;
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }
  if (failure) std::rethrow_exception(failure);

  ReportBundle bundle;
  bundle.model_kind = model_kind(plan.model);
  bundle.model_hash = model_hash(plan.model);
  bundle.master_seed = plan.master_seed;
  bundle.n_paths = plan.n_paths;
  bundle.n_steps = plan.n_steps();
  Accumulator total = fresh_accumulator(stats);
  for (auto& a : plan.strict_sums ? per_block : per_worker) merge_into(total, a);

  using K = StatisticSpec::Kind;
  const std::size_t dim = model_dim(plan.model);
  for (const auto& s : stats) {
    switch (s.kind) {
      case K::maximal:
        bundle.reports.push_back(maximal_report(s, total));
        break;
      case K::hopf: {
        const auto& t = total.tables.at(s.id);
        LimitReport r = hopf_summary(column(t, 0), column(t, 1));
        r.statistic = s.id;
        r.n_grid = {static_cast<double>(s.n_max)};
        bundle.reports.push_back(std::move(r));
        break;
      }
      case K::lil: {
        const auto& t = total.tables.at(s.id);
        LimitReport r = lil_summary(column(t, 0), column(t, 1), exact_long_run_covariance(plan.model));
        r.statistic = s.id;
        LilTracker probe(dim, plan.n_steps(), s.window_fraction, nullptr);
        for (unsigned j = probe.first_exponent(); j <= probe.last_exponent(); ++j) r.n_grid.push_back(std::exp2(j));
        bundle.reports.push_back(std::move(r));
        break;
      }
      case K::covariance: {
        CovarianceEstimate est =
            covariance_from_sums(total.sums.at(s.id), dim, s.max_lag, plan.n_steps(), plan.n_paths);
        est.exact = exact_long_run_covariance(plan.model);
        LimitReport r;
        r.statistic = s.id;
        r.sample_size = plan.n_paths;
        r.estimate = est.K.matrix()(0, 0);
        r.values["max_eigenvalue"] = est.K.max_eigenvalue();
        r.values["clipped"] = est.clipped ? 1.0 : 0.0;
        for (std::size_t a = 0; a < dim; ++a)
          for (std::size_t b = 0; b < dim; ++b)
            r.values["K_" + std::to_string(a) + "_" + std::to_string(b)] =
                est.K.matrix()(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        if (est.exact) {
          const double ex = est.exact->matrix()(0, 0);
          r.values["exact_0_0"] = ex;
          if (ex != 0.0) r.values["relative_error"] = std::abs(r.estimate - ex) / std::abs(ex);
        }
        bundle.covariances.emplace(s.id, std::move(est));
        bundle.reports.push_back(std::move(r));
        break;
      }
      case K::mz:
      case K::normalized:
      case K::approx_error: {
        std::vector<std::vector<double>> rows;
        for (const auto& [path, row] : total.tables.at(s.id)) rows.push_back(row);
        LimitReport r = curve_summary(s.id, rows, s.grid);
        bundle.reports.push_back(std::move(r));
        break;
      }
      case K::endpoint: {
        const auto& t = total.tables.at(s.id);
        LimitReport r;
        r.statistic = s.id;
        r.sample_size = t.size();
        for (std::size_t a = 0; a < dim; ++a) {
          const auto col = column(t, a);
          const MeanSe ms = mean_se(col);
          double ss = 0.0;
          for (double v : col) ss += (v - ms.mean) * (v - ms.mean);
          const double var = col.size() > 1 ? ss / static_cast<double>(col.size() - 1) : 0.0;
          r.values["mean_" + std::to_string(a)] = ms.mean;
          r.values["variance_" + std::to_string(a)] = var;
          if (a == 0) r.estimate = var, r.se = var * std::sqrt(2.0 / std::max<double>(1.0, static_cast<double>(col.size()) - 1.0));
        }
        r.n_grid = {static_cast<double>(plan.n_steps())};
        bundle.reports.push_back(std::move(r));
        break;
      }
    }
  }
  bundle.accumulator = std::move(total);
  bundle.elapsed_seconds = elapsed();
  return bundle;
}

}  // namespace lilab
