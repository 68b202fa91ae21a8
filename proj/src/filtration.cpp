#include "lilab/filtration.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "lilab/model_io.hpp"
#include "lilab/stats.hpp"

namespace lilab {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::finite: return "finite";
    case Verdict::divergent: return "divergent";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

namespace {

constexpr std::size_t kMomentSamples = 1'000'000;
constexpr std::size_t kMarkovHorizon = 100'000;

void check_p(double p) {
  if (!(p > 1.0 && p <= 2.0)) throw std::invalid_argument("p must lie in (1, 2]");
}

/// (E|A xi|^p)^{1/p} for one innovation vector xi.
double one_innovation_moment(const Eigen::MatrixXd& A, const InnovationSpec& spec, double p, double* se) {
  if (p == 2.0) {
    if (se) *se = 0.0;
    return std::sqrt(spec.variance() * A.squaredNorm());
  }
  StreamRng rng(kOracleSeed, 0, Stream::oracle);
  Eigen::VectorXd xi(static_cast<Eigen::Index>(spec.dim));
  std::vector<double> values(kMomentSamples);
  for (auto& v : values) {
    for (Eigen::Index c = 0; c < xi.size(); ++c) xi(c) = spec.sample(rng);
    v = std::pow((A * xi).norm(), p);
  }
  const MeanSe m = mean_se(values);
  const double norm = std::pow(m.mean, 1.0 / p);
  if (se) *se = norm > 0.0 ? norm * m.se / (p * m.mean) : 0.0;
  return norm;
}

/// ||X_0||_p by Monte Carlo over innovation windows.
double window_moment(const ProcessModel& model, double p, double* se) {
  const InnovationSpec& spec = innovation_of(model);
  const std::size_t len = innovation_window(model).length() * spec.dim;
  StreamRng rng(kOracleSeed, 1, Stream::oracle);
  std::vector<double> window(len), out(model_dim(model)), values(kMomentSamples);
  for (auto& v : values) {
    for (auto& w : window) w = spec.sample(rng);
    eval_window(model, window, out);
    double sq = 0.0;
    for (double x : out) sq += x * x;
    v = std::pow(sq, p / 2.0);
  }
  const MeanSe m = mean_se(values);
  const double norm = std::pow(m.mean, 1.0 / p);
  if (se) *se = norm > 0.0 ? norm * m.se / (p * m.mean) : 0.0;
  return norm;
}

/// ||P_0 X_n||_p for a Markov chain: sum_s m(s) sum_t P(s,t) |g_n(t) - g_{n+1}(s)|^p.
double markov_projection(const MarkovKernel& K, const Eigen::MatrixXd& gn, const Eigen::MatrixXd& gn1, double p) {
  const auto S = static_cast<Eigen::Index>(K.states());
  double sum = 0.0;
  for (Eigen::Index s = 0; s < S; ++s)
    for (Eigen::Index t = 0; t < S; ++t) {
      if (K.P()(s, t) == 0.0) continue;
      sum += K.m()(s) * K.P()(s, t) * std::pow((gn.row(t) - gn1.row(s)).norm(), p);
    }
  return std::pow(sum, 1.0 / p);
}

bool in_range(const std::optional<IndexRange>& r, int n) { return !r || (n >= r->lo && n <= r->hi); }

}  // namespace

ProjectionReport projection_norms(const ProcessModel& model, double p, std::optional<IndexRange> range,
                                  double epsilon) {
  check_p(p);
  validate(model);
  if (range && range->lo > range->hi) throw std::invalid_argument("projection_norms: empty range");
  ProjectionReport report;
  report.p = p;
  report.method = p == 2.0 ? "exact" : "monte_carlo";
  double omitted = 0.0;

  if (std::holds_alternative<MartingaleDifference>(model)) {
    double se = 0.0, norm = 0.0;
    const auto var = exact_variance(model);
    if (p == 2.0 && var) norm = std::sqrt(var->matrix().trace());
    else norm = window_moment(model, p, &se), report.method = "monte_carlo";
    if (in_range(range, 0)) report.norms.push_back({0, norm, se});
    else omitted += norm;
  } else if (auto* m = std::get_if<LinearProcess>(&model)) {
    for (std::size_t i = 0; i < m->coeffs.size(); ++i) {
      const int lag = m->first_index + static_cast<int>(i);
      double se = 0.0;
      const double norm = one_innovation_moment(m->coeffs[i], m->innovation, p, &se);
      if (in_range(range, -lag)) report.norms.push_back({-lag, norm, se});
      else omitted += norm;
    }
    std::sort(report.norms.begin(), report.norms.end(),
              [](const ProjectionTerm& a, const ProjectionTerm& b) { return a.n > b.n; });
  } else if (auto* m = std::get_if<MarkovChainFn>(&model)) {
    report.method = "exact";
    const MarkovKernel& K = m->kernel;
    const double sigma = K.centered_operator_norm();
    Eigen::MatrixXd g = m->f;
    Eigen::MatrixXd g1 = K.apply(g);
    const int hi = range ? std::max(0, -range->lo) : static_cast<int>(kMarkovHorizon);
    int n = 0;
    double tail = std::numeric_limits<double>::infinity();
    for (; n <= hi; ++n) {
      const double term = markov_projection(K, g, g1, p);
      if (in_range(range, -n)) report.norms.push_back({-n, term, 0.0});
      else omitted += term;
      // ||P_0 X_k||_p <= ||P_0 X_k||_2 <= ||g_k||_2 <= sigma^{k-n-1} ||g_{n+1}||_2 for k > n.
      const double next = K.l2_norm(g1);
      if (next == 0.0) { tail = 0.0; break; }
      if (sigma < 1.0) {
        tail = next / (1.0 - sigma);
        if (!range && tail < epsilon) break;
      }
      g = std::move(g1);
      g1 = K.apply(g);
    }
    if (!std::isfinite(tail) && sigma >= 1.0) {
      // An isometric orbit ||g_{k+1}|| = ||g_k|| makes every projection vanish.
      bool isometric = true;
      Eigen::MatrixXd v = m->f;
      for (std::size_t k = 0; k < K.states() && isometric; ++k) {
        Eigen::MatrixXd w = K.apply(v);
        isometric = std::abs(K.l2_norm(w) - K.l2_norm(v)) <= 1e-12 * std::max(1.0, K.l2_norm(m->f));
        v = std::move(w);
      }
      if (isometric) tail = 0.0;
    }
    omitted += tail;
  } else {
    throw std::invalid_argument("projection_norms: unsupported model family '" + model_kind(model) +
                                "'; use mc_conditional_norm");
  }

  double sum = 0.0;
  for (const auto& t : report.norms) sum += t.norm;
  report.tail_bound = omitted;
  report.hannan_value = sum + omitted;
  report.verdict = omitted < epsilon ? Verdict::finite : Verdict::inconclusive;
  return report;
}

ConditionalNormEstimate mc_conditional_norm(const ProcessModel& model, std::size_t n, double p, std::size_t n_samples,
                                            std::uint64_t seed, std::size_t inner,
                                            std::optional<double> target_rel_se) {
  if (!(p > 1.0 && p <= 2.0)) throw std::invalid_argument("mc_conditional_norm: p must lie in (1, 2]");
  if (n_samples < 2) throw std::invalid_argument("mc_conditional_norm: need at least 2 outer samples");
  if (inner < 2 || inner % 2 != 0) throw std::invalid_argument("mc_conditional_norm: inner must be even and >= 2");
  validate(model);
  const std::size_t dim = model_dim(model);
  const std::size_t half = inner / 2;

  // Draws E_0-conditional samples of X_n into the two halves A and B.
  std::function<void(StreamRng&, StreamRng&, std::vector<double>&, std::vector<double>&)> sample;
  std::vector<double> window, out(dim);

  if (innovation_driven(model)) {
    const InnovationSpec& spec = innovation_of(model);
    const InnovationWindow w = innovation_window(model);
    window.resize(w.length() * spec.dim);
    // Window times n - past .. n + future; times <= 0 are the conditioned past.
    const long long first_time = static_cast<long long>(n) - static_cast<long long>(w.past);
    sample = [&, first_time, w](StreamRng& outer_rng, StreamRng& inner_rng, std::vector<double>& A,
                                std::vector<double>& B) {
      const std::size_t L = w.length();
      std::size_t fixed = 0;
      for (std::size_t i = 0; i < L; ++i)
        if (first_time + static_cast<long long>(i) <= 0) fixed = i + 1;
      for (std::size_t i = 0; i < fixed * spec.dim; ++i) window[i] = spec.sample(outer_rng);
      std::fill(A.begin(), A.end(), 0.0);
      std::fill(B.begin(), B.end(), 0.0);
      for (std::size_t r = 0; r < 2 * half; ++r) {
        for (std::size_t i = fixed * spec.dim; i < window.size(); ++i) window[i] = spec.sample(inner_rng);
        eval_window(model, window, out);
        auto& target = r < half ? A : B;
        for (std::size_t a = 0; a < dim; ++a) target[a] += out[a] / static_cast<double>(half);
      }
    };
  } else if (auto* m = std::get_if<MarkovChainFn>(&model)) {
    sample = [&, m](StreamRng& outer_rng, StreamRng& inner_rng, std::vector<double>& A, std::vector<double>& B) {
      const std::size_t w0 = m->kernel.sample_initial(outer_rng);
      std::fill(A.begin(), A.end(), 0.0);
      std::fill(B.begin(), B.end(), 0.0);
      for (std::size_t r = 0; r < 2 * half; ++r) {
        std::size_t s = w0;
        for (std::size_t k = 0; k < n; ++k) s = m->kernel.step(s, inner_rng);
        auto& target = r < half ? A : B;
        for (std::size_t a = 0; a < dim; ++a) target[a] += m->f(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) / static_cast<double>(half);
      }
    };
  } else {
    throw std::invalid_argument("mc_conditional_norm: model '" + model_kind(model) +
                                "' has no forward filtration generated by innovations or states");
  }

  StreamRng outer_rng(seed, 0, Stream::auxiliary);
  StreamRng inner_rng(seed, 1, Stream::auxiliary);
  std::vector<double> A(dim), B(dim), cross(n_samples), powered(n_samples);
  for (std::size_t s = 0; s < n_samples; ++s) {
    sample(outer_rng, inner_rng, A, B);
    double dot = 0.0, sq = 0.0;
    for (std::size_t a = 0; a < dim; ++a) {
      dot += A[a] * B[a];
      const double avg = 0.5 * (A[a] + B[a]);
      sq += avg * avg;
    }
    cross[s] = dot;
    powered[s] = std::pow(sq, p / 2.0);
  }

  ConditionalNormEstimate est;
  est.n = n;
  est.p = p;
  est.outer = n_samples;
  est.inner = inner;
  if (p == 2.0) {
    const MeanSe m = mean_se(cross);
    est.squared = m.mean;
    est.squared_se = m.se;
    est.estimate = std::sqrt(std::max(0.0, m.mean));
    // Delta method away from zero; near zero the SE of the root is sqrt(SE).
    est.se = est.estimate > std::sqrt(m.se) ? m.se / (2.0 * est.estimate) : std::sqrt(m.se);
  } else {
    const MeanSe m = mean_se(powered);
    est.estimate = std::pow(m.mean, 1.0 / p);
    est.se = m.mean > 0.0 ? est.estimate * m.se / (p * m.mean) : 0.0;
  }
  if (target_rel_se && est.estimate > 0.0 && est.se / est.estimate > *target_rel_se)
    throw std::runtime_error("mc_conditional_norm: n_samples too small for the requested relative error");
  return est;
}

HanbisReport hanbis_check(const ProcessModel& model, std::size_t horizon, double epsilon) {
  validate(model);
  if (horizon < 1) throw std::invalid_argument("hanbis_check: horizon must be >= 1");
  HanbisReport report;
  report.method = "exact";
  std::vector<double> past(horizon + 1, 0.0), future(horizon + 1, 0.0);
  double tail = 0.0;

  if (std::holds_alternative<MartingaleDifference>(model)) {
    // E_{-n} d_0 = 0 for n >= 1 and d_0 is F_0-measurable.
  } else if (auto* m = std::get_if<LinearProcess>(&model)) {
    const double var = m->innovation.variance();
    for (std::size_t i = 0; i < m->coeffs.size(); ++i) {
      const int j = m->first_index + static_cast<int>(i);
      const double w = var * m->coeffs[i].squaredNorm();
      // E_{-n} X_0 keeps the lags j >= n; X_0 - E_n X_0 keeps j < -n.
      for (std::size_t n = 1; n <= horizon; ++n) {
        if (j >= static_cast<int>(n)) past[n] += w;
        if (j < -static_cast<int>(n)) future[n] += w;
      }
      if (j > static_cast<int>(horizon) || -j - 1 > static_cast<int>(horizon)) {
        // Contributions beyond the horizon are finitely many and bounded by
        // sqrt(w) per index.
        const int reach = std::max(j, -j - 1);
        for (int n = static_cast<int>(horizon) + 1; n <= reach; ++n) tail += std::sqrt(w) / std::sqrt(static_cast<double>(n));
      }
    }
    for (auto& v : past) v = std::sqrt(v);
    for (auto& v : future) v = std::sqrt(v);
  } else if (auto* m = std::get_if<MarkovChainFn>(&model)) {
    const MarkovKernel& K = m->kernel;
    Eigen::MatrixXd g = m->f;
    for (std::size_t n = 1; n <= horizon; ++n) {
      g = K.apply(g);
      past[n] = K.l2_norm(g);
    }
    const double sigma = K.centered_operator_norm();
    const double last = past[horizon];
    if (last == 0.0) tail = 0.0;
    else if (sigma < 1.0) tail = last * sigma / ((1.0 - sigma) * std::sqrt(static_cast<double>(horizon) + 1.0));
    else tail = std::numeric_limits<double>::infinity();
  } else if (auto* m = std::get_if<FunctionOfLinear>(&model)) {
    report.method = "majorant";
    std::vector<double> suffix(m->a.size() + 1, 0.0);
    for (std::size_t k = m->a.size(); k-- > 0;) suffix[k] = suffix[k + 1] + std::abs(m->a[k]);
    for (std::size_t n = 1; n <= horizon; ++n)
      past[n] = n < suffix.size() ? phi_modulus_eval(m->modulus, suffix[n]) : 0.0;
    for (std::size_t n = horizon + 1; n < suffix.size(); ++n)
      tail += phi_modulus_eval(m->modulus, suffix[n]) / std::sqrt(static_cast<double>(n));
  } else if (auto* m = std::get_if<DoublingMap>(&model)) {
    // Decreasing filtration: ||E(X | theta^{-n} B)||_2 = ||K^n f||_2.
    const auto& obs = m->observable;
    double support = 0.0;
    for (const auto& [k, c] : obs.terms()) support = std::max(support, std::abs(static_cast<double>(k[0])));
    for (std::size_t n = 1; n <= horizon; ++n) {
      double sq = 0.0;
      if (n < 63) {
        const std::int64_t scale = std::int64_t{1} << n;
        for (const auto& [k, c] : obs.terms()) {
          if (std::abs(static_cast<double>(k[0])) * static_cast<double>(scale) > support) continue;
          for (auto z : obs.coefficient({k[0] * scale})) sq += std::norm(z);
        }
      }
      past[n] = std::sqrt(sq);
    }
    const double reach = support > 0.0 ? std::floor(std::log2(support)) : 0.0;
    for (double n = static_cast<double>(horizon) + 1; n <= reach; ++n) {
      double sq = 0.0;
      const std::int64_t scale = std::int64_t{1} << static_cast<int>(n);
      for (const auto& [k, c] : obs.terms())
        if (std::abs(static_cast<double>(k[0])) * static_cast<double>(scale) <= support)
          for (auto z : obs.coefficient({k[0] * scale})) sq += std::norm(z);
      tail += std::sqrt(sq) / std::sqrt(n);
    }
  } else {
    report.method = "unavailable";
    report.tail_bound = std::numeric_limits<double>::infinity();
    report.verdict = Verdict::inconclusive;
    return report;
  }

  double ps = 0.0, fs = 0.0;
  for (std::size_t n = 1; n <= horizon; ++n) {
    const double root = std::sqrt(static_cast<double>(n));
    HanbisRow row;
    row.n = n;
    row.past_term = past[n] / root;
    row.future_term = future[n] / root;
    ps += row.past_term;
    fs += row.future_term;
    row.past_partial = ps;
    row.future_partial = fs;
    report.rows.push_back(row);
  }
  report.tail_bound = tail;
  report.verdict = tail < epsilon ? Verdict::finite : Verdict::inconclusive;
  return report;
}

Coupling MartingaleApproximant::coupling() const {
  Coupling c;
  c.kind = kind;
  c.B = B;
  c.h = h;
  c.Ph = Ph;
  return c;
}

MartingaleApproximant approximating_md(const ProcessModel& model, const ProjectionReport& report) {
  if (report.verdict != Verdict::finite)
    throw std::invalid_argument(std::string("approximating_md: projection report is ") + to_string(report.verdict));
  validate(model);
  MartingaleApproximant out;
  out.model_kind = model_kind(model);
  out.model_hash = model_hash(model);

  if (std::holds_alternative<MartingaleDifference>(model)) {
    out.kind = Coupling::Kind::identity;
    const auto var = exact_variance(model);
    if (var) out.l2_norm = std::sqrt(var->matrix().trace());
    else out.l2_norm = projection_norms(model, 2.0).hannan_value;
    return out;
  }
  if (auto* m = std::get_if<LinearProcess>(&model)) {
    out.kind = Coupling::Kind::linear;
    out.B = Eigen::MatrixXd::Zero(m->coeffs.front().rows(), m->coeffs.front().cols());
    for (const auto& A : m->coeffs) out.B += A;
    out.l2_norm = std::sqrt(m->innovation.variance() * out.B.squaredNorm());
    out.series_terms = m->coeffs.size();
    return out;
  }
  if (auto* m = std::get_if<MarkovChainFn>(&model)) {
    out.kind = Coupling::Kind::markov;
    const MarkovKernel& K = m->kernel;
    const double sigma = K.centered_operator_norm();
    auto d_norm = [&K](const Eigen::MatrixXd& h, const Eigen::MatrixXd& Ph) {
      double sum = 0.0;
      const auto S = static_cast<Eigen::Index>(K.states());
      for (Eigen::Index s = 0; s < S; ++s)
        for (Eigen::Index t = 0; t < S; ++t) sum += K.m()(s) * K.P()(s, t) * (h.row(t) - Ph.row(s)).squaredNorm();
      return std::sqrt(sum);
    };
    if (sigma < 1.0 - 1e-12) {
      // h = sum_{n>=0} P^n f, stopped once the bound on the remaining series
      // (at most 2 sigma^k ||P^N f|| / (1 - sigma) in d) is below 1e-10 ||d||.
      Eigen::MatrixXd h = m->f, term = m->f;
      std::size_t n = 0;
      for (; n < kMarkovHorizon; ++n) {
        term = K.apply(term);
        const double remaining = 2.0 * K.l2_norm(term) / (1.0 - sigma);
        const double dn = d_norm(h, K.apply(h));
        out.truncation_error = remaining;
        if (remaining <= 1e-10 * dn || K.l2_norm(term) == 0.0) break;
        h += term;
      }
      out.series_terms = n + 1;
      out.h = h;
    } else {
      // Not contracting on the centered subspace: solve the Poisson equation.
      const auto S = static_cast<Eigen::Index>(K.states());
      const Eigen::MatrixXd Z = Eigen::MatrixXd::Identity(S, S) - K.P() + Eigen::VectorXd::Ones(S) * K.m().transpose();
      out.h = Z.fullPivLu().solve(m->f);
      out.series_terms = 0;
      out.truncation_error = 0.0;
    }
    out.Ph = K.apply(out.h);
    out.l2_norm = d_norm(out.h, out.Ph);
    return out;
  }
  throw std::invalid_argument("approximating_md: no closed-form martingale increment for '" + model_kind(model) + "'");
}

void coupled_partial_sums(const ProcessModel& model, const MartingaleApproximant& approx, std::uint64_t master_seed,
                          std::uint64_t path, std::size_t n_steps, std::vector<double>& S, std::vector<double>& M) {
  if (model_hash(model) != approx.model_hash)
    throw std::invalid_argument("coupled_partial_sums: approximant belongs to a different model");
  const Coupling coupling = approx.coupling();
  PathStream stream(model, master_seed, path, &coupling);
  const std::size_t dim = stream.dim();
  S.assign(n_steps * dim, 0.0);
  M.assign(n_steps * dim, 0.0);
  constexpr std::size_t kChunk = 4096;
  std::vector<double> x(kChunk * dim), d(kChunk * dim);
  std::vector<double> s(dim, 0.0), mm(dim, 0.0);
  for (std::size_t start = 0; start < n_steps; start += kChunk) {
    const std::size_t len = std::min(kChunk, n_steps - start);
    stream.fill(std::span<double>(x.data(), len * dim), std::span<double>(d.data(), len * dim));
    for (std::size_t i = 0; i < len; ++i)
      for (std::size_t a = 0; a < dim; ++a) {
        s[a] += x[i * dim + a];
        mm[a] += d[i * dim + a];
        S[(start + i) * dim + a] = s[a];
        M[(start + i) * dim + a] = mm[a];
      }
  }
}

PathBatch martingale_partial_sums(const MartingaleApproximant& approx, const ProcessModel& model,
                                  const PathBatch& batch) {
  if (batch.model_hash != approx.model_hash || model_hash(model) != batch.model_hash)
    throw std::invalid_argument("martingale_partial_sums: batch, model and approximant do not match");
  PathBatch out = batch;
  out.model_kind = batch.model_kind + ":martingale";
  std::vector<double> S, M;
  for (std::size_t p = 0; p < batch.n_paths; ++p) {
    coupled_partial_sums(model, approx, batch.master_seed, p, batch.n_steps, S, M);
    std::copy(M.begin(), M.end(), out.values.begin() + static_cast<std::ptrdiff_t>(p * batch.n_steps * batch.dim));
  }
  return out;
}

}  // namespace lilab
