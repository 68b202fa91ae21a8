#include "lilab/processes.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>
#include <thread>

#include "lilab/model_io.hpp"

namespace lilab {

// ---------------------------------------------------------------- moduli

ModulusSpec ModulusSpec::concave_custom(std::vector<std::pair<double, double>> table) {
  ModulusSpec s{Kind::concave_custom, 1.0, std::move(table)};
  s.validate();
  return s;
}

void ModulusSpec::validate() const {
  switch (kind) {
    case Kind::concave_sqrt:
      return;
    case Kind::power:
      if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("power modulus: alpha must lie in (0, 1]");
      return;
    case Kind::concave_custom: {
      if (table.size() < 2) throw std::invalid_argument("custom modulus: need at least two nodes");
      if (table.front().first != 0.0 || table.front().second != 0.0)
        throw std::invalid_argument("custom modulus: first node must be (0, 0)");
      double prev_slope = std::numeric_limits<double>::infinity();
      for (std::size_t i = 1; i < table.size(); ++i) {
        const auto [x0, y0] = table[i - 1];
        const auto [x1, y1] = table[i];
        if (!(x1 > x0)) throw std::invalid_argument("custom modulus: nodes must be strictly increasing in x");
        if (y1 < y0) throw std::invalid_argument("custom modulus: phi must be non-decreasing");
        if (y1 > 1.0) throw std::invalid_argument("custom modulus: phi must be bounded by 1");
        const double slope = (y1 * y1 - y0 * y0) / (x1 - x0);
        if (slope > prev_slope * (1.0 + 1e-12))
          throw std::invalid_argument("custom modulus: phi^2 must be concave");
        prev_slope = slope;
      }
      return;
    }
  }
}

double phi_modulus_eval(const ModulusSpec& phi, double x) {
  if (!(x >= 0.0)) throw std::invalid_argument("phi_modulus_eval: x must be non-negative");
  switch (phi.kind) {
    case ModulusSpec::Kind::concave_sqrt:
      return std::min(1.0, std::sqrt(x));
    case ModulusSpec::Kind::power:
      return std::min(1.0, std::pow(x, phi.alpha));
    case ModulusSpec::Kind::concave_custom: {
      const auto& t = phi.table;
      if (x >= t.back().first) return t.back().second;
      auto it = std::upper_bound(t.begin(), t.end(), x,
                                 [](double v, const auto& node) { return v < node.first; });
      const auto [x1, y1] = *it;
      const auto [x0, y0] = *(it - 1);
      const double w = (x - x0) / (x1 - x0);
      return std::sqrt((1.0 - w) * y0 * y0 + w * y1 * y1);
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------- equality

bool LinearProcess::operator==(const LinearProcess& o) const {
  if (!(innovation == o.innovation) || first_index != o.first_index || coeffs.size() != o.coeffs.size())
    return false;
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    if (coeffs[i].rows() != o.coeffs[i].rows() || coeffs[i].cols() != o.coeffs[i].cols() ||
        coeffs[i] != o.coeffs[i])
      return false;
  }
  return true;
}

bool MarkovChainFn::operator==(const MarkovChainFn& o) const {
  return kernel.P().rows() == o.kernel.P().rows() && kernel.P() == o.kernel.P() &&
         kernel.m() == o.kernel.m() && f.rows() == o.f.rows() && f.cols() == o.f.cols() && f == o.f;
}

bool TorusAutomorphism::operator==(const TorusAutomorphism& o) const {
  return M.rows() == o.M.rows() && M.cols() == o.M.cols() && M == o.M && observable == o.observable;
}

// ---------------------------------------------------------------- functions

double apply_function(FunctionOfLinear::Function f, double y) {
  switch (f) {
    case FunctionOfLinear::Function::abs:
      return std::abs(y);
    case FunctionOfLinear::Function::cos:
      return std::cos(y);
    case FunctionOfLinear::Function::square:
      return y * y;
    case FunctionOfLinear::Function::signed_sqrt:
      return std::copysign(std::sqrt(std::abs(y)), y);
  }
  return 0.0;
}

ModulusSpec default_modulus(FunctionOfLinear::Function f) {
  return f == FunctionOfLinear::Function::signed_sqrt ? ModulusSpec::concave_sqrt() : ModulusSpec::power(1.0);
}

double default_growth(FunctionOfLinear::Function f) {
  return f == FunctionOfLinear::Function::square ? 2.0 : 1.0;
}

// ---------------------------------------------------------------- validation

namespace {

using IntMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

long double det_exactish(const IntMatrix& A) {
  Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic> L = A.cast<long double>();
  return L.determinant();
}

void validate_torus(const TorusAutomorphism& t) {
  const auto d = t.M.rows();
  if (d == 0 || t.M.cols() != d) throw std::invalid_argument("torus automorphism: M must be square");
  if (static_cast<std::size_t>(d) != t.observable.torus_dim())
    throw std::invalid_argument("torus automorphism: observable dimension does not match M");
  if (std::llround(std::abs(det_exactish(t.M))) != 1)
    throw std::invalid_argument("torus automorphism: |det M| must be 1");
  // A root-of-unity eigenvalue of order k satisfies euler_phi(k) <= d, hence k <= 2 d^2.
  IntMatrix power = IntMatrix::Identity(d, d);
  const auto k_max = 2 * d * d + 2;
  for (Eigen::Index k = 1; k <= k_max; ++k) {
    power = power * t.M;
    if (power.cwiseAbs().maxCoeff() > (std::int64_t{1} << 40)) break;
    const IntMatrix shifted = power - IntMatrix::Identity(d, d);
    if (std::llround(det_exactish(shifted)) == 0)
      throw std::invalid_argument("torus automorphism: M has a root-of-unity eigenvalue (not ergodic)");
  }
  t.observable.validate();
}

}  // namespace

void validate(const ProcessModel& model) {
  std::visit(
      [](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, MartingaleDifference>) {
          m.innovation.validate();
          if (m.g == MartingaleDifference::Map::sign && !m.innovation.symmetric())
            throw std::invalid_argument("martingale difference: sign map needs a symmetric law to be centered");
          if (m.q > 0 && !(std::abs(m.h_scale) < 1.0))
            throw std::invalid_argument("martingale difference: |h_scale| must be < 1");
        } else if constexpr (std::is_same_v<T, LinearProcess>) {
          m.innovation.validate();
          if (m.coeffs.empty()) throw std::invalid_argument("linear process: no coefficients");
          for (const auto& A : m.coeffs) {
            if (A.rows() != m.coeffs.front().rows() || A.cols() != static_cast<Eigen::Index>(m.innovation.dim))
              throw std::invalid_argument("linear process: coefficient shape mismatch");
            if (!A.allFinite()) throw std::invalid_argument("linear process: non-finite coefficient");
          }
          if (m.coeffs.front().rows() == 0) throw std::invalid_argument("linear process: empty output");
        } else if constexpr (std::is_same_v<T, FunctionOfLinear>) {
          m.innovation.validate();
          if (m.innovation.dim != 1) throw std::invalid_argument("function of linear process: scalar innovations only");
          if (m.a.empty()) throw std::invalid_argument("function of linear process: no coefficients");
          m.modulus.validate();
          if (!(m.growth_r >= 1.0)) throw std::invalid_argument("function of linear process: growth r must be >= 1");
          if (m.innovation.law == InnovationSpec::Law::centered_pareto && !(m.innovation.alpha > 2.0 * m.growth_r))
            throw std::invalid_argument("function of linear process: innovations need a finite 2r-th moment");
        } else if constexpr (std::is_same_v<T, MarkovChainFn>) {
          if (m.f.rows() != static_cast<Eigen::Index>(m.kernel.states()) || m.f.cols() == 0)
            throw std::invalid_argument("markov chain: observable shape mismatch");
          const Eigen::RowVectorXd mean = m.kernel.m().transpose() * m.f;
          if (mean.cwiseAbs().maxCoeff() > 1e-10) throw std::invalid_argument("markov chain: observable not centered");
        } else if constexpr (std::is_same_v<T, DoublingMap>) {
          if (m.observable.torus_dim() != 1) throw std::invalid_argument("doubling map: observable must live on the circle");
          m.observable.validate();
        } else {
          validate_torus(m);
        }
      },
      model);
}

std::size_t model_dim(const ProcessModel& model) {
  return std::visit(
      [](const auto& m) -> std::size_t {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, MartingaleDifference>) return m.innovation.dim;
        else if constexpr (std::is_same_v<T, LinearProcess>) return m.out_dim();
        else if constexpr (std::is_same_v<T, FunctionOfLinear>) return 1;
        else if constexpr (std::is_same_v<T, MarkovChainFn>) return m.dim();
        else return m.observable.out_dim();
      },
      model);
}

std::string model_kind(const ProcessModel& model) {
  static const char* names[] = {"martingale_difference", "linear",       "function_of_linear",
                                "markov_chain",          "doubling_map", "torus_automorphism"};
  return names[model.index()];
}

// ---------------------------------------------------------------- builders

ProcessModel make_martingale_difference(InnovationSpec innovation, MartingaleDifference::Map g,
                                        std::size_t q, double h_scale) {
  ProcessModel model = MartingaleDifference{innovation, g, q, q == 0 ? 0.0 : h_scale};
  validate(model);
  return model;
}

ProcessModel make_linear(InnovationSpec innovation, std::vector<Eigen::MatrixXd> coeffs, int first_index) {
  ProcessModel model = LinearProcess{innovation, first_index, std::move(coeffs)};
  validate(model);
  return model;
}

ProcessModel make_linear_scalar(InnovationSpec innovation, const std::vector<double>& a, int first_index) {
  std::vector<Eigen::MatrixXd> coeffs;
  const auto d = static_cast<Eigen::Index>(innovation.dim);
  for (double v : a) coeffs.push_back(v * Eigen::MatrixXd::Identity(d, d));
  return make_linear(innovation, std::move(coeffs), first_index);
}

ProcessModel make_function_of_linear(InnovationSpec innovation, std::vector<double> a,
                                     FunctionOfLinear::Function f, std::optional<ModulusSpec> modulus,
                                     std::optional<double> growth_r, std::optional<double> centering) {
  FunctionOfLinear m{innovation, std::move(a), f, modulus.value_or(default_modulus(f)),
                     growth_r.value_or(default_growth(f)), 0.0};
  validate(ProcessModel{m});
  if (centering) {
    m.centering = *centering;
  } else {
    constexpr std::size_t kSamples = 10'000'000;
    StreamRng rng(0x5EEDC0FFEEULL, 0, Stream::oracle);
    const std::size_t K = m.a.size();
    std::vector<double> ring(K, 0.0);
    for (std::size_t i = 0; i + 1 < K; ++i) ring[i] = innovation.sample(rng);
    // Kahan summation keeps the 10^7-term mean accurate to rounding.
    double sum = 0.0, comp = 0.0;
    std::size_t head = K - 1;
    for (std::size_t s = 0; s < kSamples; ++s) {
      ring[head] = innovation.sample(rng);
      double y = 0.0;
      for (std::size_t k = 0; k < K; ++k) y += m.a[k] * ring[(head + K - k) % K];
      const double term = apply_function(f, y) - comp;
      const double t = sum + term;
      comp = (t - sum) - term;
      sum = t;
      head = (head + 1) % K;
    }
    m.centering = sum / static_cast<double>(kSamples);
  }
  return m;
}

ProcessModel make_markov_chain(const Eigen::MatrixXd& P, const Eigen::MatrixXd& f, std::optional<Eigen::VectorXd> m) {
  MarkovKernel kernel = MarkovKernel::make(P, std::move(m));
  if (f.rows() != static_cast<Eigen::Index>(kernel.states()))
    throw std::invalid_argument("markov chain: observable needs one row per state");
  ProcessModel model = MarkovChainFn{kernel, kernel.center(f)};
  validate(model);
  return model;
}

ProcessModel make_doubling_map(FourierObservable observable) {
  ProcessModel model = DoublingMap{std::move(observable)};
  validate(model);
  return model;
}

ProcessModel make_torus_automorphism(IntMatrix M, FourierObservable observable) {
  ProcessModel model = TorusAutomorphism{std::move(M), std::move(observable)};
  validate(model);
  return model;
}

// ---------------------------------------------------------------- windows

bool innovation_driven(const ProcessModel& model) { return model.index() <= 2; }

const InnovationSpec& innovation_of(const ProcessModel& model) {
  if (auto* m = std::get_if<MartingaleDifference>(&model)) return m->innovation;
  if (auto* m = std::get_if<LinearProcess>(&model)) return m->innovation;
  if (auto* m = std::get_if<FunctionOfLinear>(&model)) return m->innovation;
  throw std::invalid_argument("model '" + model_kind(model) + "' is not driven by i.i.d. innovations");
}

InnovationWindow innovation_window(const ProcessModel& model) {
  if (auto* m = std::get_if<MartingaleDifference>(&model)) return {m->q, 0};
  if (auto* m = std::get_if<LinearProcess>(&model))
    return {static_cast<std::size_t>(std::max(m->last_index(), 0)),
            static_cast<std::size_t>(std::max(-m->first_index, 0))};
  if (auto* m = std::get_if<FunctionOfLinear>(&model)) return {m->a.size() - 1, 0};
  throw std::invalid_argument("model '" + model_kind(model) + "' is not driven by i.i.d. innovations");
}

namespace {

inline double g_map(MartingaleDifference::Map g, double x) {
  return g == MartingaleDifference::Map::identity ? x : (x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0));
}

}  // namespace

void eval_window(const ProcessModel& model, std::span<const double> window, std::span<double> out) {
  const InnovationWindow w = innovation_window(model);
  const std::size_t idim = innovation_of(model).dim;
  if (window.size() != w.length() * idim) throw std::invalid_argument("eval_window: window has wrong length");
  auto xi = [&](std::size_t offset, std::size_t c) { return window[offset * idim + c]; };

  if (auto* m = std::get_if<MartingaleDifference>(&model)) {
    for (std::size_t c = 0; c < idim; ++c) {
      double h = 1.0;
      if (m->q > 0) {
        double s = 0.0;
        for (std::size_t j = 1; j <= m->q; ++j) s += xi(w.past - j, c);
        h = 1.0 + m->h_scale * std::tanh(s);
      }
      out[c] = g_map(m->g, xi(w.past, c)) * h;
    }
  } else if (auto* m = std::get_if<LinearProcess>(&model)) {
    const std::size_t od = m->out_dim();
    for (std::size_t a = 0; a < od; ++a) out[a] = 0.0;
    for (std::size_t i = 0; i < m->coeffs.size(); ++i) {
      const int lag = m->first_index + static_cast<int>(i);
      const std::size_t offset = static_cast<std::size_t>(static_cast<int>(w.past) - lag);
      const auto& A = m->coeffs[i];
      for (std::size_t a = 0; a < od; ++a)
        for (std::size_t c = 0; c < idim; ++c) out[a] += A(a, c) * xi(offset, c);
    }
  } else if (auto* m = std::get_if<FunctionOfLinear>(&model)) {
    double y = 0.0;
    for (std::size_t k = 0; k < m->a.size(); ++k) y += m->a[k] * xi(w.past - k, 0);
    out[0] = apply_function(m->f, y) - m->centering;
  }
}

std::vector<double> innovation_sequence(const ProcessModel& model, std::uint64_t master_seed,
                                        std::uint64_t path, std::size_t count) {
  const InnovationSpec& spec = innovation_of(model);
  StreamRng rng(master_seed, path, Stream::innovations);
  std::vector<double> out(count * spec.dim);
  for (double& v : out) v = spec.sample(rng);
  return out;
}

// ---------------------------------------------------------------- streams

class PathStream::Impl {
 public:
  virtual ~Impl() = default;
  virtual std::size_t dim() const = 0;
  virtual void fill(std::span<double> x, std::span<double> d) = 0;
};

namespace {

/// Chronological ring of innovation vectors exposing the last `length`
/// entries as one contiguous span (every entry is stored twice).
class InnovationRing {
 public:
  InnovationRing(std::size_t length, std::size_t idim)
      : length_(length), idim_(idim), buffer_(2 * length * idim, 0.0) {}

  void push(const InnovationSpec& spec, StreamRng& rng) {
    const std::size_t slot = count_ % length_;
    for (std::size_t c = 0; c < idim_; ++c) {
      const double v = spec.sample(rng);
      buffer_[slot * idim_ + c] = v;
      buffer_[(slot + length_) * idim_ + c] = v;
    }
    ++count_;
  }

  /// Last `length` innovations, oldest first.
  std::span<const double> window() const {
    const std::size_t start = count_ % length_;
    return {buffer_.data() + start * idim_, length_ * idim_};
  }

 private:
  std::size_t length_;
  std::size_t idim_;
  std::size_t count_ = 0;
  std::vector<double> buffer_;
};

class MdsStream final : public PathStream::Impl {
 public:
  MdsStream(const MartingaleDifference& m, std::uint64_t seed, std::uint64_t path)
      : m_(m), rng_(seed, path, Stream::innovations), ring_(m.q + 1, m.innovation.dim) {
    for (std::size_t i = 0; i < m.q; ++i) ring_.push(m.innovation, rng_);
  }
  std::size_t dim() const override { return m_.innovation.dim; }

  void fill(std::span<double> x, std::span<double> d) override {
    const std::size_t idim = m_.innovation.dim;
    const std::size_t steps = x.size() / idim;
    const bool fast = m_.q == 0 && m_.g == MartingaleDifference::Map::identity;
    for (std::size_t n = 0; n < steps; ++n) {
      double* out = x.data() + n * idim;
      if (fast) {
        for (std::size_t c = 0; c < idim; ++c) out[c] = m_.innovation.sample(rng_);
      } else {
        ring_.push(m_.innovation, rng_);
        const auto w = ring_.window();
        for (std::size_t c = 0; c < idim; ++c) {
          double h = 1.0;
          if (m_.q > 0) {
            double s = 0.0;
            for (std::size_t j = 1; j <= m_.q; ++j) s += w[(m_.q - j) * idim + c];
            h = 1.0 + m_.h_scale * std::tanh(s);
          }
          out[c] = g_map(m_.g, w[m_.q * idim + c]) * h;
        }
      }
    }
    if (!d.empty()) std::copy(x.begin(), x.end(), d.begin());
  }

 private:
  const MartingaleDifference& m_;
  StreamRng rng_;
  InnovationRing ring_;
};

class LinearStream final : public PathStream::Impl {
 public:
  LinearStream(const ProcessModel& model, const LinearProcess& m, std::uint64_t seed, std::uint64_t path,
               const Coupling* coupling)
      : m_(m),
        window_(innovation_window(model)),
        rng_(seed, path, Stream::innovations),
        ring_(window_.length(), m.innovation.dim),
        coupling_(coupling) {
    for (std::size_t i = 0; i + 1 < window_.length(); ++i) ring_.push(m.innovation, rng_);
    const std::size_t od = m.out_dim(), idim = m.innovation.dim;
    // Flattened (offset, a, c) coefficient table.
    for (std::size_t i = 0; i < m.coeffs.size(); ++i) {
      const int lag = m.first_index + static_cast<int>(i);
      offsets_.push_back(static_cast<std::size_t>(static_cast<int>(window_.past) - lag));
      for (std::size_t a = 0; a < od; ++a)
        for (std::size_t c = 0; c < idim; ++c) table_.push_back(m.coeffs[i](a, c));
    }
    scalar_ = od == 1 && idim == 1;
  }
  std::size_t dim() const override { return m_.out_dim(); }

  void fill(std::span<double> x, std::span<double> d) override {
    const std::size_t od = m_.out_dim(), idim = m_.innovation.dim;
    const std::size_t steps = x.size() / od;
    for (std::size_t n = 0; n < steps; ++n) {
      ring_.push(m_.innovation, rng_);
      const double* w = ring_.window().data();
      double* out = x.data() + n * od;
      if (scalar_) {
        double acc = 0.0;
        for (std::size_t i = 0; i < offsets_.size(); ++i) acc += table_[i] * w[offsets_[i]];
        out[0] = acc;
      } else {
        for (std::size_t a = 0; a < od; ++a) out[a] = 0.0;
        const double* coef = table_.data();
        for (std::size_t i = 0; i < offsets_.size(); ++i) {
          const double* xi = w + offsets_[i] * idim;
          for (std::size_t a = 0; a < od; ++a)
            for (std::size_t c = 0; c < idim; ++c) out[a] += (*coef++) * xi[c];
        }
      }
      if (!d.empty()) {
        const double* xi = w + window_.past * idim;
        for (std::size_t a = 0; a < od; ++a) {
          double acc = 0.0;
          for (std::size_t c = 0; c < idim; ++c) acc += coupling_->B(a, c) * xi[c];
          d[n * od + a] = acc;
        }
      }
    }
  }

 private:
  const LinearProcess& m_;
  InnovationWindow window_;
  StreamRng rng_;
  InnovationRing ring_;
  const Coupling* coupling_;
  std::vector<std::size_t> offsets_;
  std::vector<double> table_;
  bool scalar_ = false;
};

class FunctionOfLinearStream final : public PathStream::Impl {
 public:
  FunctionOfLinearStream(const FunctionOfLinear& m, std::uint64_t seed, std::uint64_t path)
      : m_(m), rng_(seed, path, Stream::innovations), ring_(m.a.size(), 1) {
    for (std::size_t i = 0; i + 1 < m.a.size(); ++i) ring_.push(m.innovation, rng_);
  }
  std::size_t dim() const override { return 1; }

  void fill(std::span<double> x, std::span<double>) override {
    const std::size_t K = m_.a.size();
    for (double& out : x) {
      ring_.push(m_.innovation, rng_);
      const double* w = ring_.window().data();
      double y = 0.0;
      for (std::size_t k = 0; k < K; ++k) y += m_.a[k] * w[K - 1 - k];
      out = apply_function(m_.f, y) - m_.centering;
    }
  }

 private:
  const FunctionOfLinear& m_;
  StreamRng rng_;
  InnovationRing ring_;
};

class MarkovStream final : public PathStream::Impl {
 public:
  MarkovStream(const MarkovChainFn& m, std::uint64_t seed, std::uint64_t path, const Coupling* coupling)
      : m_(m), rng_(seed, path, Stream::innovations), coupling_(coupling) {
    state_ = m.kernel.sample_initial(rng_);  // W_{-1}
  }
  std::size_t dim() const override { return m_.dim(); }

  void fill(std::span<double> x, std::span<double> d) override {
    const std::size_t dim = m_.dim();
    const std::size_t steps = x.size() / dim;
    for (std::size_t n = 0; n < steps; ++n) {
      const std::size_t prev = state_;
      state_ = m_.kernel.step(prev, rng_);
      for (std::size_t a = 0; a < dim; ++a) x[n * dim + a] = m_.f(state_, a);
      if (!d.empty()) {
        for (std::size_t a = 0; a < dim; ++a)
          d[n * dim + a] = coupling_->h(state_, a) - coupling_->Ph(prev, a);
      }
    }
  }

 private:
  const MarkovChainFn& m_;
  StreamRng rng_;
  const Coupling* coupling_;
  std::size_t state_ = 0;
};

class DoublingStream final : public PathStream::Impl {
 public:
  DoublingStream(const DoublingMap& m, std::uint64_t seed, std::uint64_t path)
      : m_(m), rng_(seed, path, Stream::innovations) {
    point_ = rng_();
  }
  std::size_t dim() const override { return m_.observable.out_dim(); }

  void fill(std::span<double> x, std::span<double>) override {
    const std::size_t dim = this->dim();
    const std::size_t steps = x.size() / dim;
    for (std::size_t n = 0; n < steps; ++n) {
      m_.observable.evaluate(std::span<const std::uint64_t>(&point_, 1), x.subspan(n * dim, dim));
      // theta x = 2x mod 1: shift out the leading binary digit and append a
      // fresh digit of the (infinite) uniform expansion.
      point_ = (point_ << 1) | static_cast<std::uint64_t>(rng_.bit());
    }
  }

 private:
  const DoublingMap& m_;
  StreamRng rng_;
  std::uint64_t point_ = 0;
};

class TorusStream final : public PathStream::Impl {
 public:
  TorusStream(const TorusAutomorphism& m, std::uint64_t seed, std::uint64_t path)
      : m_(m), rng_(seed, path, Stream::innovations) {
    const auto d = static_cast<std::size_t>(m.M.rows());
    point_.resize(d);
    next_.resize(d);
    for (auto& v : point_) v = rng_();
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) matrix_.push_back(static_cast<std::uint64_t>(m.M(i, j)));
  }
  std::size_t dim() const override { return m_.observable.out_dim(); }

  void fill(std::span<double> x, std::span<double>) override {
    const std::size_t dim = this->dim();
    const std::size_t d = point_.size();
    const std::size_t steps = x.size() / dim;
    for (std::size_t n = 0; n < steps; ++n) {
      m_.observable.evaluate(point_, x.subspan(n * dim, dim));
      for (std::size_t i = 0; i < d; ++i) {
        std::uint64_t acc = 0;
        for (std::size_t j = 0; j < d; ++j) acc += matrix_[i * d + j] * point_[j];
        next_[i] = acc;
      }
      point_.swap(next_);
    }
  }

 private:
  const TorusAutomorphism& m_;
  StreamRng rng_;
  std::vector<std::uint64_t> point_, next_, matrix_;
};

}  // namespace

PathStream::PathStream(const ProcessModel& model, std::uint64_t master_seed, std::uint64_t path,
                       const Coupling* coupling) {
  if (path > std::numeric_limits<std::uint32_t>::max())
    throw std::out_of_range("PathStream: path index exceeds 2^32 - 1");
  if (coupling) {
    const bool ok = (coupling->kind == Coupling::Kind::identity && std::holds_alternative<MartingaleDifference>(model)) ||
                    (coupling->kind == Coupling::Kind::linear && std::holds_alternative<LinearProcess>(model)) ||
                    (coupling->kind == Coupling::Kind::markov && std::holds_alternative<MarkovChainFn>(model));
    if (!ok) throw std::invalid_argument("PathStream: coupling does not match model '" + model_kind(model) + "'");
  }
  if (auto* m = std::get_if<MartingaleDifference>(&model)) impl_ = std::make_unique<MdsStream>(*m, master_seed, path);
  else if (auto* m = std::get_if<LinearProcess>(&model)) impl_ = std::make_unique<LinearStream>(model, *m, master_seed, path, coupling);
  else if (auto* m = std::get_if<FunctionOfLinear>(&model)) impl_ = std::make_unique<FunctionOfLinearStream>(*m, master_seed, path);
  else if (auto* m = std::get_if<MarkovChainFn>(&model)) impl_ = std::make_unique<MarkovStream>(*m, master_seed, path, coupling);
  else if (auto* m = std::get_if<DoublingMap>(&model)) impl_ = std::make_unique<DoublingStream>(*m, master_seed, path);
  else impl_ = std::make_unique<TorusStream>(std::get<TorusAutomorphism>(model), master_seed, path);
  coupled_ = coupling != nullptr;
}

PathStream::~PathStream() = default;
PathStream::PathStream(PathStream&&) noexcept = default;
PathStream& PathStream::operator=(PathStream&&) noexcept = default;

std::size_t PathStream::dim() const noexcept { return impl_->dim(); }

void PathStream::fill(std::span<double> x, std::span<double> d) {
  if (x.size() % impl_->dim() != 0) throw std::invalid_argument("PathStream::fill: buffer not a multiple of dim");
  if (!d.empty()) {
    if (!coupled_) throw std::logic_error("PathStream::fill: no coupling attached");
    if (d.size() != x.size()) throw std::invalid_argument("PathStream::fill: increment buffer size mismatch");
  }
  impl_->fill(x, d);
}

// ---------------------------------------------------------------- batches

PathBatch simulate(const ProcessModel& model, std::size_t n_steps, std::size_t n_paths, std::uint64_t master_seed,
                   std::size_t memory_budget, unsigned workers) {
  validate(model);
  if (n_steps == 0 || n_paths == 0) throw std::invalid_argument("simulate: n_steps and n_paths must be >= 1");
  const std::size_t dim = model_dim(model);
  const long double bytes = static_cast<long double>(n_steps) * n_paths * dim * sizeof(double);
  if (bytes > static_cast<long double>(memory_budget))
    throw std::length_error("simulate: batch exceeds the memory budget; request streaming mode");

  PathBatch batch;
  batch.model_kind = model_kind(model);
  batch.model_hash = model_hash(model);
  batch.n_steps = n_steps;
  batch.n_paths = n_paths;
  batch.master_seed = master_seed;
  batch.dim = dim;
  batch.values.resize(n_steps * n_paths * dim);

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t p = next++; p < n_paths; p = next++) {
      PathStream stream(model, master_seed, p);
      stream.fill(std::span<double>(batch.values.data() + p * n_steps * dim, n_steps * dim));
    }
  };
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n_paths)));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return batch;
}

// ---------------------------------------------------------------- moments

namespace {

Eigen::MatrixXd fourier_lag_covariance(const FourierObservable& obs, const std::map<Frequency, Frequency>& image) {
  // E[f_a(x) f_b(theta^m x)] = sum_k conj(c_{image(k), a}) c_{k, b}
  const auto dim = static_cast<Eigen::Index>(obs.out_dim());
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& [k, ck] : obs.terms()) {
    auto it = image.find(k);
    if (it == image.end()) continue;
    const Coefficient cj = obs.coefficient(it->second);
    for (Eigen::Index a = 0; a < dim; ++a)
      for (Eigen::Index b = 0; b < dim; ++b) C(a, b) += (std::conj(cj[a]) * ck[b]).real();
  }
  return C;
}

double abs_max(const Frequency& k) {
  double v = 0.0;
  for (auto c : k) v = std::max(v, std::abs(static_cast<double>(c)));
  return v;
}

}  // namespace

std::optional<CovarianceOperator> exact_variance(const ProcessModel& model) {
  if (auto* m = std::get_if<MartingaleDifference>(&model)) {
    const double eg2 = m->g == MartingaleDifference::Map::identity ? m->innovation.variance() : 1.0;
    double eh2 = 1.0;
    if (m->q > 0) {
      if (m->innovation.law != InnovationSpec::Law::rademacher) return std::nullopt;
      // Sum of q Rademacher signs equals 2j - q with probability C(q, j) / 2^q.
      eh2 = 0.0;
      double weight = std::ldexp(1.0, -static_cast<int>(m->q));
      for (std::size_t j = 0; j <= m->q; ++j) {
        const double h = 1.0 + m->h_scale * std::tanh(2.0 * static_cast<double>(j) - static_cast<double>(m->q));
        eh2 += weight * h * h;
        weight = weight * static_cast<double>(m->q - j) / static_cast<double>(j + 1);
      }
    }
    const auto d = static_cast<Eigen::Index>(m->innovation.dim);
    return CovarianceOperator(eg2 * eh2 * Eigen::MatrixXd::Identity(d, d));
  }
  if (auto* m = std::get_if<LinearProcess>(&model)) {
    const auto od = static_cast<Eigen::Index>(m->out_dim());
    Eigen::MatrixXd V = Eigen::MatrixXd::Zero(od, od);
    for (const auto& A : m->coeffs) V += A * A.transpose();
    return CovarianceOperator(m->innovation.variance() * V);
  }
  if (std::holds_alternative<FunctionOfLinear>(model)) return std::nullopt;
  if (auto* m = std::get_if<MarkovChainFn>(&model)) {
    return CovarianceOperator(m->f.transpose() * m->kernel.m().asDiagonal() * m->f);
  }
  const FourierObservable& obs = std::holds_alternative<DoublingMap>(model)
                                     ? std::get<DoublingMap>(model).observable
                                     : std::get<TorusAutomorphism>(model).observable;
  std::map<Frequency, Frequency> identity;
  for (const auto& [k, c] : obs.terms()) identity.emplace(k, k);
  return CovarianceOperator(fourier_lag_covariance(obs, identity));
}

std::optional<CovarianceOperator> exact_long_run_covariance(const ProcessModel& model) {
  if (std::holds_alternative<MartingaleDifference>(model)) return exact_variance(model);
  if (auto* m = std::get_if<LinearProcess>(&model)) {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m->coeffs.front().rows(), m->coeffs.front().cols());
    for (const auto& A : m->coeffs) B += A;
    return CovarianceOperator(m->innovation.variance() * B * B.transpose());
  }
  if (std::holds_alternative<FunctionOfLinear>(model)) return std::nullopt;
  if (auto* m = std::get_if<MarkovChainFn>(&model)) {
    // h = sum_n P^n f solves (I - P + 1 m^T) h = f for centered f.
    const auto S = static_cast<Eigen::Index>(m->kernel.states());
    const Eigen::MatrixXd Z = Eigen::MatrixXd::Identity(S, S) - m->kernel.P() +
                              Eigen::VectorXd::Ones(S) * m->kernel.m().transpose();
    const Eigen::MatrixXd h = Z.partialPivLu().solve(m->f);
    const auto D = m->kernel.m().asDiagonal();
    const Eigen::MatrixXd fDh = m->f.transpose() * D * h;
    const Eigen::MatrixXd K = fDh + fDh.transpose() - m->f.transpose() * D * m->f;
    return CovarianceOperator::project_psd(K);
  }
  const bool doubling = std::holds_alternative<DoublingMap>(model);
  const FourierObservable& obs =
      doubling ? std::get<DoublingMap>(model).observable : std::get<TorusAutomorphism>(model).observable;
  std::map<Frequency, Frequency> identity;
  for (const auto& [k, c] : obs.terms()) identity.emplace(k, k);
  Eigen::MatrixXd K = fourier_lag_covariance(obs, identity);
  if (obs.empty()) return CovarianceOperator(K);

  double support = 0.0;
  for (const auto& [k, c] : obs.terms()) support = std::max(support, abs_max(k));
  // Follow every frequency along k -> M^T k until it leaves the support for good.
  std::map<Frequency, Frequency> image = identity;
  constexpr double kEscape = 1e12;
  for (int m = 1; m < 10000 && !image.empty(); ++m) {
    std::map<Frequency, Frequency> next;
    for (const auto& [k, j] : image) {
      Frequency mapped(j.size());
      if (doubling) {
        mapped[0] = 2 * j[0];
      } else {
        const auto& M = std::get<TorusAutomorphism>(model).M;
        for (Eigen::Index r = 0; r < M.cols(); ++r) {
          std::int64_t acc = 0;
          for (Eigen::Index c = 0; c < M.rows(); ++c) acc += M(c, r) * j[static_cast<std::size_t>(c)];
          mapped[static_cast<std::size_t>(r)] = acc;
        }
      }
      if (abs_max(mapped) < kEscape) next.emplace(k, std::move(mapped));
    }
    image = std::move(next);
    const Eigen::MatrixXd C = fourier_lag_covariance(obs, image);
    K += C + C.transpose();
    if (doubling) {
      bool any_inside = false;
      for (const auto& [k, j] : image) any_inside = any_inside || abs_max(j) <= support;
      if (!any_inside) break;
    }
  }
  return CovarianceOperator::project_psd(K);
}

// ---------------------------------------------------------------- cache io

namespace {

constexpr char kMagic[8] = {'L', 'I', 'L', 'A', 'B', 'P', 'B', '1'};

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("path cache: truncated header");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

}  // namespace

void export_columnar(const PathBatch& batch, const std::filesystem::path& file) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw std::runtime_error("path cache: cannot open " + file.string());
  os.write(kMagic, 8);
  put_u64(os, batch.model_hash);
  put_u64(os, batch.master_seed);
  put_u64(os, batch.n_steps);
  put_u64(os, batch.n_paths);
  put_u64(os, batch.dim);
  for (std::size_t a = 0; a < batch.dim; ++a)
    for (std::size_t p = 0; p < batch.n_paths; ++p)
      for (std::size_t n = 0; n < batch.n_steps; ++n) {
        std::uint64_t bits;
        std::memcpy(&bits, &batch.values[(p * batch.n_steps + n) * batch.dim + a], 8);
        put_u64(os, bits);
      }
  if (!os) throw std::runtime_error("path cache: write failed for " + file.string());
}

PathBatch import_columnar(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw std::runtime_error("path cache: cannot open " + file.string());
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw std::runtime_error("path cache: bad magic");
  PathBatch batch;
  batch.model_hash = get_u64(is);
  batch.master_seed = get_u64(is);
  batch.n_steps = get_u64(is);
  batch.n_paths = get_u64(is);
  batch.dim = get_u64(is);
  batch.values.resize(batch.n_steps * batch.n_paths * batch.dim);
  for (std::size_t a = 0; a < batch.dim; ++a)
    for (std::size_t p = 0; p < batch.n_paths; ++p)
      for (std::size_t n = 0; n < batch.n_steps; ++n) {
        const std::uint64_t bits = get_u64(is);
        std::memcpy(&batch.values[(p * batch.n_steps + n) * batch.dim + a], &bits, 8);
      }
  return batch;
}

}  // namespace lilab
