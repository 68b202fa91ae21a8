#include "lilab/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "lilab/filtration.hpp"

namespace lilab {

namespace {

const Json& need(const Json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(where + ": missing key '" + key + "'");
  return *it;
}

double get_real(const Json& j, const char* key, double fallback, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number()) throw ConfigError(where + ": '" + key + "' must be a number");
  return it->get<double>();
}

std::uint64_t get_count(const Json& j, const char* key, std::uint64_t fallback, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number_unsigned()) throw ConfigError(where + ": '" + key + "' must be a non-negative integer");
  return it->get<std::uint64_t>();
}

bool get_bool(const Json& j, const char* key, bool fallback, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_boolean()) throw ConfigError(where + ": '" + key + "' must be a boolean");
  return it->get<bool>();
}

std::string get_string(const Json& j, const char* key, std::string fallback, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_string()) throw ConfigError(where + ": '" + key + "' must be a string");
  return it->get<std::string>();
}

std::vector<std::size_t> get_grid(const Json& j, const char* key, const std::string& where) {
  std::vector<std::size_t> out;
  auto it = j.find(key);
  if (it == j.end()) return out;
  if (!it->is_array()) throw ConfigError(where + ": '" + key + "' must be an array");
  for (const auto& v : *it) {
    if (!v.is_number_unsigned()) throw ConfigError(where + ": '" + key + "' entries must be non-negative integers");
    out.push_back(v.get<std::size_t>());
  }
  return out;
}

}  // namespace

Json norm_spec_to_json(const NormSpec& space) {
  if (space.kind() == NormSpec::Kind::euclidean) return {{"kind", "euclidean"}, {"dim", space.dim()}};
  return {{"kind", "weighted_lr"}, {"r", space.r()}, {"weights", space.weights()}};
}

NormSpec norm_spec_from_json(const Json& j) {
  require_keys(j, "space", {"kind", "dim", "r", "weights"});
  const std::string kind = get_string(j, "kind", "euclidean", "space");
  try {
    if (kind == "euclidean") {
      if (j.contains("r") || j.contains("weights")) throw ConfigError("space: euclidean takes only 'dim'");
      return NormSpec::euclidean(get_count(j, "dim", 1, "space"));
    }
    if (kind == "weighted_lr") {
      if (j.contains("dim")) throw ConfigError("space: weighted_lr takes 'r' and 'weights'");
      std::vector<double> w;
      for (const auto& v : need(j, "weights", "space")) {
        if (!v.is_number()) throw ConfigError("space: weights must be numbers");
        w.push_back(v.get<double>());
      }
      return NormSpec::weighted_lr(get_real(j, "r", 2.0, "space"), std::move(w));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("space: ") + e.what());
  }
  throw ConfigError("space: unknown kind '" + kind + "'");
}

Json statistic_to_json(const StatisticSpec& s) {
  Json j{{"kind", to_string(s.kind)}};
  if (!s.id.empty()) j["id"] = s.id;
  using K = StatisticSpec::Kind;
  switch (s.kind) {
    case K::maximal:
      j["p"] = s.p;
      j["weak_p"] = s.weak_p;
      j["n_max"] = s.n_max;
      break;
    case K::hopf: j["n_max"] = s.n_max; break;
    case K::lil: j["window_fraction"] = s.window_fraction; break;
    case K::covariance: j["max_lag"] = s.max_lag; break;
    case K::mz:
      j["p"] = s.p;
      j["grid"] = s.grid;
      break;
    case K::normalized:
    case K::approx_error: j["grid"] = s.grid; break;
    case K::endpoint: break;
  }
  return j;
}

StatisticSpec statistic_from_json(const Json& j) {
  const std::string where = "statistic";
  StatisticSpec s;
  if (!j.is_object()) throw ConfigError("statistic: expected an object");
  try {
    s.kind = statistic_kind_from_string(get_string(j, "kind", "", where));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("statistic: ") + e.what());
  }
  using K = StatisticSpec::Kind;
  switch (s.kind) {
    case K::maximal: require_keys(j, where, {"kind", "id", "p", "weak_p", "n_max"}); break;
    case K::hopf: require_keys(j, where, {"kind", "id", "n_max"}); break;
    case K::lil: require_keys(j, where, {"kind", "id", "window_fraction"}); break;
    case K::covariance: require_keys(j, where, {"kind", "id", "max_lag"}); break;
    case K::mz: require_keys(j, where, {"kind", "id", "p", "grid"}); break;
    case K::normalized:
    case K::approx_error: require_keys(j, where, {"kind", "id", "grid"}); break;
    case K::endpoint: require_keys(j, where, {"kind", "id"}); break;
  }
  s.id = get_string(j, "id", "", where);
  s.p = get_real(j, "p", s.kind == K::mz ? 1.5 : 2.0, where);
  s.weak_p = get_real(j, "weak_p", 0.0, where);
  s.n_max = get_count(j, "n_max", 0, where);
  s.window_fraction = get_real(j, "window_fraction", 0.75, where);
  s.max_lag = get_count(j, "max_lag", 16, where);
  s.grid = get_grid(j, "grid", where);
  return s;
}

Json check_to_json(const CheckSpec& c) {
  Json j{{"condition", c.condition}, {"epsilon", c.epsilon}};
  if (c.condition == "hannan") {
    j["p"] = c.p;
  } else if (c.condition == "condDDM") {
    j["p"] = std::isinf(c.p) ? Json("inf") : Json(c.p);
    j["horizon"] = c.horizon;
  } else if (c.condition == "fourier_tail") {
    j = {{"condition", c.condition}, {"beta", c.beta}, {"C", c.C}, {"m_grid", c.m_grid}};
  } else {
    j["horizon"] = c.horizon;
  }
  return j;
}

CheckSpec check_from_json(const Json& j) {
  const std::string where = "check";
  if (!j.is_object()) throw ConfigError("check: expected an object");
  CheckSpec c;
  c.condition = get_string(j, "condition", "", where);
  if (c.condition == "hannan") {
    require_keys(j, where, {"condition", "p", "epsilon"});
  } else if (c.condition == "hanbis" || c.condition == "markov" || c.condition == "normal" ||
             c.condition == "conddynsys") {
    require_keys(j, where, {"condition", "horizon", "epsilon"});
  } else if (c.condition == "condDDM") {
    require_keys(j, where, {"condition", "p", "horizon", "epsilon"});
  } else if (c.condition == "fourier_tail") {
    require_keys(j, where, {"condition", "beta", "C", "m_grid"});
  } else {
    throw ConfigError("check: unknown condition '" + c.condition + "'");
  }
  if (auto it = j.find("p"); it != j.end() && it->is_string()) {
    if (it->get<std::string>() != "inf") throw ConfigError("check: p must be a number or \"inf\"");
    c.p = std::numeric_limits<double>::infinity();
  } else {
    c.p = get_real(j, "p", 2.0, where);
  }
  c.horizon = get_count(j, "horizon", 256, where);
  c.epsilon = get_real(j, "epsilon", 1e-8, where);
  c.beta = get_real(j, "beta", 3.0, where);
  c.C = get_real(j, "C", 1.0, where);
  if (auto it = j.find("m_grid"); it != j.end()) {
    if (!it->is_array()) throw ConfigError("check: m_grid must be an array");
    for (const auto& v : *it) {
      if (!v.is_number()) throw ConfigError("check: m_grid entries must be numbers");
      c.m_grid.push_back(v.get<double>());
    }
  }
  return c;
}

ExperimentConfig config_from_json(const Json& j) {
  const std::string where = "config";
  require_keys(j, where,
               {"name", "model", "space", "statistics", "checks", "n_grid", "n_paths", "seed", "memory_budget",
                "workers", "strict_sums", "block_paths", "output"});
  ExperimentConfig c;
  c.name = get_string(j, "name", c.name, where);
  c.model = model_from_json(need(j, "model", where));
  if (auto it = j.find("space"); it != j.end()) {
    c.space = norm_spec_from_json(*it);
    if (c.space->dim() != model_dim(c.model)) throw ConfigError("config: space dimension differs from the model");
  }
  if (auto it = j.find("statistics"); it != j.end()) {
    if (!it->is_array()) throw ConfigError("config: statistics must be an array");
    for (const auto& s : *it) c.statistics.push_back(statistic_from_json(s));
  }
  if (auto it = j.find("checks"); it != j.end()) {
    if (!it->is_array()) throw ConfigError("config: checks must be an array");
    for (const auto& s : *it) c.checks.push_back(check_from_json(s));
  }
  c.n_grid = get_grid(j, "n_grid", where);
  c.n_paths = get_count(j, "n_paths", c.n_paths, where);
  c.seed = get_count(j, "seed", c.seed, where);
  c.memory_budget = get_count(j, "memory_budget", c.memory_budget, where);
  c.workers = static_cast<unsigned>(get_count(j, "workers", c.workers, where));
  c.strict_sums = get_bool(j, "strict_sums", c.strict_sums, where);
  c.block_paths = get_count(j, "block_paths", c.block_paths, where);
  c.output = get_string(j, "output", c.output, where);
  if (!c.statistics.empty()) {
    try {
      validate(make_plan(c));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }
  return c;
}

Json config_to_json(const ExperimentConfig& c) {
  Json j;
  j["name"] = c.name;
  j["model"] = model_to_json(c.model);
  if (c.space) j["space"] = norm_spec_to_json(*c.space);
  j["statistics"] = Json::array();
  for (const auto& s : c.statistics) j["statistics"].push_back(statistic_to_json(s));
  j["checks"] = Json::array();
  for (const auto& k : c.checks) j["checks"].push_back(check_to_json(k));
  j["n_grid"] = c.n_grid;
  j["n_paths"] = c.n_paths;
  j["seed"] = c.seed;
  j["memory_budget"] = c.memory_budget;
  j["workers"] = c.workers;
  j["strict_sums"] = c.strict_sums;
  j["block_paths"] = c.block_paths;
  j["output"] = c.output;
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file " + file.string());
  Json j;
  try {
    in >> j;
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

std::uint64_t config_hash(const ExperimentConfig& c) {
  // Worker count and output location do not change results.
  ExperimentConfig canonical = c;
  canonical.workers = 1;
  canonical.output.clear();
  return fnv1a64(config_to_json(canonical).dump());
}

ExperimentPlan make_plan(const ExperimentConfig& c) {
  ExperimentPlan plan;
  plan.model = c.model;
  plan.statistics = c.statistics;
  plan.n_grid = c.n_grid;
  plan.n_paths = c.n_paths;
  plan.master_seed = c.seed;
  plan.memory_budget = c.memory_budget;
  plan.workers = c.workers;
  plan.strict_sums = c.strict_sums;
  plan.block_paths = c.block_paths;
  for (const auto& s : c.statistics) {
    if (s.kind == StatisticSpec::Kind::approx_error && !plan.approximant) {
      const ProjectionReport rep = projection_norms(c.model, 2.0);
      if (rep.verdict != Verdict::finite)
        throw std::invalid_argument("approx_error: no martingale approximation for this model (projection sum " +
                                    std::string(to_string(rep.verdict)) + ")");
      plan.approximant = approximating_md(c.model, rep);
    }
  }
  return plan;
}

namespace {

ConditionVerdict from_verdict(Verdict v) {
  switch (v) {
    case Verdict::finite: return ConditionVerdict::holds;
    case Verdict::divergent: return ConditionVerdict::fails;
    case Verdict::inconclusive: return ConditionVerdict::inconclusive;
  }
  return ConditionVerdict::inconclusive;
}

const MarkovChainFn& markov_model(const ProcessModel& model, const std::string& condition) {
  const auto* m = std::get_if<MarkovChainFn>(&model);
  if (!m) throw std::invalid_argument(condition + ": requires a markov_chain model");
  return *m;
}

const FourierObservable& observable_of(const ProcessModel& model, const std::string& condition) {
  if (const auto* d = std::get_if<DoublingMap>(&model)) return d->observable;
  if (const auto* t = std::get_if<TorusAutomorphism>(&model)) return t->observable;
  throw std::invalid_argument(condition + ": requires a doubling_map or torus_automorphism model");
}

}  // namespace

ConditionReport run_check(const ProcessModel& model, const CheckSpec& check) {
  const std::string& cond = check.condition;
  if (cond == "hannan") {
    const ProjectionReport rep = projection_norms(model, check.p, std::nullopt, check.epsilon);
    ConditionReport out;
    out.condition = "hannan";
    double partial = 0.0;
    for (const auto& t : rep.norms) {
      partial += t.norm;
      out.rows.push_back({static_cast<std::size_t>(std::abs(t.n)), t.norm, partial, std::nullopt});
    }
    if (std::isfinite(rep.tail_bound)) out.tail_bound = rep.tail_bound;
    out.verdict = from_verdict(rep.verdict);
    std::ostringstream cert;
    cert << rep.method << "; hannan_value=" << rep.hannan_value;
    out.certificate = cert.str();
    return out;
  }
  if (cond == "hanbis") {
    const HanbisReport rep = hanbis_check(model, check.horizon, check.epsilon);
    ConditionReport out;
    out.condition = "hanbis";
    for (const auto& r : rep.rows)
      out.rows.push_back({r.n, r.past_term + r.future_term, r.past_partial + r.future_partial, std::nullopt});
    if (std::isfinite(rep.tail_bound)) out.tail_bound = rep.tail_bound;
    out.verdict = from_verdict(rep.verdict);
    out.certificate = rep.method;
    return out;
  }
  if (cond == "markov" || cond == "normal") {
    const auto& m = markov_model(model, cond);
    ConditionReport out =
        markov_condition(m.kernel.P(), m.kernel.m(), m.f,
                         cond == "markov" ? MarkovConditionKind::sqrt_sum : MarkovConditionKind::normal_sq_sum,
                         check.horizon, check.epsilon);
    out.condition = cond;
    return out;
  }
  if (cond == "conddynsys") {
    const auto* d = std::get_if<DoublingMap>(&model);
    if (!d) throw std::invalid_argument("conddynsys: requires a doubling_map model");
    return cond_dynsys(d->observable, check.horizon, check.epsilon);
  }
  if (cond == "condDDM") {
    const auto& m = markov_model(model, cond);
    if (m.f.cols() != 1) throw std::invalid_argument("condDDM: requires a scalar observable");
    const PhiSequence phi = phi_mixing_coeffs(m.kernel.P(), m.kernel.m(), m.f.col(0), check.horizon);
    return cond_ddm(phi, check.p, check.horizon, check.epsilon);
  }
  if (cond == "fourier_tail") return fourier_tail_check(observable_of(model, cond), check.beta, check.C, check.m_grid);
  throw std::invalid_argument("unknown condition: " + cond);
}

}  // namespace lilab
