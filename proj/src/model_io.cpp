#include "lilab/model_io.hpp"

#include <algorithm>
#include <string>

namespace lilab {

void require_keys(const Json& object, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!object.is_object()) throw ConfigError(std::string(where) + ": expected an object");
  for (const auto& item : object.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
      throw ConfigError(std::string(where) + ": unknown key '" + item.key() + "'");
  }
}

namespace {

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(std::string("key '") + key + "' has the wrong type");
  }
}

const Json& need(const Json& j, const char* key, std::string_view where) {
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(std::string(where) + ": missing key '" + key + "'");
  return *it;
}

Eigen::MatrixXd matrix_from_json(const Json& j, std::string_view where) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) throw ConfigError(std::string(where) + ": expected a matrix");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Eigen::MatrixXd M(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (!j[r].is_array() || static_cast<Eigen::Index>(j[r].size()) != cols)
      throw ConfigError(std::string(where) + ": ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) throw ConfigError(std::string(where) + ": non-numeric entry");
      M(r, c) = j[r][c].get<double>();
    }
  }
  return M;
}

Json matrix_to_json(const Eigen::MatrixXd& M) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(row);
  }
  return rows;
}

std::vector<double> vector_from_json(const Json& j, std::string_view where) {
  if (!j.is_array()) throw ConfigError(std::string(where) + ": expected an array");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw ConfigError(std::string(where) + ": non-numeric entry");
    out.push_back(v.get<double>());
  }
  return out;
}

template <class E>
struct EnumName {
  E value;
  const char* name;
};

constexpr EnumName<InnovationSpec::Law> kLaws[] = {{InnovationSpec::Law::rademacher, "rademacher"},
                                                   {InnovationSpec::Law::gaussian, "gaussian"},
                                                   {InnovationSpec::Law::uniform, "uniform"},
                                                   {InnovationSpec::Law::centered_pareto, "centered_pareto"}};
constexpr EnumName<FunctionOfLinear::Function> kFunctions[] = {{FunctionOfLinear::Function::abs, "abs"},
                                                               {FunctionOfLinear::Function::cos, "cos"},
                                                               {FunctionOfLinear::Function::square, "square"},
                                                               {FunctionOfLinear::Function::signed_sqrt, "signed_sqrt"}};
constexpr EnumName<ModulusSpec::Kind> kModuli[] = {{ModulusSpec::Kind::concave_sqrt, "concave_sqrt"},
                                                   {ModulusSpec::Kind::power, "power"},
                                                   {ModulusSpec::Kind::concave_custom, "concave_custom"}};

template <class E, std::size_t N>
E enum_from(const EnumName<E> (&table)[N], const Json& j, std::string_view where) {
  if (!j.is_string()) throw ConfigError(std::string(where) + ": expected a string");
  const auto s = j.get<std::string>();
  for (const auto& e : table)
    if (s == e.name) return e.value;
  throw ConfigError(std::string(where) + ": unknown value '" + s + "'");
}

template <class E, std::size_t N>
const char* enum_name(const EnumName<E> (&table)[N], E value) {
  for (const auto& e : table)
    if (e.value == value) return e.name;
  return "?";
}

Json modulus_to_json(const ModulusSpec& m) {
  Json j{{"kind", enum_name(kModuli, m.kind)}};
  if (m.kind == ModulusSpec::Kind::power) j["alpha"] = m.alpha;
  if (m.kind == ModulusSpec::Kind::concave_custom) {
    Json t = Json::array();
    for (auto [x, y] : m.table) t.push_back({x, y});
    j["table"] = t;
  }
  return j;
}

ModulusSpec modulus_from_json(const Json& j) {
  require_keys(j, "modulus", {"kind", "alpha", "table"});
  const auto kind = enum_from(kModuli, need(j, "kind", "modulus"), "modulus.kind");
  ModulusSpec m;
  if (kind == ModulusSpec::Kind::concave_sqrt) m = ModulusSpec::concave_sqrt();
  else if (kind == ModulusSpec::Kind::power) m = ModulusSpec::power(get_or(j, "alpha", 1.0));
  else {
    std::vector<std::pair<double, double>> table;
    for (const auto& node : need(j, "table", "modulus")) {
      if (!node.is_array() || node.size() != 2) throw ConfigError("modulus.table: nodes must be [x, phi]");
      table.emplace_back(node[0].get<double>(), node[1].get<double>());
    }
    m = ModulusSpec::concave_custom(std::move(table));
  }
  m.validate();
  return m;
}

}  // namespace

Json innovation_to_json(const InnovationSpec& s) {
  Json j{{"law", enum_name(kLaws, s.law)}, {"dim", s.dim}};
  switch (s.law) {
    case InnovationSpec::Law::gaussian: j["sigma"] = s.sigma; break;
    case InnovationSpec::Law::uniform: j["lower"] = s.lower; j["upper"] = s.upper; break;
    case InnovationSpec::Law::centered_pareto: j["alpha"] = s.alpha; break;
    case InnovationSpec::Law::rademacher: break;
  }
  return j;
}

InnovationSpec innovation_from_json(const Json& j) {
  require_keys(j, "innovation", {"law", "dim", "sigma", "lower", "upper", "alpha"});
  const auto law = enum_from(kLaws, need(j, "law", "innovation"), "innovation.law");
  const auto dim = get_or<std::size_t>(j, "dim", 1);
  if (dim == 0) throw ConfigError("innovation.dim must be >= 1");
  InnovationSpec s;
  s.law = law;
  s.dim = dim;
  s.sigma = get_or(j, "sigma", 1.0);
  s.lower = get_or(j, "lower", -1.0);
  s.upper = get_or(j, "upper", 1.0);
  s.alpha = get_or(j, "alpha", 3.0);
  // Canonicalize parameters that do not belong to the law.
  InnovationSpec canon;
  canon.law = law;
  canon.dim = dim;
  if (law == InnovationSpec::Law::gaussian) canon.sigma = s.sigma;
  if (law == InnovationSpec::Law::uniform) canon.lower = s.lower, canon.upper = s.upper;
  if (law == InnovationSpec::Law::centered_pareto) canon.alpha = s.alpha;
  canon.validate();
  return canon;
}

Json observable_to_json(const FourierObservable& obs) {
  Json terms = Json::array();
  for (const auto& [k, c] : obs.terms()) {
    if (!is_positive(k)) continue;
    Json re = Json::array(), im = Json::array();
    for (auto z : c) re.push_back(z.real()), im.push_back(z.imag());
    terms.push_back({{"k", k}, {"re", re}, {"im", im}});
  }
  return {{"torus_dim", obs.torus_dim()}, {"out_dim", obs.out_dim()}, {"terms", terms}};
}

FourierObservable observable_from_json(const Json& j) {
  require_keys(j, "observable", {"torus_dim", "out_dim", "terms"});
  const auto d = get_or<std::size_t>(j, "torus_dim", 1);
  const auto out = get_or<std::size_t>(j, "out_dim", 1);
  std::vector<std::pair<Frequency, Coefficient>> terms;
  for (const auto& t : get_or(j, "terms", Json::array())) {
    require_keys(t, "observable.terms[]", {"k", "re", "im"});
    Frequency k = need(t, "k", "observable.terms[]").get<Frequency>();
    const auto re = vector_from_json(need(t, "re", "observable.terms[]"), "re");
    const auto im = t.contains("im") ? vector_from_json(t["im"], "im") : std::vector<double>(re.size(), 0.0);
    if (re.size() != out || im.size() != out) throw ConfigError("observable.terms[]: coefficient length != out_dim");
    Coefficient c(out);
    for (std::size_t a = 0; a < out; ++a) c[a] = {re[a], im[a]};
    terms.emplace_back(std::move(k), std::move(c));
  }
  return FourierObservable::from_terms(d, out, terms);
}

Json model_to_json(const ProcessModel& model) {
  Json j{{"family", model_kind(model)}};
  if (auto* m = std::get_if<MartingaleDifference>(&model)) {
    j["innovation"] = innovation_to_json(m->innovation);
    j["g"] = m->g == MartingaleDifference::Map::identity ? "identity" : "sign";
    j["q"] = m->q;
    j["h_scale"] = m->h_scale;
  } else if (auto* m = std::get_if<LinearProcess>(&model)) {
    j["innovation"] = innovation_to_json(m->innovation);
    j["first_index"] = m->first_index;
    Json coeffs = Json::array();
    for (const auto& A : m->coeffs) coeffs.push_back(matrix_to_json(A));
    j["coeffs"] = coeffs;
  } else if (auto* m = std::get_if<FunctionOfLinear>(&model)) {
    j["innovation"] = innovation_to_json(m->innovation);
    j["a"] = m->a;
    j["f"] = enum_name(kFunctions, m->f);
    j["modulus"] = modulus_to_json(m->modulus);
    j["growth_r"] = m->growth_r;
    j["centering"] = m->centering;
  } else if (auto* m = std::get_if<MarkovChainFn>(&model)) {
    j["P"] = matrix_to_json(m->kernel.P());
    j["f"] = matrix_to_json(m->f);
    j["m"] = std::vector<double>(m->kernel.m().data(), m->kernel.m().data() + m->kernel.m().size());
  } else if (auto* m = std::get_if<DoublingMap>(&model)) {
    j["observable"] = observable_to_json(m->observable);
  } else {
    const auto& t = std::get<TorusAutomorphism>(model);
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < t.M.rows(); ++r) {
      Json row = Json::array();
      for (Eigen::Index c = 0; c < t.M.cols(); ++c) row.push_back(t.M(r, c));
      rows.push_back(row);
    }
    j["M"] = rows;
    j["observable"] = observable_to_json(t.observable);
  }
  return j;
}

ProcessModel model_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("model: expected an object");
  const std::string family = get_or<std::string>(j, "family", "");
  try {
    if (family == "martingale_difference") {
      require_keys(j, "model", {"family", "innovation", "g", "q", "h_scale"});
      const auto g = get_or<std::string>(j, "g", "identity");
      if (g != "identity" && g != "sign") throw ConfigError("model.g: expected 'identity' or 'sign'");
      return make_martingale_difference(innovation_from_json(need(j, "innovation", "model")),
                                        g == "identity" ? MartingaleDifference::Map::identity
                                                        : MartingaleDifference::Map::sign,
                                        get_or<std::size_t>(j, "q", 0), get_or(j, "h_scale", 0.0));
    }
    if (family == "linear") {
      require_keys(j, "model", {"family", "innovation", "first_index", "a", "coeffs"});
      const auto innovation = innovation_from_json(need(j, "innovation", "model"));
      const int first = get_or(j, "first_index", 0);
      if (j.contains("a") == j.contains("coeffs")) throw ConfigError("model: give exactly one of 'a' and 'coeffs'");
      if (j.contains("a")) return make_linear_scalar(innovation, vector_from_json(j["a"], "model.a"), first);
      std::vector<Eigen::MatrixXd> coeffs;
      for (const auto& A : j["coeffs"]) coeffs.push_back(matrix_from_json(A, "model.coeffs"));
      return make_linear(innovation, std::move(coeffs), first);
    }
    if (family == "function_of_linear") {
      require_keys(j, "model", {"family", "innovation", "a", "f", "modulus", "growth_r", "centering"});
      std::optional<ModulusSpec> modulus;
      if (j.contains("modulus")) modulus = modulus_from_json(j["modulus"]);
      std::optional<double> r, centering;
      if (j.contains("growth_r")) r = get_or(j, "growth_r", 1.0);
      if (j.contains("centering")) centering = get_or(j, "centering", 0.0);
      return make_function_of_linear(innovation_from_json(need(j, "innovation", "model")),
                                     vector_from_json(need(j, "a", "model"), "model.a"),
                                     enum_from(kFunctions, need(j, "f", "model"), "model.f"), modulus, r, centering);
    }
    if (family == "markov_chain") {
      require_keys(j, "model", {"family", "P", "f", "m"});
      const Eigen::MatrixXd P = matrix_from_json(need(j, "P", "model"), "model.P");
      const Json& fj = need(j, "f", "model");
      Eigen::MatrixXd f;
      if (fj.is_array() && !fj.empty() && fj.front().is_array()) {
        f = matrix_from_json(fj, "model.f");
      } else {
        const auto v = vector_from_json(fj, "model.f");
        f = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
      }
      std::optional<Eigen::VectorXd> m;
      if (j.contains("m")) {
        const auto v = vector_from_json(j["m"], "model.m");
        m = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
      }
      return make_markov_chain(P, f, m);
    }
    if (family == "doubling_map") {
      require_keys(j, "model", {"family", "observable"});
      return make_doubling_map(observable_from_json(need(j, "observable", "model")));
    }
    if (family == "torus_automorphism") {
      require_keys(j, "model", {"family", "M", "observable"});
      const Json& mj = need(j, "M", "model");
      const Eigen::MatrixXd Md = matrix_from_json(mj, "model.M");
      Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> M(Md.rows(), Md.cols());
      for (Eigen::Index r = 0; r < Md.rows(); ++r)
        for (Eigen::Index c = 0; c < Md.cols(); ++c) {
          if (Md(r, c) != std::round(Md(r, c))) throw ConfigError("model.M: entries must be integers");
          M(r, c) = static_cast<std::int64_t>(Md(r, c));
        }
      return make_torus_automorphism(M, observable_from_json(need(j, "observable", "model")));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("model: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  throw ConfigError("model.family: unknown family '" + family + "'");
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t model_hash(const ProcessModel& model) { return fnv1a64(model_to_json(model).dump()); }

}  // namespace lilab
