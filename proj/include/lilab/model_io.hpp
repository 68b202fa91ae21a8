#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "lilab/processes.hpp"

namespace lilab {

using Json = nlohmann::json;

/// Thrown for schema violations in configuration documents.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Rejects keys of `object` outside `allowed`; `where` names the object in errors.
void require_keys(const Json& object, std::string_view where, std::initializer_list<std::string_view> allowed);

Json innovation_to_json(const InnovationSpec& spec);
InnovationSpec innovation_from_json(const Json& j);
Json observable_to_json(const FourierObservable& obs);
FourierObservable observable_from_json(const Json& j);

/// Canonical JSON form of a model. Model documents:
///   {"family": "martingale_difference", "innovation": {...}, "g": "identity"|"sign", "q": 0, "h_scale": 0}
///   {"family": "linear", "innovation": {...}, "first_index": 0, "a": [..]}  (scalar shortcut)
///   {"family": "linear", "innovation": {...}, "first_index": 0, "coeffs": [[[..]..]..]}
///   {"family": "function_of_linear", "innovation": {...}, "a": [..], "f": "abs"|"cos"|"square"|"signed_sqrt",
///    "modulus": {...}, "growth_r": r, "centering": c}
///   {"family": "markov_chain", "P": [[..]], "f": [..] or [[..]], "m": [..]}
///   {"family": "doubling_map", "observable": {...}}
///   {"family": "torus_automorphism", "M": [[..]], "observable": {...}}
/// Innovations: {"law": "rademacher"|"gaussian"|"uniform"|"centered_pareto", "dim": d,
///               "sigma": s | "lower": a, "upper": b | "alpha": a}.
/// Observables: {"torus_dim": d, "out_dim": k, "terms": [{"k": [..], "re": [..], "im": [..]}]}.
Json model_to_json(const ProcessModel& model);
ProcessModel model_from_json(const Json& j);

std::uint64_t fnv1a64(std::string_view bytes);
/// FNV-1a of the canonical model JSON.
std::uint64_t model_hash(const ProcessModel& model);

}  // namespace lilab
