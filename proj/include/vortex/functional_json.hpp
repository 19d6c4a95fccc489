#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "vortex/products.hpp"

namespace vortex {

/// True when every numeric value in the document is an integer, a rational
/// string or an array of those (so the exact engine applies).
bool json_is_exact(const nlohmann::json& doc);

/// Scalar from 3, "3/4", "0.25", 0.25 or [re, im]. Floats are rejected by
/// the exact instantiation.
template <Scalar S>
S scalar_from_json(const nlohmann::json& v);

/// Functional description:
///   {"family":0, "values":{"1":1, "X0":"1/2", "X0*X0":1}, "tracial":true}
///   {"family":1, "rule":"semicircle" | "dirac" | "delta" | "bernoulli", ...}
/// Rule parameters: dirac "point"; bernoulli "x", "y", "p".
/// `unital` is the default when the document omits the "unital" key.
template <Scalar S>
MomentFunctional<S> functional_from_json(const nlohmann::json& doc, bool unital);

/// Builds a product context from {"functionals":{"psi":[...], "phi":[...],
/// "omega":[...], "theta":[...]}}.
template <Scalar S>
ProductContext<S> context_from_json(const nlohmann::json& spec);

/// Evaluates `expression` (word or polynomial) in a named mode and returns
/// labelled results, e.g. {{"value","1/2"}} or {{"psi",..},{"phi",..}}.
/// Modes: free, cfree, weighted, cyclic, ordered, indented, covariance
/// (expression "P ; Q").
std::vector<std::pair<std::string, std::string>> evaluate_spec(const nlohmann::json& spec,
                                                               const std::string& mode,
                                                               const std::string& expression);

}  // namespace vortex
