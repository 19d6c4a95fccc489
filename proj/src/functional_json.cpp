#include "vortex/functional_json.hpp"

#include "vortex/parse.hpp"

namespace vortex {

using nlohmann::json;

bool json_is_exact(const json& doc) {
  if (doc.is_number_float()) return false;
  if (doc.is_object() || doc.is_array())
    for (const auto& v : doc)
      if (!json_is_exact(v)) return false;
  return true;
}

template <>
QComplex scalar_from_json<QComplex>(const json& v) {
  if (v.is_number_integer()) return QComplex(v.get<long>());
  if (v.is_string()) return QComplex::parse_rational(v.get<std::string>());
  if (v.is_array() && v.size() == 2) {
    auto re = scalar_from_json<QComplex>(v[0]);
    auto im = scalar_from_json<QComplex>(v[1]);
    return QComplex(re.real(), im.real());
  }
  throw ParseError("expected an exact scalar, got " + v.dump());
}

template <>
Complex scalar_from_json<Complex>(const json& v) {
  if (v.is_number()) return Complex(v.get<double>(), 0.0);
  if (v.is_string()) return QComplex::parse_rational(v.get<std::string>()).to_complex();
  if (v.is_array() && v.size() == 2)
    return Complex(scalar_from_json<Complex>(v[0]).real(), scalar_from_json<Complex>(v[1]).real());
  throw ParseError("expected a scalar, got " + v.dump());
}

template <Scalar S>
MomentFunctional<S> functional_from_json(const json& doc, bool unital) {
  if (!doc.is_object()) throw ParseError("functional description must be an object");
  if (!doc.contains("family") || !doc["family"].is_number_integer())
    throw ParseError("functional description needs an integer \"family\"");
  auto fam = static_cast<Family>(doc["family"].get<int>());
  unital = doc.value("unital", unital);
  bool tracial = doc.value("tracial", false);
  if (doc.contains("rule")) {
    auto rule = doc["rule"].get<std::string>();
    if (rule == "dirac") return MomentFunctional<S>::dirac(fam, doc.contains("point") ? scalar_from_json<S>(doc["point"]) : S(1));
    if (rule == "semicircle") return MomentFunctional<S>::semicircle(fam);
    if (rule == "delta") return MomentFunctional<S>::delta(fam);
    if (rule == "bernoulli")
      return MomentFunctional<S>::bernoulli(fam, scalar_from_json<S>(doc.at("x")), scalar_from_json<S>(doc.at("y")),
                                            scalar_from_json<S>(doc.at("p")));
    throw ParseError("unknown functional rule '" + rule + "'");
  }
  if (!doc.contains("values") || !doc["values"].is_object())
    throw ParseError("functional description needs \"values\" or \"rule\"");
  std::map<Word, S> values;
  for (const auto& [key, v] : doc["values"].items()) {
    Word w = parse_word(key);
    if (!w.single_family(fam)) throw RuleViolation("value key " + key + " mixes families");
    values[w] = scalar_from_json<S>(v);
  }
  if (!unital && !values.count(Word{})) throw ParseError("non-unital functional needs a value for \"1\"");
  return MomentFunctional<S>::table(fam, values, tracial, unital, doc.value("name", std::string("table")));
}

template <Scalar S>
ProductContext<S> context_from_json(const json& spec) {
  if (!spec.is_object() || !spec.contains("functionals") || !spec["functionals"].is_object())
    throw ParseError("spec needs a \"functionals\" object");
  ProductContext<S> ctx;
  const std::pair<const char*, Role> roles[] = {
      {"psi", Role::psi}, {"phi", Role::phi}, {"omega", Role::omega}, {"theta", Role::theta}};
  for (const auto& [key, role] : roles) {
    if (!spec["functionals"].contains(key)) continue;
    const auto& list = spec["functionals"][key];
    if (!list.is_array()) throw ParseError(std::string("\"") + key + "\" must be an array");
    for (const auto& f : list) ctx.set(functional_from_json<S>(f, role != Role::omega), role);
  }
  for (const auto& [key, v] : spec["functionals"].items()) {
    if (key != "psi" && key != "phi" && key != "omega" && key != "theta")
      throw ParseError("unknown functional role \"" + key + "\"");
  }
  return ctx;
}

namespace {

template <Scalar S>
std::vector<std::pair<std::string, std::string>> evaluate_typed(const json& spec, const std::string& mode,
                                                                const std::string& expression) {
  auto ctx = context_from_json<S>(spec);
  auto fmt = [](const S& x) { return format_scalar(x); };
  if (mode == "covariance") {
    auto split = expression.find(';');
    if (split == std::string::npos) throw ParseError("covariance expects \"P ; Q\"");
    auto p = parse_as<S>(expression.substr(0, split));
    auto q = parse_as<S>(expression.substr(split + 1));
    return {{"value", fmt(second_order_covariance(ctx, p, q))}};
  }
  auto p = parse_as<S>(expression);
  for (Family f : p.families()) ctx.component_of(f);
  auto lin = [&](auto&& fn) { return evaluate_linear(p, fn); };
  if (mode == "free") return {{"value", fmt(lin([&](const Word& w) { return free_product_eval(ctx, w); }))}};
  if (mode == "weighted")
    return {{"value", fmt(lin([&](const Word& w) { return weighted_cfree_eval(ctx, w); }))}};
  if (mode == "cfree")
    return {{"psi", fmt(lin([&](const Word& w) { return free_product_eval(ctx, w); }))},
            {"phi", fmt(lin([&](const Word& w) { return weighted_cfree_eval(ctx, w); }))}};
  if (mode == "cyclic") return {{"value", fmt(lin([&](const Word& w) { return cyclic_cfree_eval(ctx, w); }))}};
  if (mode == "ordered")
    return {{"phi", fmt(lin([&](const Word& w) { return ordered_product_eval(ctx, w).first; }))},
            {"psi", fmt(lin([&](const Word& w) { return ordered_product_eval(ctx, w).second; }))}};
  if (mode == "indented") {
    const char* names[] = {"phi", "psi", "theta"};
    std::vector<std::pair<std::string, std::string>> out;
    for (std::size_t i = 0; i < 3; ++i)
      out.emplace_back(names[i], fmt(lin([&](const Word& w) { return indented_product_eval(ctx, w)[i]; })));
    return out;
  }
  throw ParseError("unknown mode '" + mode + "'");
}

}  // namespace

std::vector<std::pair<std::string, std::string>> evaluate_spec(const json& spec, const std::string& mode,
                                                               const std::string& expression) {
  if (json_is_exact(spec)) return evaluate_typed<QComplex>(spec, mode, expression);
  return evaluate_typed<Complex>(spec, mode, expression);
}

template MomentFunctional<QComplex> functional_from_json<QComplex>(const json&, bool);
template MomentFunctional<Complex> functional_from_json<Complex>(const json&, bool);
template ProductContext<QComplex> context_from_json<QComplex>(const json&);
template ProductContext<Complex> context_from_json<Complex>(const json&);

}  // namespace vortex
