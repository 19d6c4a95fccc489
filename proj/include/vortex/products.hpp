#pragma once

#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <unordered_map>
#include <utility>
#include <vector>

#include "vortex/functional.hpp"

namespace vortex {

/// Which registered functional of a component a computation reads.
enum class Role : std::uint8_t { psi, phi, omega, theta };

inline const char* role_name(Role r) {
  switch (r) {
    case Role::psi: return "psi";
    case Role::phi: return "phi";
    case Role::omega: return "omega";
    case Role::theta: return "theta";
  }
  return "?";
}

/// Configuration of the centering recursion. Per component: the functional
/// blocks are centered against (`weight`) and the one evaluating centered
/// blocks (`value`). In cyclic mode the recursion first rotates words whose
/// end blocks share a component, evaluates single blocks with `single`
/// (omega) and the empty word with the shared omega(1).
struct EngineConfig {
  bool cyclic = false;
  std::vector<Role> weight;
  std::vector<Role> value;
  Role single = Role::omega;

  friend auto operator<=>(const EngineConfig&, const EngineConfig&) = default;
};

/// Per-family functional data plus memo caches for every engine
/// configuration evaluated so far. Registration is not thread-safe;
/// evaluation is (the caches take idempotent concurrent inserts).
template <Scalar S>
class ProductContext {
 public:
  struct Component {
    std::vector<Family> families;
    std::array<std::optional<MomentFunctional<S>>, 4> roles;
  };

  ProductContext() = default;
  ProductContext(const ProductContext& o) : components_(o.components_) {}
  ProductContext& operator=(const ProductContext& o) {
    components_ = o.components_;
    clear_caches();
    return *this;
  }

  /// Registers `f` in `role` for the component spanned by f's families. The
  /// family set must equal an existing component's or be disjoint from all.
  void set(const MomentFunctional<S>& f, Role role) {
    std::size_t target = components_.size();
    for (std::size_t c = 0; c < components_.size(); ++c) {
      const auto& fams = components_[c].families;
      if (fams == f.families()) {
        target = c;
        break;
      }
      for (Family x : f.families())
        if (std::binary_search(fams.begin(), fams.end(), x))
          throw RuleViolation("functional '" + f.name() + "' overlaps a registered component");
    }
    if (target == components_.size()) components_.push_back(Component{f.families(), {}});
    components_[target].roles[static_cast<std::size_t>(role)] = f;
    clear_caches();
  }

  void register_free(const MomentFunctional<S>& psi) {
    if (!psi.unital()) throw RuleViolation("free product inputs must be unital");
    set(psi, Role::psi);
  }
  void register_pair(const FunctionalPair<S>& p) {
    p.validate();
    set(p.phi, Role::phi);
    set(p.psi, Role::psi);
  }
  void register_triple(const FunctionalTriple<S>& t) {
    t.validate();
    set(t.psi, Role::psi);
    set(t.phi, Role::phi);
    set(t.omega, Role::omega);
  }
  void register_indented(const IndentedTriple<S>& t) {
    t.validate();
    set(t.phi, Role::phi);
    set(t.psi, Role::psi);
    set(t.theta, Role::theta);
  }

  std::size_t component_count() const noexcept { return components_.size(); }
  const Component& component(std::size_t c) const { return components_.at(c); }

  std::vector<Family> families() const {
    std::vector<Family> out;
    for (const auto& c : components_) out.insert(out.end(), c.families.begin(), c.families.end());
    std::sort(out.begin(), out.end());
    return out;
  }

  std::size_t component_of(Family f) const {
    for (std::size_t c = 0; c < components_.size(); ++c)
      if (std::binary_search(components_[c].families.begin(), components_[c].families.end(), f)) return c;
    throw RuleViolation("unregistered family " + std::to_string(f) + ": no functional registered for it");
  }

  const MomentFunctional<S>& functional(std::size_t c, Role r) const {
    const auto& slot = components_.at(c).roles[static_cast<std::size_t>(r)];
    if (!slot) throw RuleViolation(std::string("component has no ") + role_name(r) + " functional registered");
    return *slot;
  }

  /// Component containing the least registered family ("left" algebra of
  /// the ordered and indented products).
  std::size_t left_component() const {
    if (components_.size() != 2) throw RuleViolation("ordered/indented products need exactly two algebras");
    return components_[0].families.front() < components_[1].families.front() ? 0 : 1;
  }

  /// Shared omega(1); rejects mismatched values.
  S omega_unit() const {
    if (components_.empty()) throw RuleViolation("no algebras registered");
    S c = functional(0, Role::omega).unit_value();
    for (std::size_t i = 1; i < components_.size(); ++i)
      if (!(functional(i, Role::omega).unit_value() == c))
        throw RuleViolation("omega(1) mismatch: the cyclic product requires equal omega_i(1)");
    return c;
  }

  /// Maximal runs of letters lying in the same component.
  std::vector<std::pair<std::size_t, Word>> blocks(const Word& w) const {
    std::vector<std::pair<std::size_t, Word>> out;
    for (auto& run : split_runs(w, [this](Family f) { return component_of(f); }))
      out.emplace_back(component_of(run[0].family()), std::move(run));
    return out;
  }

  EngineConfig uniform_config(bool cyclic, Role weight, Role value) const {
    return EngineConfig{cyclic, std::vector<Role>(components_.size(), weight),
                        std::vector<Role>(components_.size(), value), Role::omega};
  }

  S evaluate(const Word& w, const EngineConfig& cfg) const {
    if (cfg.weight.size() != components_.size() || cfg.value.size() != components_.size())
      throw RuleViolation("engine configuration does not match the registered algebras");
    auto& cache = cache_for(cfg);
    std::optional<S> unit;
    if (cfg.cyclic) unit = omega_unit();
    return eval_rec(w, cfg, cache, unit);
  }

  S evaluate(const Polynomial<S>& p, const EngineConfig& cfg) const {
    S out(0);
    for (const auto& [w, c] : p.terms()) out += c * evaluate(w, cfg);
    return out;
  }

  void clear_caches() {
    std::unique_lock lock(caches_->mutex);
    caches_->by_config.clear();
  }

 private:
  struct Cache {
    std::shared_mutex mutex;
    std::unordered_map<Word, S, WordHash> values;
  };
  struct Caches {
    std::mutex mutex;
    std::map<EngineConfig, std::unique_ptr<Cache>> by_config;
  };

  Cache& cache_for(const EngineConfig& cfg) const {
    std::lock_guard lock(caches_->mutex);
    auto& slot = caches_->by_config[cfg];
    if (!slot) slot = std::make_unique<Cache>();
    return *slot;
  }

  S eval_rec(const Word& w, const EngineConfig& cfg, Cache& cache, const std::optional<S>& unit) const {
    if (w.empty()) return cfg.cyclic ? *unit : S(1);
    {
      std::shared_lock lock(cache.mutex);
      auto it = cache.values.find(w);
      if (it != cache.values.end()) return it->second;
    }
    S result = compute(w, cfg, cache, unit);
    std::unique_lock lock(cache.mutex);
    cache.values.emplace(w, result);
    return result;
  }

  S compute(const Word& w, const EngineConfig& cfg, Cache& cache, const std::optional<S>& unit) const {
    auto bl = blocks(w);
    std::size_t n = bl.size();
    if (n == 1) {
      Role r = cfg.cyclic ? cfg.single : cfg.value[bl[0].first];
      return functional(bl[0].first, r)(bl[0].second);
    }
    if (cfg.cyclic && bl.front().first == bl.back().first) {
      Word rotated = bl.back().second;
      for (std::size_t j = 0; j + 1 < n; ++j) rotated *= bl[j].second;
      return eval_rec(rotated, cfg, cache, unit);
    }
    // w = prod_j B_j with B_j = B_j° + u_j, u_j = weight(B_j). The fully
    // centered product evaluates to prod_j value(B_j°); every other subset S
    // of kept blocks contributes (-1)^{n-|S|} prod_{j not in S} u_j F(B_S).
    if (n > 20) throw DomainError("word has too many alternating blocks");
    std::vector<S> u(n), v(n);
    S centered(1);
    for (std::size_t j = 0; j < n; ++j) {
      std::size_t c = bl[j].first;
      u[j] = functional(c, cfg.weight[c])(bl[j].second);
      v[j] = functional(c, cfg.value[c])(bl[j].second);
      centered *= v[j] - u[j];
    }
    S result = centered;
    const std::uint32_t full = (1u << n) - 1;
    for (std::uint32_t mask = 0; mask < full; ++mask) {
      S coef(1);
      Word sub;
      std::size_t dropped = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (mask >> j & 1u) {
          sub *= bl[j].second;
        } else {
          coef *= u[j];
          ++dropped;
        }
      }
      if (is_zero(coef)) continue;
      S term = coef * eval_rec(sub, cfg, cache, unit);
      if (dropped % 2) result += term;
      else result -= term;
    }
    return result;
  }

  std::vector<Component> components_;
  std::unique_ptr<Caches> caches_ = std::make_unique<Caches>();
};

/// psi_1 * psi_2 * ...: weights and values psi.
template <Scalar S>
S free_product_eval(const ProductContext<S>& ctx, const Word& w) {
  return ctx.evaluate(w, ctx.uniform_config(false, Role::psi, Role::psi));
}

/// c-free product with weight psi_i and value phi_i per algebra.
template <Scalar S>
S weighted_cfree_eval(const ProductContext<S>& ctx, const Word& w) {
  return ctx.evaluate(w, ctx.uniform_config(false, Role::psi, Role::phi));
}

/// Weighted c-free product with explicit per-component weight/value roles.
template <Scalar S>
S weighted_cfree_eval(const ProductContext<S>& ctx, const Word& w, std::vector<Role> weight,
                      std::vector<Role> value) {
  return ctx.evaluate(w, EngineConfig{false, std::move(weight), std::move(value), Role::omega});
}

/// (psi_1 * psi_2, phi_1 psi_1*psi_2 phi_2).
template <Scalar S>
std::pair<S, S> cfree_product_eval(const ProductContext<S>& ctx, const Word& w) {
  return {free_product_eval(ctx, w), weighted_cfree_eval(ctx, w)};
}

/// omega_1 (cyclic-c-free product) omega_2.
template <Scalar S>
S cyclic_cfree_eval(const ProductContext<S>& ctx, const Word& w) {
  return ctx.evaluate(w, ctx.uniform_config(true, Role::psi, Role::phi));
}

namespace detail {

template <Scalar S>
EngineConfig two_sided(const ProductContext<S>& ctx, Role left_weight, Role right_weight, Role value) {
  std::size_t left = ctx.left_component();
  EngineConfig cfg{false, std::vector<Role>(2), std::vector<Role>(2, value), Role::omega};
  cfg.weight[left] = left_weight;
  cfg.weight[1 - left] = right_weight;
  return cfg;
}

}  // namespace detail

/// Ordered product of (phi_1, psi_1) and (phi_2, psi_2):
/// (phi_1 psi_1*phi_2 phi_2, psi_1 psi_1*phi_2 psi_2).
template <Scalar S>
std::pair<S, S> ordered_product_eval(const ProductContext<S>& ctx, const Word& w) {
  return {ctx.evaluate(w, detail::two_sided(ctx, Role::psi, Role::phi, Role::phi)),
          ctx.evaluate(w, detail::two_sided(ctx, Role::psi, Role::phi, Role::psi))};
}

/// Indented product of (phi_i, psi_i, theta_i): weights (theta_1, psi_2),
/// values phi, psi, theta in turn.
template <Scalar S>
std::array<S, 3> indented_product_eval(const ProductContext<S>& ctx, const Word& w) {
  return {ctx.evaluate(w, detail::two_sided(ctx, Role::theta, Role::psi, Role::phi)),
          ctx.evaluate(w, detail::two_sided(ctx, Role::theta, Role::psi, Role::psi)),
          ctx.evaluate(w, detail::two_sided(ctx, Role::theta, Role::psi, Role::theta))};
}

/// Linear extension of a scalar word evaluator to polynomials.
template <Scalar S, class Fn>
S evaluate_linear(const Polynomial<S>& p, Fn&& fn) {
  S out(0);
  for (const auto& [w, c] : p.terms()) out += c * fn(w);
  return out;
}

/// A registered algebra's product functional packaged as a functional on
/// the union of its families, for grouping algebras into one composite.
template <Scalar S>
MomentFunctional<S> product_functional(std::shared_ptr<const ProductContext<S>> ctx, EngineConfig cfg,
                                       bool unital, bool tracial, std::string name) {
  auto fams = ctx->families();
  return MomentFunctional<S>(
      fams, [ctx, cfg](const Word& w) { return ctx->evaluate(w, cfg); }, unital, tracial, std::move(name));
}

/// Centered alternating factor tuple with its coefficient.
template <Scalar S>
struct FactorTuple {
  S coefficient;
  std::vector<Block<S>> factors;
};

/// Expands a word as a combination of cyclically alternating tuples of
/// psi-centered blocks (rotating words whose ends share an algebra). Pieces
/// supported on a single algebra or on scalars carry no second-order term
/// and are dropped.
template <Scalar S>
std::vector<FactorTuple<S>> cyclic_centered_decomposition(const ProductContext<S>& ctx, const Word& w) {
  auto bl = ctx.blocks(w);
  std::size_t n = bl.size();
  if (n <= 1) return {};
  if (bl.front().first == bl.back().first) {
    Word rotated = bl.back().second;
    for (std::size_t j = 0; j + 1 < n; ++j) rotated *= bl[j].second;
    return cyclic_centered_decomposition(ctx, rotated);
  }
  std::vector<FactorTuple<S>> out;
  std::vector<S> u(n);
  FactorTuple<S> top{S(1), {}};
  for (std::size_t j = 0; j < n; ++j) {
    const auto& psi = ctx.functional(bl[j].first, Role::psi);
    u[j] = psi(bl[j].second);
    top.factors.push_back(Block<S>{static_cast<Family>(bl[j].first),
                                   Polynomial<S>(bl[j].second) - Polynomial<S>(u[j])});
  }
  out.push_back(std::move(top));
  const std::uint32_t full = (1u << n) - 1;
  for (std::uint32_t mask = 0; mask < full; ++mask) {
    S coef(1);
    Word sub;
    std::size_t dropped = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (mask >> j & 1u) {
        sub *= bl[j].second;
      } else {
        coef *= u[j];
        ++dropped;
      }
    }
    if (is_zero(coef)) continue;
    if (dropped % 2 == 0) coef = -coef;
    for (auto& t : cyclic_centered_decomposition(ctx, sub)) {
      t.coefficient *= coef;
      out.push_back(std::move(t));
    }
  }
  return out;
}

/// Second-order pairing of centered tuples (a_1..a_n) and (q_1..q_m):
/// zero unless n = m; otherwise with b_j = q_{n+1-j},
///   sum_{k=0}^{n-1} prod_i psi(a_i b_{i+k}),
/// where psi(a b) vanishes across algebras. Block family fields hold
/// component indices here.
template <Scalar S>
S second_order_pairing(const ProductContext<S>& ctx, const std::vector<Block<S>>& a,
                       const std::vector<Block<S>>& q) {
  std::size_t n = a.size();
  if (n != q.size() || n == 0) return S(0);
  S total(0);
  for (std::size_t k = 0; k < n; ++k) {
    S term(1);
    for (std::size_t i = 0; i < n && !is_zero(term); ++i) {
      const auto& b = q[n - 1 - ((i + k) % n)];
      if (a[i].family != b.family) {
        term = S(0);
        break;
      }
      term *= ctx.functional(a[i].family, Role::psi).evaluate(a[i].content * b.content);
    }
    total += term;
  }
  return total;
}

/// (psi_A * psi_B)^(2)(p, q) for deterministic inputs (vanishing own
/// second-order terms), extended bilinearly through
/// cyclic_centered_decomposition.
template <Scalar S>
S second_order_covariance(const ProductContext<S>& ctx, const Polynomial<S>& p, const Polynomial<S>& q) {
  std::vector<FactorTuple<S>> dp, dq;
  for (const auto& [w, c] : p.terms())
    for (auto& t : cyclic_centered_decomposition(ctx, w)) {
      t.coefficient *= c;
      dp.push_back(std::move(t));
    }
  for (const auto& [w, c] : q.terms())
    for (auto& t : cyclic_centered_decomposition(ctx, w)) {
      t.coefficient *= c;
      dq.push_back(std::move(t));
    }
  S total(0);
  for (const auto& x : dp)
    for (const auto& y : dq) {
      if (x.factors.size() != y.factors.size()) continue;
      total += x.coefficient * y.coefficient * second_order_pairing(ctx, x.factors, y.factors);
    }
  return total;
}

}  // namespace vortex
