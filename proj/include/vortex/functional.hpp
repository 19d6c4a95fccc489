#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "vortex/error.hpp"
#include "vortex/polynomial.hpp"

namespace vortex {

/// A linear functional on the polynomial algebra of one family (or of a group
/// of families, for composite algebras), given by its values on words.
///
/// Rule-backed constructors treat every generator of the family as the same
/// variable, so only the word length matters.
template <Scalar S>
class MomentFunctional {
 public:
  using Rule = std::function<S(const Word&)>;

  MomentFunctional() = default;
  MomentFunctional(std::vector<Family> families, Rule rule, bool unital, bool tracial, std::string name)
      : families_(std::move(families)),
        rule_(std::make_shared<const Rule>(std::move(rule))),
        unital_(unital),
        tracial_(tracial),
        name_(std::move(name)) {
    std::sort(families_.begin(), families_.end());
    families_.erase(std::unique(families_.begin(), families_.end()), families_.end());
    if (families_.empty()) throw RuleViolation("functional needs at least one family");
  }

  const std::vector<Family>& families() const noexcept { return families_; }
  Family family() const { return families_.front(); }
  bool covers(Family f) const { return std::binary_search(families_.begin(), families_.end(), f); }
  bool unital() const noexcept { return unital_; }
  bool tracial() const noexcept { return tracial_; }
  const std::string& name() const noexcept { return name_; }
  bool valid() const noexcept { return static_cast<bool>(rule_); }

  S operator()(const Word& w) const {
    if (!rule_) throw RuleViolation("evaluation of an empty functional");
    for (const auto& g : w)
      if (!covers(g.family()))
        throw RuleViolation("functional '" + name_ + "' cannot evaluate " + w.to_string() +
                            ": letter " + to_string(g) + " belongs to another family");
    if (w.empty() && unital_) return S(1);
    return (*rule_)(w);
  }

  S evaluate(const Polynomial<S>& p) const {
    S out(0);
    for (const auto& [w, c] : p.terms()) out += c * (*this)(w);
    return out;
  }

  /// Unit value; 1 for unital functionals, arbitrary otherwise (omega(1)).
  S unit_value() const { return (*this)(Word{}); }

  static MomentFunctional dirac(Family f, S point = S(1)) {
    return MomentFunctional({f}, [point](const Word& w) { return power_of(point, w.size()); },
                            true, true, "dirac");
  }

  /// Standard semicircle: Catalan numbers on even lengths, 0 on odd lengths.
  static MomentFunctional semicircle(Family f) {
    return MomentFunctional({f}, [](const Word& w) { return catalan_moment(w.size()); }, true, true,
                            "semicircle");
  }

  /// Augmentation: 1 on the empty word, 0 elsewhere.
  static MomentFunctional delta(Family f) {
    return MomentFunctional({f}, [](const Word& w) { return w.empty() ? S(1) : S(0); }, true, true,
                            "delta");
  }

  /// Two-atom law p*delta_x + (1-p)*delta_y.
  static MomentFunctional bernoulli(Family f, S x, S y, S p) {
    return MomentFunctional(
        {f},
        [x, y, p](const Word& w) { return p * power_of(x, w.size()) + (S(1) - p) * power_of(y, w.size()); },
        true, true, "bernoulli");
  }

  /// Word-length rule: value(w) = moments[|w|]; unital iff moments[0] == 1.
  static MomentFunctional from_length_moments(Family f, std::vector<S> moments, bool unital, std::string name) {
    return MomentFunctional(
        {f},
        [m = std::move(moments)](const Word& w) {
          if (w.size() >= m.size()) throw RuleViolation("no moment of order " + std::to_string(w.size()));
          return m[w.size()];
        },
        unital, true, std::move(name));
  }

  /// Explicit finite table. Tracial tables are keyed by necklace
  /// representative, so one rotation per necklace suffices and conflicting
  /// rotations are rejected. Missing words raise RuleViolation on lookup.
  static MomentFunctional table(Family f, const std::map<Word, S>& values, bool tracial, bool unital,
                                std::string name = "table") {
    auto stored = std::make_shared<std::map<Word, S>>();
    for (const auto& [w, v] : values) {
      if (!w.single_family(f)) throw RuleViolation("table entry " + w.to_string() + " leaves the family");
      Word key = tracial ? canonical_rotation(w) : w;
      auto [it, inserted] = stored->emplace(key, v);
      if (!inserted && !(it->second == v))
        throw RuleViolation("tracial table has conflicting values on rotations of " + w.to_string());
    }
    if (unital) {
      auto it = stored->find(Word{});
      if (it != stored->end() && !(it->second == S(1)))
        throw RuleViolation("unital table must have value 1 on the unit");
    }
    return MomentFunctional(
        {f},
        [stored, tracial](const Word& w) {
          auto it = stored->find(tracial ? canonical_rotation(w) : w);
          if (it == stored->end()) throw RuleViolation("no table value for " + w.to_string());
          return it->second;
        },
        unital, tracial, std::move(name));
  }

  static S power_of(const S& x, std::size_t k) {
    S out(1);
    for (std::size_t i = 0; i < k; ++i) out *= x;
    return out;
  }

  static S catalan_moment(std::size_t n) {
    if (n % 2) return S(0);
    // C_{m+1} = sum_{i<=m} C_i C_{m-i}: first-return decomposition.
    std::vector<S> c{S(1)};
    for (std::size_t m = 0; m < n / 2; ++m) {
      S next(0);
      for (std::size_t i = 0; i <= m; ++i) next += c[i] * c[m - i];
      c.push_back(next);
    }
    return c[n / 2];
  }

 private:
  std::vector<Family> families_;
  std::shared_ptr<const Rule> rule_;
  bool unital_ = true;
  bool tracial_ = false;
  std::string name_;
};

/// p - f(p)*1. The argument must be supported on the functional's families.
template <Scalar S>
Polynomial<S> center(const MomentFunctional<S>& f, const Polynomial<S>& p) {
  if (!f.unital()) throw RuleViolation("centering requires a unital functional");
  return p - Polynomial<S>(f.evaluate(p));
}

template <Scalar S>
void check_same_families(const MomentFunctional<S>& a, const MomentFunctional<S>& b) {
  if (a.families() != b.families())
    throw RuleViolation("functionals '" + a.name() + "' and '" + b.name() + "' live on different families");
}

/// (phi, psi) with both unital.
template <Scalar S>
struct FunctionalPair {
  MomentFunctional<S> phi;
  MomentFunctional<S> psi;

  void validate() const {
    if (!phi.unital() || !psi.unital()) throw RuleViolation("pair functionals must be unital");
    check_same_families(phi, psi);
  }
};

/// (psi, phi, omega): psi, phi unital, omega tracial with arbitrary omega(1).
template <Scalar S>
struct FunctionalTriple {
  MomentFunctional<S> psi;
  MomentFunctional<S> phi;
  MomentFunctional<S> omega;

  void validate() const {
    if (!phi.unital() || !psi.unital()) throw RuleViolation("psi and phi must be unital");
    if (!omega.tracial()) throw RuleViolation("omega must be tracial");
    check_same_families(psi, phi);
    check_same_families(psi, omega);
  }
};

/// (phi, psi, theta), all unital; input of the indented product.
template <Scalar S>
struct IndentedTriple {
  MomentFunctional<S> phi;
  MomentFunctional<S> psi;
  MomentFunctional<S> theta;

  void validate() const {
    if (!phi.unital() || !psi.unital() || !theta.unital())
      throw RuleViolation("indented triple functionals must be unital");
    check_same_families(phi, psi);
    check_same_families(phi, theta);
  }
};

/// The model A_N = diag(theta, a, ..., a) with v_N = e_1:
///   psi (limit trace)  X^k -> a^k
///   phi (vector state) X^k -> theta^k
///   omega (1/N term)   X^k -> theta^k - a^k, omega(1) = 0
/// and tr_N(A_N^k) = a^k + (theta^k - a^k)/N for every N.
template <Scalar S>
struct SpikedDiagonal {
  S theta;
  S a;

  FunctionalTriple<S> triple(Family f) const {
    auto pw = &MomentFunctional<S>::power_of;
    S th = theta, aa = a;
    return FunctionalTriple<S>{
        MomentFunctional<S>({f}, [aa, pw](const Word& w) { return pw(aa, w.size()); }, true, true, "spiked-psi"),
        MomentFunctional<S>({f}, [th, pw](const Word& w) { return pw(th, w.size()); }, true, true, "spiked-phi"),
        MomentFunctional<S>(
            {f}, [th, aa, pw](const Word& w) { return pw(th, w.size()) - pw(aa, w.size()); }, false, true,
            "spiked-omega")};
  }

  /// Exact normalized trace of A_N^k.
  S trace(std::size_t n, std::size_t k) const {
    return MomentFunctional<S>::power_of(a, k) +
           (MomentFunctional<S>::power_of(theta, k) - MomentFunctional<S>::power_of(a, k)) /
               S(static_cast<long>(n));
  }
};

template <Scalar S>
FunctionalTriple<S> spiked_diagonal_triple(S theta, S a, Family f = 0) {
  return SpikedDiagonal<S>{theta, a}.triple(f);
}

/// Coefficient-wise conversion of an exact functional to floating point.
inline MomentFunctional<Complex> to_floating(const MomentFunctional<QComplex>& f) {
  return MomentFunctional<Complex>(
      f.families(), [f](const Word& w) { return f(w).to_complex(); }, f.unital(), f.tracial(), f.name());
}

}  // namespace vortex
