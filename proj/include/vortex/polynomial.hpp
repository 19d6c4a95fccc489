#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "vortex/error.hpp"
#include "vortex/rational_complex.hpp"
#include "vortex/word.hpp"

namespace vortex {

/// Finite linear combination of words. Zero coefficients are never stored.
template <Scalar S>
class Polynomial {
 public:
  using Terms = std::map<Word, S>;

  Polynomial() = default;
  Polynomial(S scalar) { add_term(Word{}, std::move(scalar)); }  // NOLINT
  Polynomial(Word w, S coefficient = S(1)) { add_term(std::move(w), std::move(coefficient)); }  // NOLINT
  Polynomial(Generator g) : Polynomial(Word{g}) {}  // NOLINT

  static Polynomial unit() { return Polynomial(S(1)); }

  const Terms& terms() const noexcept { return terms_; }
  bool is_zero() const noexcept { return terms_.empty(); }
  std::size_t size() const noexcept { return terms_.size(); }

  S coefficient(const Word& w) const {
    auto it = terms_.find(w);
    return it == terms_.end() ? S(0) : it->second;
  }
  S constant_term() const { return coefficient(Word{}); }

  /// Families of all letters appearing in the support.
  std::set<Family> families() const {
    std::set<Family> out;
    for (const auto& [w, c] : terms_)
      for (const auto& g : w) out.insert(g.family());
    return out;
  }
  bool supported_on(Family f) const {
    for (const auto& [w, c] : terms_)
      if (!w.single_family(f)) return false;
    return true;
  }
  std::size_t degree() const {
    std::size_t d = 0;
    for (const auto& [w, c] : terms_) d = std::max(d, w.size());
    return d;
  }

  void add_term(Word w, S coefficient) {
    if (is_zero_scalar(coefficient)) return;
    auto [it, inserted] = terms_.try_emplace(std::move(w), coefficient);
    if (!inserted) {
      it->second += coefficient;
      if (is_zero_scalar(it->second)) terms_.erase(it);
    }
  }

  Polynomial& operator+=(const Polynomial& o) {
    for (const auto& [w, c] : o.terms_) add_term(w, c);
    return *this;
  }
  Polynomial& operator-=(const Polynomial& o) {
    for (const auto& [w, c] : o.terms_) add_term(w, -c);
    return *this;
  }
  Polynomial& operator*=(const S& s) {
    if (is_zero_scalar(s)) {
      terms_.clear();
      return *this;
    }
    for (auto& [w, c] : terms_) c *= s;
    return *this;
  }

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator-(Polynomial a) { return a *= S(-1); }
  friend Polynomial operator*(Polynomial a, const S& s) { return a *= s; }
  friend Polynomial operator*(const S& s, Polynomial a) { return a *= s; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    Polynomial out;
    for (const auto& [wa, ca] : a.terms_)
      for (const auto& [wb, cb] : b.terms_) out.add_term(wa * wb, ca * cb);
    return out;
  }
  Polynomial& operator*=(const Polynomial& o) { return *this = *this * o; }

  friend bool operator==(const Polynomial&, const Polynomial&) = default;

  std::string to_string() const {
    if (terms_.empty()) return "0";
    std::string out;
    bool first = true;
    for (const auto& [w, c] : terms_) {
      std::string coef = format_scalar(c);
      bool negative = !coef.empty() && coef[0] == '-' && coef.find(' ') == std::string::npos;
      if (negative) coef.erase(0, 1);
      if (coef.find(' ') != std::string::npos) coef = "(" + coef + ")";
      if (!first) out += negative ? " - " : " + ";
      else if (negative) out += "-";
      first = false;
      if (w.empty()) {
        out += coef;
      } else {
        if (coef != "1") out += coef + "*";
        out += w.to_string();
      }
    }
    return out;
  }

 private:
  static bool is_zero_scalar(const S& s) { return vortex::is_zero(s); }

  Terms terms_;
};

/// A single-family piece of an alternating decomposition.
template <Scalar S>
struct Block {
  Family family;
  Polynomial<S> content;

  friend bool operator==(const Block&, const Block&) = default;
};

/// Groups consecutive same-family letters of `w` into blocks; adjacent blocks
/// have distinct families and their product in order reproduces `w`.
template <Scalar S>
std::vector<Block<S>> alternating_blocks(const Word& w) {
  std::vector<Block<S>> out;
  for (auto& run : split_runs(w, [](Family f) { return f; })) {
    Family f = run[0].family();
    out.push_back(Block<S>{f, Polynomial<S>(std::move(run))});
  }
  return out;
}

/// Merges the last block onto the front of the first one (traciality):
/// [A:P1, B:Q1, ..., A:Pn] -> [A:(Pn*P1), B:Q1, ...]. The input must have at
/// least two blocks whose first and last families agree.
template <Scalar S>
std::vector<Block<S>> cyclic_rotations(const std::vector<Block<S>>& blocks) {
  if (blocks.size() < 2)
    throw RuleViolation("cyclic rotation needs at least two blocks");
  if (blocks.front().family != blocks.back().family)
    throw RuleViolation("cyclic rotation requires equal end families; sequence is already cyclically alternating");
  std::vector<Block<S>> out;
  out.reserve(blocks.size() - 1);
  out.push_back(Block<S>{blocks.front().family, blocks.back().content * blocks.front().content});
  for (std::size_t i = 1; i + 1 < blocks.size(); ++i) out.push_back(blocks[i]);
  return out;
}

}  // namespace vortex
