#pragma once

#include <string_view>

#include "vortex/polynomial.hpp"

namespace vortex {

/// Parses a monomial such as "X0*Y1*X0" ("1" is the empty word).
Word parse_word(std::string_view text);

/// Parses a polynomial: sums/differences of products of generators, rational
/// or exact-decimal scalars and parenthesized subexpressions, with "^k" powers.
/// Examples: "X0*Y0", "(X0 - 1/2)*(Y0 - 0.25)^2", "3/4*X1 + 1".
Polynomial<QComplex> parse_polynomial(std::string_view text);

/// Coefficient-wise conversion of an exact polynomial to floating point.
Polynomial<Complex> to_floating(const Polynomial<QComplex>& p);

template <Scalar S>
Polynomial<S> parse_as(std::string_view text) {
  if constexpr (std::same_as<S, QComplex>) {
    return parse_polynomial(text);
  } else {
    return to_floating(parse_polynomial(text));
  }
}

}  // namespace vortex
