#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "vortex/functional_json.hpp"
#include "vortex/parse.hpp"

using namespace vortex;
using P = Polynomial<QComplex>;
using F = MomentFunctional<QComplex>;

namespace {

QComplex q(long p, long d = 1) { return QComplex(mpq_class(p, d)); }

}  // namespace

TEST_CASE("evaluate") {
  auto dirac = F::dirac(0);
  CHECK(dirac.evaluate(P(Word::power(X(0), 3))) == q(1));
  CHECK(dirac.evaluate(P::unit()) == q(1));
  // diag(2,0,0,0): tr(A^2) = 4/4.
  SpikedDiagonal<QComplex> spike{q(2), q(0)};
  CHECK(spike.trace(4, 2) == q(1));
  CHECK_THROWS_AS(dirac.evaluate(parse_polynomial("X0*Y0")), RuleViolation);
  CHECK_THROWS_AS(dirac(Word{Y(0)}), RuleViolation);
}

TEST_CASE("center") {
  auto semi = F::semicircle(0);
  CHECK(center(semi, P::unit()).is_zero());
  auto m = F::dirac(0, q(3, 2));
  CHECK(center(m, P(X(0))) == P(X(0)) - P(q(3, 2)));
  CHECK(center(semi, P(Word{X(0), X(0)})) == P(Word{X(0), X(0)}) - P(q(1)));
}

TEST_CASE("delta functional") {
  auto d = F::delta(0);
  CHECK(d(Word{}) == q(1));
  CHECK(d(Word::power(X(0), 5)) == q(0));
  CHECK(d.evaluate(parse_polynomial("3 + 2*X0")) == q(3));
  CHECK(d.unital());
  CHECK(d.tracial());
}

TEST_CASE("rule-backed moments") {
  auto semi = F::semicircle(0);
  const long catalan[] = {1, 0, 1, 0, 2, 0, 5, 0, 14, 0, 42};
  for (std::size_t k = 0; k < 11; ++k) CHECK(semi(Word::power(X(0), k)) == q(catalan[k]));
  auto coin = F::bernoulli(0, q(1), q(-1), q(1, 2));
  CHECK(coin(Word::power(X(0), 3)) == q(0));
  CHECK(coin(Word::power(X(0), 4)) == q(1));
  auto skew = F::bernoulli(0, q(2), q(0), q(1, 4));
  CHECK(skew(Word::power(X(0), 3)) == q(2));
}

TEST_CASE("spiked_diagonal_triple") {
  auto flat = spiked_diagonal_triple(q(1), q(1));
  for (std::size_t k = 1; k < 6; ++k) CHECK(flat.omega(Word::power(X(0), k)) == q(0));
  auto t = spiked_diagonal_triple(q(2), q(0));
  Word x3 = Word::power(X(0), 3);
  CHECK(t.psi(x3) == q(0));
  CHECK(t.omega(x3) == q(8));
  CHECK(t.phi(x3) == q(8));
  CHECK(SpikedDiagonal<QComplex>{q(2), q(0)}.trace(4, 3) == q(2));
  CHECK(t.omega.unit_value() == q(0));
  SpikedDiagonal<QComplex> s{q(2), q(1)};
  for (long n : {3, 7, 100}) CHECK(s.trace(static_cast<std::size_t>(n), 2) == q(1) + q(3, n));
}

TEST_CASE("property: spiked model trace expansion is exact") {
  for (auto [theta, a] : {std::pair{q(2), q(0)}, std::pair{q(3, 2), q(-1, 3)}, std::pair{q(-1), q(2)}}) {
    auto triple = spiked_diagonal_triple(theta, a);
    for (long n : {4, 8, 16})
      for (std::size_t k = 0; k <= 8; ++k) {
        // Direct trace of diag(theta, a, ..., a)^k.
        QComplex direct = F::power_of(theta, k) + QComplex(n - 1) * F::power_of(a, k);
        direct /= QComplex(n);
        Word w = Word::power(X(0), k);
        QComplex omega_k = k == 0 ? q(0) : triple.omega(w);
        CHECK(direct == triple.psi(w) + omega_k / QComplex(n));
      }
  }
}

TEST_CASE("property: linearity and centering") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<long> num(-5, 5), den(1, 4);
  auto f = oracle::random_functional({0}, 99, false);
  auto words = oracle::all_words({X(0), X(1)}, 0, 3);
  std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
  for (int t = 0; t < 100; ++t) {
    P p, r;
    for (int i = 0; i < 3; ++i) {
      p.add_term(words[pick(rng)], q(num(rng), den(rng)));
      r.add_term(words[pick(rng)], q(num(rng), den(rng)));
    }
    QComplex alpha = q(num(rng), den(rng)), beta = q(num(rng), den(rng));
    CHECK(f.evaluate(alpha * p + beta * r) == alpha * f.evaluate(p) + beta * f.evaluate(r));
    CHECK(f.evaluate(center(f, p)).is_zero());
  }
}

TEST_CASE("property: tracial functionals are invariant under rotation") {
  auto f = oracle::random_functional({0}, 5, true);
  for (const auto& w : oracle::all_words({X(0), X(1)}, 1, 6))
    for (std::size_t s = 1; s < w.size(); ++s) CHECK(f(rotate(w, s)) == f(w));
}

TEST_CASE("table functionals") {
  std::map<Word, QComplex> values{{Word{X(0)}, q(1, 2)}, {Word{X(0), X(1)}, q(3)}};
  auto f = F::table(0, values, true, true);
  CHECK(f(Word{X(1), X(0)}) == q(3));
  CHECK(f(Word{}) == q(1));
  CHECK_THROWS_AS(f(Word{X(1)}), RuleViolation);
  values[Word{X(1), X(0)}] = q(4);
  CHECK_THROWS_AS(F::table(0, values, true, true), RuleViolation);
  CHECK_NOTHROW(F::table(0, values, false, true));
}

TEST_CASE("JSON functional descriptions") {
  auto doc = nlohmann::json::parse(R"({"family":0,"values":{"X0":"1/2","X0*X0":1},"tracial":true})");
  REQUIRE(json_is_exact(doc));
  auto f = functional_from_json<QComplex>(doc, true);
  CHECK(f(Word{X(0), X(0)}) == q(1));
  CHECK(f(Word{X(0)}) == q(1, 2));
  CHECK(f.tracial());
  auto floating = nlohmann::json::parse(R"({"family":1,"values":{"Y0":0.5}})");
  CHECK_FALSE(json_is_exact(floating));
  CHECK(functional_from_json<Complex>(floating, true)(Word{Y(0)}) == Complex(0.5));
  auto rule = nlohmann::json::parse(R"({"family":1,"rule":"bernoulli","x":1,"y":-1,"p":"1/2"})");
  CHECK(functional_from_json<QComplex>(rule, true)(Word::power(Y(0), 2)) == q(1));
  CHECK_THROWS_AS(functional_from_json<QComplex>(nlohmann::json::parse(R"({"family":0,"rule":"cauchy"})"), true),
                  ParseError);
  CHECK_THROWS_AS(functional_from_json<QComplex>(nlohmann::json::parse(R"({"family":0,"values":{"X0":1}})"), false),
                  ParseError);
}
