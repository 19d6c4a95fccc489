#include <doctest.h>

#include <set>

#include "oracles.hpp"

using namespace vortex;
using Q = QComplex;
using F = MomentFunctional<Q>;
using P = Polynomial<Q>;

namespace {

Q q(long p, long d = 1) { return Q(mpq_class(p, d)); }

std::uint64_t catalan_by_recurrence(int n) {
  std::vector<std::uint64_t> c{1};
  for (int m = 0; m < n; ++m) {
    std::uint64_t next = 0;
    for (int i = 0; i <= m; ++i) next += c[static_cast<std::size_t>(i)] * c[static_cast<std::size_t>(m - i)];
    c.push_back(next);
  }
  return c[static_cast<std::size_t>(n)];
}

std::vector<std::size_t> block_sizes(const NoncrossingPartition& p) {
  std::vector<std::size_t> s;
  for (const auto& b : p.blocks()) s.push_back(b.size());
  std::sort(s.begin(), s.end());
  return s;
}

std::vector<Block<Q>> alternate(std::initializer_list<Word> words) {
  std::vector<Block<Q>> out;
  for (const auto& w : words) out.push_back(Block<Q>{w[0].family(), P(w)});
  return out;
}

}  // namespace

TEST_CASE("enumerate_nc") {
  CHECK(enumerate_nc(1).size() == 1);
  CHECK(enumerate_nc(3).size() == 5);
  auto nc4 = enumerate_nc(4);
  CHECK(nc4.size() == 14);
  for (const auto& p : nc4) CHECK(p.to_string() != "{1,3}{2,4}");
  CHECK(nc4.front().to_string() == "{1,2,3,4}");
  CHECK(nc4.back().to_string() == "{1}{2}{3}{4}");
  CHECK_THROWS_AS(enumerate_nc(0), DomainError);
  CHECK_THROWS_AS(enumerate_nc(13), DomainError);
}

TEST_CASE("brute-force filter agrees with the enumeration") {
  for (int n = 1; n <= 7; ++n) {
    std::set<std::string> brute;
    for (const auto& blocks : oracle::all_set_partitions(n))
      if (oracle::crossing_free(blocks)) brute.insert(NoncrossingPartition(n, blocks).to_string());
    std::set<std::string> listed;
    for (const auto& p : enumerate_nc(n)) listed.insert(p.to_string());
    CHECK(listed == brute);
    CHECK(listed.size() == enumerate_nc(n).size());
  }
}

TEST_CASE("property: |NC(n)| is the Catalan number") {
  for (int n = 1; n <= 10; ++n) {
    CHECK(enumerate_nc(n).size() == catalan_by_recurrence(n));
    CHECK(catalan_number(n) == catalan_by_recurrence(n));
  }
}

TEST_CASE("partition validation") {
  CHECK_THROWS_AS(NoncrossingPartition(4, {{1, 3}, {2, 4}}), DomainError);
  CHECK_THROWS_AS(NoncrossingPartition(3, {{1, 2}}), DomainError);
  CHECK_THROWS_AS(NoncrossingPartition(3, {{1, 2}, {2, 3}}), DomainError);
  NoncrossingPartition p(5, {{5, 1}, {3, 2}, {4}});
  CHECK(p.to_string() == "{1,5}{2,3}{4}");
  CHECK(p.block_of(5) == 0);
}

TEST_CASE("kreweras") {
  for (int n = 1; n <= 6; ++n) {
    CHECK(kreweras(NoncrossingPartition::singletons(n)) == NoncrossingPartition::one_block(n));
    CHECK(kreweras(NoncrossingPartition::one_block(n)) == NoncrossingPartition::singletons(n));
  }
  // Frozen from the brute-force maximality oracle.
  CHECK(kreweras(NoncrossingPartition(4, {{1, 2}, {3, 4}})).to_string() == "{1}{2,4}{3}");
  CHECK(kreweras(NoncrossingPartition(4, {{1, 4}, {2, 3}})).to_string() == "{1,3}{2}{4}");
  CHECK(kreweras(NoncrossingPartition(3, {{1, 3}, {2}})).to_string() == "{1,2}{3}");
}

TEST_CASE("kreweras matches the brute-force maximality oracle for n <= 6") {
  for (int n = 1; n <= 6; ++n)
    for (const auto& pi : enumerate_nc(n)) CHECK(kreweras(pi) == oracle::brute_kreweras(pi));
}

TEST_CASE("property: kreweras counts and square") {
  for (int n = 1; n <= 8; ++n) {
    std::set<std::string> images;
    for (const auto& pi : enumerate_nc(n)) {
      auto k = kreweras(pi);
      CHECK(pi.block_count() + k.block_count() == static_cast<std::size_t>(n + 1));
      auto kk = kreweras(k);
      CHECK(block_sizes(kk) == block_sizes(pi));
      // K^2 is the rotation i -> i-1 (mod n).
      NoncrossingPartition::BlockList shifted;
      for (const auto& b : pi.blocks()) {
        std::vector<int> s;
        for (int x : b) s.push_back((x + n - 2) % n + 1);
        shifted.push_back(s);
      }
      CHECK(kk == NoncrossingPartition(n, shifted));
      images.insert(kk.to_string());
    }
    CHECK(images.size() == enumerate_nc(n).size());
  }
}

TEST_CASE("moments_to_cumulants") {
  auto dirac = moments_to_cumulants(F::dirac(0), 6);
  CHECK(dirac.kappa.at(Word{X(0)}) == q(1));
  for (std::size_t k = 2; k <= 6; ++k) CHECK(dirac.kappa.at(Word::power(X(0), k)) == q(0));
  auto semi = moments_to_cumulants(F::semicircle(0), 6);
  for (std::size_t k = 1; k <= 6; ++k) CHECK(semi.kappa.at(Word::power(X(0), k)) == q(k == 2 ? 1 : 0));
  auto coin = moments_to_cumulants(F::bernoulli(0, q(1), q(-1), q(1, 2)), 4);
  CHECK(coin.kappa.at(Word::power(X(0), 1)) == q(0));
  CHECK(coin.kappa.at(Word::power(X(0), 2)) == q(1));
  CHECK(coin.kappa.at(Word::power(X(0), 3)) == q(0));
  CHECK(coin.kappa.at(Word::power(X(0), 4)) == q(-1));
  CHECK_THROWS_AS(moments_to_cumulants(F::dirac(0), 11), DomainError);
}

TEST_CASE("property: cumulant round trip on random table functionals") {
  for (std::uint64_t seed : {1, 2, 3}) {
    auto f = oracle::random_functional({0}, seed, false);
    auto table = moments_to_cumulants(f, 6, {0, 1});
    for (const auto& w : oracle::all_words({X(0), X(1)}, 1, 6)) CHECK(cumulants_to_moment(table, w) == f(w));
  }
}

TEST_CASE("mixed_moment_oracle") {
  auto fa = oracle::random_functional({0}, 21, false);
  auto fb = oracle::random_functional({1}, 22, false);
  FreeCumulants<Q> ka(fa);
  Word a{X(0)}, b{Y(0)};
  CHECK(mixed_moment_oracle(ka, fb, alternate({a, b})) == fa(a) * fb(b));
  auto centered = F::dirac(0, q(0));
  FreeCumulants<Q> kc(centered);
  CHECK(mixed_moment_oracle(kc, fb, alternate({a, b})).is_zero());
  FreeCumulants<Q> ks(F::semicircle(0));
  // Free semicircles: tr(xyxy) = 0 while tr(x^2 y^2) = 1.
  CHECK(mixed_moment_oracle(ks, F::semicircle(1), alternate({a, b, a, b})) == q(0));
  CHECK(mixed_moment_oracle(ks, F::semicircle(1), alternate({Word{X(0), X(0)}, Word{Y(0), Y(0)}})) == q(1));
  CHECK_THROWS_AS(mixed_moment_oracle(ka, fb, alternate({a, a})), RuleViolation);
  CHECK_THROWS_AS(mixed_moment_oracle(ka, fb, alternate({a, b, a})), RuleViolation);
}
