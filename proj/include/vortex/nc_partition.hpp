#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "vortex/functional.hpp"

namespace vortex {

/// Partition of {1..n} without crossings. Blocks are sorted internally and
/// ordered by their least element.
class NoncrossingPartition {
 public:
  using BlockList = std::vector<std::vector<int>>;

  /// Validates coverage, disjointness and the noncrossing condition.
  NoncrossingPartition(int n, BlockList blocks);

  static NoncrossingPartition singletons(int n);
  static NoncrossingPartition one_block(int n);

  int size() const noexcept { return n_; }
  const BlockList& blocks() const noexcept { return blocks_; }
  std::size_t block_count() const noexcept { return blocks_.size(); }
  /// 0-based index of the block containing element i (1-based).
  int block_of(int i) const { return label_[static_cast<std::size_t>(i - 1)]; }

  /// "{1,3}{2}".
  std::string to_string() const;

  friend bool operator==(const NoncrossingPartition&, const NoncrossingPartition&) = default;
  friend auto operator<=>(const NoncrossingPartition& a, const NoncrossingPartition& b) {
    return a.blocks_ <=> b.blocks_;
  }

 private:
  int n_;
  BlockList blocks_;
  std::vector<int> label_;
};

/// True when no a<b<c<d has a,c in one block and b,d in another.
bool is_noncrossing(const NoncrossingPartition::BlockList& blocks);

/// All of NC(n), 1 <= n <= 12, in lexicographic order of restricted growth
/// strings (block leaders increasing).
std::vector<NoncrossingPartition> enumerate_nc(int n);

/// Kreweras complement on the interleaved set 1 < 1' < 2 < 2' < ... < n < n':
/// i' and j' share a block iff no block of pi meets {i+1..j} and its outside.
NoncrossingPartition kreweras(const NoncrossingPartition& pi);

std::uint64_t catalan_number(int n);

/// Multilinear free cumulants of a functional, evaluated on tuples of
/// monomial arguments and memoized. kappa(a_1..a_n) is defined by
///   f(a_1 ... a_n) = sum_{pi in NC(n)} prod_{V in pi} kappa(a|_V).
template <Scalar S>
class FreeCumulants {
 public:
  explicit FreeCumulants(MomentFunctional<S> f) : f_(std::move(f)) {}

  const MomentFunctional<S>& functional() const noexcept { return f_; }

  S operator()(const std::vector<Word>& args) const {
    if (args.size() > 10) throw DomainError("free cumulants limited to 10 arguments");
    {
      std::shared_lock lock(mutex_);
      auto it = cache_.find(args);
      if (it != cache_.end()) return it->second;
    }
    S value = f_(product(args, {}));
    int n = static_cast<int>(args.size());
    if (n > 0) {
      for (const auto& pi : enumerate_nc(n)) {
        if (pi.block_count() == 1) continue;
        value -= on_partition(pi, args);
      }
    }
    std::unique_lock lock(mutex_);
    cache_.emplace(args, value);
    return value;
  }

  /// kappa_pi[a_1..a_n] = prod over blocks of kappa(a restricted to block).
  S on_partition(const NoncrossingPartition& pi, const std::vector<Word>& args) const {
    S out(1);
    for (const auto& block : pi.blocks()) {
      std::vector<Word> sub;
      for (int i : block) sub.push_back(args[static_cast<std::size_t>(i - 1)]);
      out *= (*this)(sub);
    }
    return out;
  }

  /// Moment f(a_1 ... a_n) recomputed from the cumulants.
  S moment(const std::vector<Word>& args) const {
    if (args.empty()) return f_(Word{});
    S out(0);
    for (const auto& pi : enumerate_nc(static_cast<int>(args.size()))) out += on_partition(pi, args);
    return out;
  }

  static Word product(const std::vector<Word>& args, const std::vector<int>& indices) {
    Word out;
    if (indices.empty()) {
      for (const auto& a : args) out *= a;
    } else {
      for (int i : indices) out *= args[static_cast<std::size_t>(i - 1)];
    }
    return out;
  }

 private:
  MomentFunctional<S> f_;
  mutable std::shared_mutex mutex_;
  mutable std::map<std::vector<Word>, S> cache_;
};

/// Letter-level cumulant table: kappa(w) = kappa_{|w|}(w_1, ..., w_n) for
/// every word of the family up to a maximal length.
template <Scalar S>
struct FreeCumulantTable {
  Family family;
  std::map<Word, S> kappa;
};

/// Computes kappa on every word over the given generator indices of the
/// family with length 1..maxlen (maxlen <= 10).
template <Scalar S>
FreeCumulantTable<S> moments_to_cumulants(const MomentFunctional<S>& f, int maxlen,
                                          const std::vector<std::uint32_t>& indices = {0}) {
  if (maxlen < 0 || maxlen > 10) throw DomainError("moments_to_cumulants: maxlen must be in [0, 10]");
  FreeCumulants<S> kappa(f);
  FreeCumulantTable<S> out{f.family(), {}};
  std::vector<Word> frontier{Word{}};
  for (int len = 1; len <= maxlen; ++len) {
    std::vector<Word> next;
    for (const auto& w : frontier)
      for (auto i : indices) next.push_back(w * Word{Generator(f.family(), i)});
    for (const auto& w : next) {
      std::vector<Word> args;
      for (const auto& g : w) args.push_back(Word{g});
      out.kappa.emplace(w, kappa(args));
    }
    frontier = std::move(next);
  }
  return out;
}

/// Inverse transform: moment of a word from a cumulant table.
template <Scalar S>
S cumulants_to_moment(const FreeCumulantTable<S>& table, const Word& w) {
  if (w.empty()) return S(1);
  S out(0);
  for (const auto& pi : enumerate_nc(static_cast<int>(w.size()))) {
    S term(1);
    for (const auto& block : pi.blocks()) {
      Word sub;
      for (int i : block) sub *= Word{w[static_cast<std::size_t>(i - 1)]};
      auto it = table.kappa.find(sub);
      if (it == table.kappa.end()) throw RuleViolation("cumulant table lacks " + sub.to_string());
      term *= it->second;
    }
    out += term;
  }
  return out;
}

/// Free mixed moment (psi_A * psi_B)(a_1 b_1 ... a_n b_n) computed as
///   sum_{pi in NC(n)} kappa^A_pi[a_1..a_n] psi_B,K(pi)[b_1..b_n].
/// `blocks` must alternate A, B, A, B, ... with even length.
template <Scalar S>
S mixed_moment_oracle(const FreeCumulants<S>& kappa_a, const MomentFunctional<S>& f_b,
                      const std::vector<Block<S>>& blocks) {
  if (blocks.empty() || blocks.size() % 2)
    throw RuleViolation("mixed moment oracle needs an even, nonempty alternating sequence");
  const auto& fa = kappa_a.functional();
  std::vector<Word> a, b;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& blk = blocks[i];
    const auto& owner = i % 2 == 0 ? fa : f_b;
    if (!owner.covers(blk.family) || (i > 0 && blocks[i - 1].family == blk.family))
      throw RuleViolation("mixed moment oracle input is not alternating A,B,...");
    if (blk.content.size() != 1 || !(blk.content.terms().begin()->second == S(1)))
      throw RuleViolation("mixed moment oracle blocks must be monomials");
    (i % 2 == 0 ? a : b).push_back(blk.content.terms().begin()->first);
  }
  int n = static_cast<int>(a.size());
  S out(0);
  for (const auto& pi : enumerate_nc(n)) {
    S term = kappa_a.on_partition(pi, a);
    if (is_zero(term)) continue;
    auto complement = kreweras(pi);
    for (const auto& block : complement.blocks()) term *= f_b(FreeCumulants<S>::product(b, block));
    out += term;
  }
  return out;
}

}  // namespace vortex
