#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace vortex {

/// Family label: which tensor factor / algebra a generator belongs to.
using Family = std::uint16_t;

/// A noncommuting indeterminate, e.g. X3 = {family 0, index 3}.
class Generator {
 public:
  constexpr Generator() = default;
  constexpr Generator(Family family, std::uint32_t index) : family_(family), index_(index) {}

  constexpr Family family() const noexcept { return family_; }
  constexpr std::uint32_t index() const noexcept { return index_; }

  friend constexpr auto operator<=>(const Generator&, const Generator&) = default;

 private:
  Family family_ = 0;
  std::uint32_t index_ = 0;
};

inline constexpr Generator X(std::uint32_t i) { return {0, i}; }
inline constexpr Generator Y(std::uint32_t i) { return {1, i}; }
inline constexpr Generator Z(std::uint32_t i) { return {2, i}; }

/// A monomial: finite sequence of generators. The empty word is the unit.
class Word {
 public:
  Word() = default;
  Word(std::initializer_list<Generator> letters) : letters_(letters) {}
  explicit Word(std::vector<Generator> letters) : letters_(std::move(letters)) {}
  Word(std::span<const Generator> letters) : letters_(letters.begin(), letters.end()) {}  // NOLINT

  /// g^k.
  static Word power(Generator g, std::size_t k) { return Word(std::vector<Generator>(k, g)); }

  std::size_t size() const noexcept { return letters_.size(); }
  bool empty() const noexcept { return letters_.empty(); }
  const Generator& operator[](std::size_t i) const { return letters_[i]; }
  std::span<const Generator> letters() const noexcept { return letters_; }
  auto begin() const noexcept { return letters_.begin(); }
  auto end() const noexcept { return letters_.end(); }

  /// Sequence of letter families, e.g. X0*X1*Y0 -> {0,0,1}.
  std::vector<Family> family_pattern() const;
  /// True when every letter belongs to `family`; the empty word qualifies.
  bool single_family(Family family) const noexcept;

  Word& operator*=(const Word& rhs) {
    letters_.insert(letters_.end(), rhs.letters_.begin(), rhs.letters_.end());
    return *this;
  }
  friend Word operator*(Word lhs, const Word& rhs) { return lhs *= rhs; }

  friend bool operator==(const Word&, const Word&) = default;
  /// Shortlex order: shorter words first, then lexicographic by generator.
  friend std::strong_ordering operator<=>(const Word& a, const Word& b);

  /// "X0*Y1*X0"; the empty word renders as "1".
  std::string to_string() const;

 private:
  std::vector<Generator> letters_;
};

/// Renders a single generator as "X3", "Y0", "Z1" (families >= 3 as "F<f>_<i>").
std::string to_string(const Generator& g);

/// Rotates a word cyclically so that letter `shift` comes first.
Word rotate(const Word& w, std::size_t shift);

/// The lexicographically least cyclic rotation (necklace representative).
Word canonical_rotation(const Word& w);

/// Splits `w` into maximal runs of consecutive letters whose families map to
/// the same key under `key_of`. With the identity key this is the alternating
/// decomposition into single-family monomials.
template <class KeyOf>
std::vector<Word> split_runs(const Word& w, KeyOf&& key_of) {
  std::vector<Word> runs;
  std::size_t start = 0;
  for (std::size_t i = 1; i <= w.size(); ++i) {
    if (i == w.size() || key_of(w[i].family()) != key_of(w[start].family())) {
      runs.emplace_back(w.letters().subspan(start, i - start));
      start = i;
    }
  }
  return runs;
}

struct WordHash {
  std::size_t operator()(const Word& w) const noexcept;
};

}  // namespace vortex

template <>
struct std::hash<vortex::Word> : vortex::WordHash {};
