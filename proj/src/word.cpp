#include "vortex/word.hpp"

#include <algorithm>

namespace vortex {

std::vector<Family> Word::family_pattern() const {
  std::vector<Family> out;
  out.reserve(letters_.size());
  for (const auto& g : letters_) out.push_back(g.family());
  return out;
}

bool Word::single_family(Family family) const noexcept {
  return std::all_of(letters_.begin(), letters_.end(),
                     [family](const Generator& g) { return g.family() == family; });
}

std::strong_ordering operator<=>(const Word& a, const Word& b) {
  if (auto c = a.size() <=> b.size(); c != 0) return c;
  return std::lexicographical_compare_three_way(a.letters_.begin(), a.letters_.end(),
                                                b.letters_.begin(), b.letters_.end());
}

std::string to_string(const Generator& g) {
  static constexpr char names[] = {'X', 'Y', 'Z'};
  if (g.family() < 3) return names[g.family()] + std::to_string(g.index());
  return "F" + std::to_string(g.family()) + "_" + std::to_string(g.index());
}

std::string Word::to_string() const {
  if (letters_.empty()) return "1";
  std::string out;
  for (std::size_t i = 0; i < letters_.size(); ++i) {
    if (i) out += '*';
    out += vortex::to_string(letters_[i]);
  }
  return out;
}

Word rotate(const Word& w, std::size_t shift) {
  if (w.empty()) return w;
  shift %= w.size();
  std::vector<Generator> out(w.begin() + static_cast<std::ptrdiff_t>(shift), w.end());
  out.insert(out.end(), w.begin(), w.begin() + static_cast<std::ptrdiff_t>(shift));
  return Word(std::move(out));
}

Word canonical_rotation(const Word& w) {
  Word best = w;
  for (std::size_t s = 1; s < w.size(); ++s) {
    Word r = rotate(w, s);
    if (r < best) best = std::move(r);
  }
  return best;
}

std::size_t WordHash::operator()(const Word& w) const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ w.size();
  for (const auto& g : w) {
    std::uint64_t x = (static_cast<std::uint64_t>(g.family()) << 32) | g.index();
    x *= 0x9e3779b97f4a7c15ULL;
    h = (h ^ (x >> 29) ^ x) * 0x100000001b3ULL;
  }
  return static_cast<std::size_t>(h);
}

}  // namespace vortex
