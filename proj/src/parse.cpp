#include "vortex/parse.hpp"

#include <cctype>
#include <string>

namespace vortex {

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Polynomial<QComplex> parse_all() {
    skip();
    if (at_end()) throw ParseError("empty expression", pos_);
    auto p = expr();
    skip();
    if (!at_end()) throw ParseError(std::string("unexpected '") + text_[pos_] + "'", pos_);
    return p;
  }

 private:
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }
  void skip() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip();
    if (peek() != c) return false;
    ++pos_;
    return true;
  }

  Polynomial<QComplex> expr() {
    Polynomial<QComplex> out;
    skip();
    bool negative = false;
    if (peek() == '-' || peek() == '+') negative = text_[pos_++] == '-';
    out = term();
    if (negative) out = -out;
    while (true) {
      skip();
      if (accept('+')) out += term();
      else if (accept('-')) out -= term();
      else return out;
    }
  }

  Polynomial<QComplex> term() {
    auto out = power();
    while (accept('*')) out = out * power();
    return out;
  }

  Polynomial<QComplex> power() {
    auto base = factor();
    if (!accept('^')) return base;
    skip();
    std::size_t start = pos_;
    while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    if (pos_ == start) throw ParseError("expected exponent", pos_);
    unsigned long k = std::stoul(std::string(text_.substr(start, pos_ - start)));
    if (k > 64) throw ParseError("exponent too large", start);
    auto out = Polynomial<QComplex>::unit();
    for (unsigned long i = 0; i < k; ++i) out = out * base;
    return out;
  }

  Polynomial<QComplex> factor() {
    skip();
    if (at_end()) throw ParseError("unexpected end of input", pos_);
    char c = peek();
    if (c == '(') {
      ++pos_;
      auto inner = expr();
      if (!accept(')')) throw ParseError("expected ')'", pos_);
      return inner;
    }
    if (c == 'X' || c == 'Y' || c == 'Z') return Polynomial<QComplex>(Word{generator()});
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return Polynomial<QComplex>(number());
    throw ParseError(std::string("unexpected '") + c + "'", pos_);
  }

  Generator generator() {
    Family f = static_cast<Family>(text_[pos_] - 'X');
    std::size_t start = ++pos_;
    while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    if (pos_ == start) throw ParseError("expected generator index", pos_);
    if (pos_ - start > 9) throw ParseError("generator index too large", start);
    return Generator(f, static_cast<std::uint32_t>(std::stoul(std::string(text_.substr(start, pos_ - start)))));
  }

  QComplex number() {
    std::size_t start = pos_;
    while (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.' || peek() == '/') ++pos_;
    try {
      return QComplex::parse_rational(std::string(text_.substr(start, pos_ - start)));
    } catch (const ParseError& e) {
      throw ParseError("malformed number", e.position() == std::string::npos ? start : start + e.position());
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

Polynomial<QComplex> parse_polynomial(std::string_view text) { return Parser(text).parse_all(); }

Word parse_word(std::string_view text) {
  auto p = parse_polynomial(text);
  if (p.size() != 1 || p.terms().begin()->second != QComplex(1))
    throw ParseError("expected a single monomial", 0);
  return p.terms().begin()->first;
}

Polynomial<Complex> to_floating(const Polynomial<QComplex>& p) {
  Polynomial<Complex> out;
  for (const auto& [w, c] : p.terms()) out.add_term(w, c.to_complex());
  return out;
}

}  // namespace vortex
