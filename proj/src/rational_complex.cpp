#include "vortex/rational_complex.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>

#include "vortex/error.hpp"

namespace vortex {

QComplex QComplex::parse_rational(const std::string& text) {
  std::size_t pos = 0;
  auto fail = [&](const char* what) { throw ParseError(std::string(what) + " in '" + text + "'", pos); };
  bool negative = false;
  if (pos < text.size() && (text[pos] == '-' || text[pos] == '+')) negative = text[pos++] == '-';
  auto digits = [&](std::string& out) {
    std::size_t start = pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) out += text[pos++];
    return pos > start;
  };
  std::string whole, frac, den;
  bool have_whole = digits(whole);
  mpq_class value;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    bool have_frac = digits(frac);
    if (!have_whole && !have_frac) fail("expected digits");
    mpz_class num(whole.empty() ? "0" : whole);
    mpz_class scale = 1;
    for (char c : frac) {
      num = num * 10 + (c - '0');
      scale *= 10;
    }
    value = mpq_class(num, scale);
  } else {
    if (!have_whole) fail("expected digits");
    value = mpq_class(mpz_class(whole));
    if (pos < text.size() && text[pos] == '/') {
      std::size_t den_start = ++pos;
      if (!digits(den)) fail("expected denominator");
      mpz_class d(den);
      if (d == 0) {
        pos = den_start;
        fail("zero denominator");
      }
      value = mpq_class(mpz_class(whole), d);
    }
  }
  if (pos != text.size()) fail("unexpected character");
  value.canonicalize();
  return QComplex(negative ? mpq_class(-value) : value);
}

QComplex& QComplex::operator/=(const QComplex& o) {
  if (o.is_zero()) throw DomainError("division by zero");
  mpq_class n = o.re_ * o.re_ + o.im_ * o.im_;
  mpq_class r = (re_ * o.re_ + im_ * o.im_) / n;
  mpq_class m = (im_ * o.re_ - re_ * o.im_) / n;
  re_ = std::move(r);
  im_ = std::move(m);
  return *this;
}

std::string QComplex::to_string() const {
  if (sgn(im_) == 0) return re_.get_str();
  std::string im_part;
  mpq_class mag = abs(im_);
  im_part = (mag == 1 ? std::string() : mag.get_str() + "*") + "i";
  if (sgn(re_) == 0) return (sgn(im_) < 0 ? "-" : "") + im_part;
  return re_.get_str() + (sgn(im_) < 0 ? " - " : " + ") + im_part;
}

namespace {

std::string format_real(double x) {
  if (x == 0.0) x = 0.0;  // drop negative zero
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", x);
  return buf;
}

}  // namespace

std::string format_decimal(const Complex& z) {
  if (z.imag() == 0.0) return format_real(z.real());
  std::string im = format_real(std::abs(z.imag())) + "*i";
  if (z.real() == 0.0) return (z.imag() < 0 ? "-" : "") + im;
  return format_real(z.real()) + (z.imag() < 0 ? " - " : " + ") + im;
}

}  // namespace vortex
