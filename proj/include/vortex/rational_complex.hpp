#pragma once

#include <gmpxx.h>

#include <complex>
#include <concepts>
#include <functional>
#include <ostream>
#include <string>

namespace vortex {

/// Exact complex number with arbitrary-precision rational parts.
class QComplex {
 public:
  QComplex() = default;
  QComplex(long v) : re_(v) {}  // NOLINT(google-explicit-constructor)
  QComplex(mpq_class re) : re_(std::move(re)) { re_.canonicalize(); }  // NOLINT
  QComplex(mpq_class re, mpq_class im) : re_(std::move(re)), im_(std::move(im)) {
    re_.canonicalize();
    im_.canonicalize();
  }

  /// Parses "p", "p/q", "-p/q" or an exact decimal "1.25" into a real value.
  static QComplex parse_rational(const std::string& text);
  static QComplex i() { return QComplex(mpq_class(0), mpq_class(1)); }

  const mpq_class& real() const noexcept { return re_; }
  const mpq_class& imag() const noexcept { return im_; }

  bool is_zero() const noexcept { return sgn(re_) == 0 && sgn(im_) == 0; }
  bool is_real() const noexcept { return sgn(im_) == 0; }

  QComplex& operator+=(const QComplex& o) {
    re_ += o.re_;
    im_ += o.im_;
    return *this;
  }
  QComplex& operator-=(const QComplex& o) {
    re_ -= o.re_;
    im_ -= o.im_;
    return *this;
  }
  QComplex& operator*=(const QComplex& o) {
    mpq_class r = re_ * o.re_ - im_ * o.im_;
    mpq_class m = re_ * o.im_ + im_ * o.re_;
    re_ = std::move(r);
    im_ = std::move(m);
    return *this;
  }
  QComplex& operator/=(const QComplex& o);

  friend QComplex operator+(QComplex a, const QComplex& b) { return a += b; }
  friend QComplex operator-(QComplex a, const QComplex& b) { return a -= b; }
  friend QComplex operator*(QComplex a, const QComplex& b) { return a *= b; }
  friend QComplex operator/(QComplex a, const QComplex& b) { return a /= b; }
  friend QComplex operator-(const QComplex& a) { return QComplex(-a.re_, -a.im_); }
  friend bool operator==(const QComplex& a, const QComplex& b) {
    return a.re_ == b.re_ && a.im_ == b.im_;
  }

  std::complex<double> to_complex() const { return {re_.get_d(), im_.get_d()}; }
  /// "3/4", "-1/2*i", "1/3 + 2*i".
  std::string to_string() const;

  friend std::ostream& operator<<(std::ostream& os, const QComplex& z) {
    return os << z.to_string();
  }

 private:
  mpq_class re_{0};
  mpq_class im_{0};
};

using Complex = std::complex<double>;

/// The coefficient fields the symbolic engine is instantiated over.
template <class S>
concept Scalar = std::same_as<S, QComplex> || std::same_as<S, Complex>;

inline bool is_zero(const QComplex& z) { return z.is_zero(); }
inline bool is_zero(const Complex& z) { return z == Complex(0.0, 0.0); }

inline Complex to_complex(const QComplex& z) { return z.to_complex(); }
inline Complex to_complex(const Complex& z) { return z; }

/// Scalar conversion used when exact inputs feed a floating computation.
template <Scalar S>
S scalar_from(const QComplex& z) {
  if constexpr (std::same_as<S, QComplex>) {
    return z;
  } else {
    return z.to_complex();
  }
}

/// 15 significant digits, imaginary part only when nonzero.
std::string format_decimal(const Complex& z);
inline std::string format_scalar(const QComplex& z) { return z.to_string(); }
inline std::string format_scalar(const Complex& z) { return format_decimal(z); }

}  // namespace vortex
