#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace tw {

/// Exact rational with int64 numerator/denominator, always normalized
/// (den > 0, gcd(|num|, den) = 1). Intermediate products go through
/// __int128 so desk-scale schedules cannot overflow silently.
class Rational {
 public:
  Rational() = default;
  Rational(std::int64_t n) : num_(n), den_(1) {}
  Rational(std::int64_t n, std::int64_t d) : num_(n), den_(d) { normalize(); }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }

  friend Rational operator+(const Rational& a, const Rational& b) {
    return fromWide(wide(a.num_) * b.den_ + wide(b.num_) * a.den_,
                    wide(a.den_) * b.den_);
  }
  friend Rational operator-(const Rational& a, const Rational& b) {
    return fromWide(wide(a.num_) * b.den_ - wide(b.num_) * a.den_,
                    wide(a.den_) * b.den_);
  }
  friend Rational operator*(const Rational& a, const Rational& b) {
    return fromWide(wide(a.num_) * b.num_, wide(a.den_) * b.den_);
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw std::domain_error("rational division by zero");
    return fromWide(wide(a.num_) * b.den_, wide(a.den_) * b.num_);
  }
  Rational operator-() const {
    Rational r;
    r.num_ = -num_;
    r.den_ = den_;
    return r;
  }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
  friend bool operator<(const Rational& a, const Rational& b) {
    return wide(a.num_) * b.den_ < wide(b.num_) * a.den_;
  }
  friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
  friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
  friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }

  std::string str() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
  }

  /// Midpoint, handy for picking fresh sites strictly between two others.
  static Rational mid(const Rational& a, const Rational& b) {
    return (a + b) / Rational(2);
  }

 private:
  using wide_t = __int128;
  static wide_t wide(std::int64_t v) { return static_cast<wide_t>(v); }

  static Rational fromWide(wide_t n, wide_t d) {
    if (d == 0) throw std::domain_error("rational with zero denominator");
    if (d < 0) {
      n = -n;
      d = -d;
    }
    wide_t g = gcdWide(n < 0 ? -n : n, d);
    if (g > 1) {
      n /= g;
      d /= g;
    }
    Rational r;
    if (n > INT64_MAX || n < INT64_MIN || d > INT64_MAX)
      throw std::overflow_error("rational overflow");
    r.num_ = static_cast<std::int64_t>(n);
    r.den_ = static_cast<std::int64_t>(d);
    return r;
  }

  static wide_t gcdWide(wide_t a, wide_t b) {
    while (b != 0) {
      wide_t t = a % b;
      a = b;
      b = t;
    }
    return a == 0 ? 1 : a;
  }

  void normalize() { *this = fromWide(num_, den_); }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

/// Deterministic enumeration of all rationals: 0, then the positive
/// Calkin-Wilf sequence interleaved with its negation.
/// nth_rational(0) = 0, odd n -> +cw((n+1)/2), even n > 0 -> -cw(n/2).
inline Rational nth_rational(std::int64_t n) {
  if (n < 0) throw std::invalid_argument("nth_rational: negative index");
  if (n == 0) return Rational(0);
  std::int64_t k = (n % 2 == 1) ? (n + 1) / 2 : n / 2;
  // Calkin-Wilf: cw(1) = 1/1, cw(i+1) = 1 / (2*floor(cw(i)) + 1 - cw(i)).
  Rational q(1);
  for (std::int64_t i = 1; i < k; ++i) {
    std::int64_t fl = q.num() / q.den();  // q > 0 so this is floor
    q = Rational(1) / (Rational(2 * fl + 1) - q);
  }
  return (n % 2 == 1) ? q : -q;
}

}  // namespace tw
