#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <string>

#include "compskill/errors.hpp"

namespace compskill {

/// Exact rational over int64 with 128-bit intermediates. Always reduced with a
/// positive denominator; results that do not fit int64 throw ArithmeticOverflow.
class Rational {
 public:
  constexpr Rational() = default;
  constexpr Rational(std::int64_t value) : num_(value) {}  // NOLINT(google-explicit-constructor)

  static Rational make(std::int64_t num, std::int64_t den) { return reduce(num, den); }

  constexpr std::int64_t num() const noexcept { return num_; }
  constexpr std::int64_t den() const noexcept { return den_; }
  constexpr bool is_integer() const noexcept { return den_ == 1; }
  constexpr bool is_zero() const noexcept { return num_ == 0; }

  friend Rational operator+(const Rational& a, const Rational& b) {
    return reduce(wide(a.num_) * b.den_ + wide(b.num_) * a.den_, wide(a.den_) * b.den_);
  }
  friend Rational operator-(const Rational& a, const Rational& b) {
    return reduce(wide(a.num_) * b.den_ - wide(b.num_) * a.den_, wide(a.den_) * b.den_);
  }
  friend Rational operator*(const Rational& a, const Rational& b) {
    return reduce(wide(a.num_) * b.num_, wide(a.den_) * b.den_);
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw DivisionByZero("division by zero");
    return reduce(wide(a.num_) * b.den_, wide(a.den_) * b.num_);
  }

  friend constexpr bool operator==(const Rational&, const Rational&) = default;

  std::string to_string() const {
    return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
  }

 private:
  using wide_t = __int128;

  static constexpr wide_t wide(std::int64_t v) { return static_cast<wide_t>(v); }

  static wide_t gcd_wide(wide_t a, wide_t b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
      const wide_t t = a % b;
      a = b;
      b = t;
    }
    return a;
  }

  static Rational reduce(wide_t num, wide_t den) {
    if (den == 0) throw DivisionByZero("zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const wide_t g = gcd_wide(num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
    constexpr wide_t lo = std::numeric_limits<std::int64_t>::min();
    constexpr wide_t hi = std::numeric_limits<std::int64_t>::max();
    if (num < lo || num > hi || den > hi) throw ArithmeticOverflow("rational result exceeds 64 bits");
    Rational r;
    r.num_ = static_cast<std::int64_t>(num);
    r.den_ = static_cast<std::int64_t>(den);
    return r;
  }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

}  // namespace compskill

template <>
struct std::hash<compskill::Rational> {
  std::size_t operator()(const compskill::Rational& r) const noexcept {
    const auto h1 = std::hash<std::int64_t>{}(r.num());
    const auto h2 = std::hash<std::int64_t>{}(r.den());
    return h1 ^ (h2 + 0x9e3779b97f4a7c15ULL + (h1 << 6) + (h1 >> 2));
  }
};
