// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

namespace seqlayers {

// Exact rational number kept in lowest terms with a positive denominator.
class Fraction {
 public:
  constexpr Fraction() = default;
  constexpr Fraction(std::int64_t num) : num_(num), den_(1) {}  // NOLINT: implicit by intent
  constexpr Fraction(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
    if (den_ == 0) throw std::invalid_argument("zero denominator");
    if (den_ < 0) {
      num_ = -num_;
      den_ = -den_;
    }
    const std::int64_t g = std::gcd(num_ < 0 ? -num_ : num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
  }

  constexpr std::int64_t num() const { return num_; }
  constexpr std::int64_t den() const { return den_; }
  constexpr bool is_integer() const { return den_ == 1; }

  friend constexpr Fraction operator*(Fraction a, Fraction b) {
    return {a.num_ * b.num_, a.den_ * b.den_};
  }
  friend constexpr Fraction operator/(Fraction a, Fraction b) {
    return {a.num_ * b.den_, a.den_ * b.num_};
  }
  friend constexpr Fraction operator+(Fraction a, Fraction b) {
    return {a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_};
  }
  friend constexpr Fraction operator-(Fraction a, Fraction b) {
    return {a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_};
  }
  friend constexpr bool operator==(Fraction a, Fraction b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend constexpr bool operator<(Fraction a, Fraction b) {
    return a.num_ * b.den_ < b.num_ * a.den_;
  }
  friend constexpr bool operator>(Fraction a, Fraction b) { return b < a; }
  friend constexpr bool operator<=(Fraction a, Fraction b) { return !(b < a); }
  friend constexpr bool operator>=(Fraction a, Fraction b) { return !(a < b); }

  constexpr std::int64_t floor() const {
    return num_ >= 0 ? num_ / den_ : -((-num_ + den_ - 1) / den_);
  }
  constexpr std::int64_t ceil() const { return -Fraction(-num_, den_).floor(); }

  std::string str() const { return std::to_string(num_) + "/" + std::to_string(den_); }

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

inline std::ostream& operator<<(std::ostream& os, Fraction f) { return os << f.str(); }

inline constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  return Fraction(a, b).floor();
}

inline constexpr std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
  return Fraction(a, b).ceil();
}

inline constexpr std::int64_t floor_mod(std::int64_t a, std::int64_t b) {
  return a - floor_div(a, b) * b;
}

inline constexpr std::int64_t round_up(std::int64_t a, std::int64_t multiple) {
  return ceil_div(a, multiple) * multiple;
}

}  // namespace seqlayers
