#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace deltalab {

using int128 = __int128;

// Exact rational with a positive denominator, always stored in lowest terms.
// Intermediates are computed in 128 bits; results that do not fit back into
// 64 bits throw std::overflow_error.
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t num) : num_(num), den_(1) {}  // NOLINT(implicit)
  Rational(std::int64_t num, std::int64_t den);

  static Rational dyadic(std::int64_t num, int exponent);  // num / 2^exponent

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }

  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  std::int64_t floor() const;
  std::int64_t ceil() const;
  Rational abs() const { return num_ < 0 ? Rational(-num_, den_) : *this; }
  bool is_integer() const { return den_ == 1; }

  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);
  friend Rational operator/(const Rational& a, const Rational& b);
  Rational operator-() const { return Rational(-num_, den_); }
  Rational& operator+=(const Rational& o) { return *this = *this + o; }
  Rational& operator-=(const Rational& o) { return *this = *this - o; }
  Rational& operator*=(const Rational& o) { return *this = *this * o; }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    const int128 l = static_cast<int128>(a.num_) * b.den_;
    const int128 r = static_cast<int128>(b.num_) * a.den_;
    return l < r ? std::strong_ordering::less
                 : (l > r ? std::strong_ordering::greater : std::strong_ordering::equal);
  }

  std::string str() const;

 private:
  static Rational from_wide(int128 num, int128 den);

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

inline Rational min(const Rational& a, const Rational& b) { return b < a ? b : a; }
inline Rational max(const Rational& a, const Rational& b) { return a < b ? b : a; }

// floor(a / b) for b > 0, exact on 128-bit integers.
inline int128 floor_div(int128 a, int128 b) {
  int128 q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}
inline int128 ceil_div(int128 a, int128 b) { return -floor_div(-a, b); }

}  // namespace deltalab
