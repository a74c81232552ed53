#include "deltalab/rational.hpp"

#include <limits>

namespace deltalab {

namespace {

int128 gcd128(int128 a, int128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    const int128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

bool fits64(int128 v) {
  return v >= std::numeric_limits<std::int64_t>::min() &&
         v <= std::numeric_limits<std::int64_t>::max();
}

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
  if (den == 0) throw std::domain_error("Rational: zero denominator");
  *this = from_wide(num, den);
}

Rational Rational::dyadic(std::int64_t num, int exponent) {
  if (exponent < 0 || exponent > 62) throw std::domain_error("Rational::dyadic: bad exponent");
  return Rational(num, std::int64_t{1} << exponent);
}

Rational Rational::from_wide(int128 num, int128 den) {
  if (den == 0) throw std::domain_error("Rational: zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const int128 g = gcd128(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  if (!fits64(num) || !fits64(den)) throw std::overflow_error("Rational: 64-bit overflow");
  Rational r;
  r.num_ = static_cast<std::int64_t>(num);
  r.den_ = static_cast<std::int64_t>(den);
  if (r.num_ == 0) r.den_ = 1;
  return r;
}

std::int64_t Rational::floor() const { return static_cast<std::int64_t>(floor_div(num_, den_)); }
std::int64_t Rational::ceil() const { return static_cast<std::int64_t>(ceil_div(num_, den_)); }

Rational operator+(const Rational& a, const Rational& b) {
  return Rational::from_wide(static_cast<int128>(a.num_) * b.den_ + static_cast<int128>(b.num_) * a.den_,
                             static_cast<int128>(a.den_) * b.den_);
}

Rational operator-(const Rational& a, const Rational& b) {
  return Rational::from_wide(static_cast<int128>(a.num_) * b.den_ - static_cast<int128>(b.num_) * a.den_,
                             static_cast<int128>(a.den_) * b.den_);
}

Rational operator*(const Rational& a, const Rational& b) {
  return Rational::from_wide(static_cast<int128>(a.num_) * b.num_, static_cast<int128>(a.den_) * b.den_);
}

Rational operator/(const Rational& a, const Rational& b) {
  if (b.num_ == 0) throw std::domain_error("Rational: division by zero");
  return Rational::from_wide(static_cast<int128>(a.num_) * b.den_, static_cast<int128>(a.den_) * b.num_);
}

std::string Rational::str() const {
  return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
}

}  // namespace deltalab
