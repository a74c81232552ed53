#pragma once

// Dyadic grids at scale delta = 2^-m, grid point sets, covering numbers and
// dyadic Hausdorff content. Index arithmetic is exact; floating point only
// appears in quantities that are genuinely real (powers delta^s).

#include <compare>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "deltalab/rational.hpp"

namespace deltalab {

inline constexpr int kMaxExponent = 30;

class ScaleMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Scale {
  int m = 0;

  static Scale of(int m);
  std::int64_t cells() const { return std::int64_t{1} << m; }
  double delta() const;
  Rational delta_exact() const { return Rational::dyadic(1, m); }

  friend bool operator==(Scale, Scale) = default;
};

struct Cell2 {
  std::int64_t i = 0;
  std::int64_t j = 0;
  friend auto operator<=>(const Cell2&, const Cell2&) = default;
};

// A delta-separated subset of [0,1]: cell k stands for [k delta, (k+1) delta].
class GridSet1D {
 public:
  GridSet1D() = default;
  GridSet1D(Scale scale, std::vector<std::int64_t> cells, Rational support_lo = 0,
            Rational support_hi = 1);

  static GridSet1D full(Scale scale);

  Scale scale() const { return scale_; }
  const std::vector<std::int64_t>& cells() const { return cells_; }
  std::size_t size() const { return cells_.size(); }
  bool empty() const { return cells_.empty(); }
  bool contains(std::int64_t k) const;
  Rational support_lo() const { return lo_; }
  Rational support_hi() const { return hi_; }

  friend bool operator==(const GridSet1D&, const GridSet1D&) = default;

 private:
  Scale scale_;
  std::vector<std::int64_t> cells_;
  Rational lo_{0};
  Rational hi_{1};
};

// A set of delta-squares in [0,1]^2, stored sorted by (i, j).
class GridSet2D {
 public:
  GridSet2D() = default;
  GridSet2D(Scale scale, std::vector<Cell2> cells);

  Scale scale() const { return scale_; }
  const std::vector<Cell2>& cells() const { return cells_; }
  std::size_t size() const { return cells_.size(); }
  bool empty() const { return cells_.empty(); }
  bool contains(Cell2 c) const;

  friend bool operator==(const GridSet2D&, const GridSet2D&) = default;

 private:
  Scale scale_;
  std::vector<Cell2> cells_;
};

struct ContentResult {
  double exponent = 0;
  double value = 0;
};

std::int64_t covering_number(const GridSet1D& set, Scale target);
std::int64_t covering_number(const GridSet2D& set, Scale target);
// Points of [0,1]; x = 1 is placed in the last cell.
std::int64_t covering_number(std::span<const double> points, Scale target);

// Cells whose closed cell meets the closed ball (sup-metric in 2-D).
GridSet1D restrict_to_ball(const GridSet1D& set, const Rational& center, const Rational& radius);
GridSet2D restrict_to_ball(const GridSet2D& set, const Rational& cx, const Rational& cy,
                           const Rational& radius);

// Minimum of sum |I|^s over covers by dyadic intervals of length >= delta.
ContentResult dyadic_content(const GridSet1D& set, double s);

}  // namespace deltalab
