#pragma once

// Tubes, the exact square/tube incidence predicate, shadings and incidence
// counts. The fast path rasterizes each tube column by column; the serial
// namespace keeps the all-pairs reference.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "deltalab/frostman.hpp"
#include "deltalab/grid.hpp"
#include "deltalab/rational.hpp"

namespace deltalab {

// Closed vertical neighbourhood {(x, y) : |y - slope x - intercept| <= width,
// x_lo <= x <= x_hi} of the axial line, clipped to [0,1]^2.
struct Tube {
  Scale scale;
  Rational slope;
  Rational intercept;
  Rational width;
  std::int64_t multiplicity = 1;
  std::int64_t id = 0;
  Rational x_lo{0};
  Rational x_hi{1};

  static Tube make(Scale scale, Rational slope, Rational intercept, std::int64_t id = 0,
                   std::int64_t multiplicity = 1);
  Tube with_width(Rational w) const;
  Tube with_extent(Rational lo, Rational hi) const;
};

struct QuasiProductClaim {
  double s = 0;
  double d = 0;
  double K1 = 0;
  double K2 = 0;
};

struct TubeFamily {
  Scale scale;
  std::vector<Tube> tubes;
  std::optional<QuasiProductClaim> quasi_product;
};

struct Shading {
  // entries[t] lists square indices (into the GridSet2D cell vector) for tube t.
  std::vector<std::vector<std::uint32_t>> entries;
  std::vector<std::vector<std::uint32_t>> dual_entries;

  std::int64_t size() const;
};

struct TwoEndsParams {
  double epsilon1 = 0;
  double epsilon2 = 0;
  void check() const;
};

bool incident(Cell2 square, const Tube& tube);
bool incident(Cell2 square, Scale scale, const Tube& tube);

// Inclusive range of rows j whose square in column i meets the tube; empty
// when first > second.
std::pair<std::int64_t, std::int64_t> column_rows(const Tube& tube, std::int64_t i);

// Every tube vertex of the closed square lies in the closed tube.
bool square_inside_tube(Cell2 square, Scale scale, const Tube& tube);

Shading full_shading(const TubeFamily& family, const GridSet2D& squares);
std::int64_t incidence_count(const TubeFamily& family, const GridSet2D& squares, bool weighted = false);

namespace serial {
Shading full_shading(const TubeFamily& family, const GridSet2D& squares);
std::int64_t incidence_count(const TubeFamily& family, const GridSet2D& squares, bool weighted = false);
}  // namespace serial

// Positions of a shading along the tube: the square's column index when
// |slope| <= 1, its row index otherwise.
std::vector<std::int64_t> axial_positions(const Tube& tube, std::span<const Cell2> shading);

struct TwoEndsCheck {
  bool ok = false;
  std::int64_t worst_count = 0;
  Rational worst_center;  // axial coordinate
  double threshold = 0;
};

// Balls B(x, rho) along the tube are read as intervals of diameter rho
// containing square centers; every placement is checked exactly.
TwoEndsCheck two_ends_check(std::span<const std::int64_t> positions, Scale scale, double rho, double threshold);
TwoEndsCheck is_two_ends(const Tube& tube, std::span<const Cell2> shading, const TwoEndsParams& params);

// floor(rho / delta): the largest index spread whose centers fit in a closed
// interval of length rho.
std::int64_t ball_span(Scale scale, double rho);

// Largest number of positions whose centers fit in an interval of diameter
// rho, and the first position of the leftmost such window.
std::pair<std::int64_t, std::int64_t> fullest_ball(std::span<const std::int64_t> sorted_positions, Scale scale,
                                                   double rho);

struct QuasiProductReport {
  double direction_constant = 0;
  double worst_fiber_constant = 0;
  bool ok = false;
};

QuasiProductReport check_quasi_product(const TubeFamily& family);

}  // namespace deltalab
