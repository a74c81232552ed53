#include "deltalab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace deltalab {

Scale Scale::of(int m) {
  if (m < 0 || m > kMaxExponent)
    throw std::invalid_argument("scale exponent out of range [0, " + std::to_string(kMaxExponent) +
                                "]: " + std::to_string(m));
  return Scale{m};
}

double Scale::delta() const { return std::ldexp(1.0, -m); }

GridSet1D::GridSet1D(Scale scale, std::vector<std::int64_t> cells, Rational support_lo,
                     Rational support_hi)
    : scale_(Scale::of(scale.m)), cells_(std::move(cells)), lo_(support_lo), hi_(support_hi) {
  std::sort(cells_.begin(), cells_.end());
  cells_.erase(std::unique(cells_.begin(), cells_.end()), cells_.end());
  const Rational d = scale_.delta_exact();
  for (auto k : cells_) {
    if (k < 0 || k >= scale_.cells() || Rational(k) * d < lo_ || Rational(k + 1) * d > hi_)
      throw std::out_of_range("GridSet1D: cell " + std::to_string(k) + " outside support window");
  }
}

GridSet1D GridSet1D::full(Scale scale) {
  std::vector<std::int64_t> cells(static_cast<std::size_t>(scale.cells()));
  for (std::int64_t k = 0; k < scale.cells(); ++k) cells[static_cast<std::size_t>(k)] = k;
  return GridSet1D(scale, std::move(cells));
}

bool GridSet1D::contains(std::int64_t k) const {
  return std::binary_search(cells_.begin(), cells_.end(), k);
}

GridSet2D::GridSet2D(Scale scale, std::vector<Cell2> cells)
    : scale_(Scale::of(scale.m)), cells_(std::move(cells)) {
  std::sort(cells_.begin(), cells_.end());
  cells_.erase(std::unique(cells_.begin(), cells_.end()), cells_.end());
  for (const auto& c : cells_) {
    if (c.i < 0 || c.j < 0 || c.i >= scale_.cells() || c.j >= scale_.cells())
      throw std::out_of_range("GridSet2D: cell outside [0, 2^m)^2");
  }
}

bool GridSet2D::contains(Cell2 c) const { return std::binary_search(cells_.begin(), cells_.end(), c); }

std::int64_t covering_number(const GridSet1D& set, Scale target) {
  if (target.m > set.scale().m)
    throw ScaleMismatch("covering_number: target scale finer than the set's grid");
  const int shift = set.scale().m - target.m;
  std::int64_t count = 0;
  std::int64_t last = -1;
  for (auto k : set.cells()) {  // sorted, so parents are nondecreasing
    const std::int64_t parent = k >> shift;
    if (parent != last) {
      ++count;
      last = parent;
    }
  }
  return count;
}

std::int64_t covering_number(const GridSet2D& set, Scale target) {
  if (target.m > set.scale().m)
    throw ScaleMismatch("covering_number: target scale finer than the set's grid");
  const int shift = set.scale().m - target.m;
  std::vector<Cell2> parents;
  parents.reserve(set.size());
  for (const auto& c : set.cells()) parents.push_back({c.i >> shift, c.j >> shift});
  std::sort(parents.begin(), parents.end());
  return std::unique(parents.begin(), parents.end()) - parents.begin();
}

std::int64_t covering_number(std::span<const double> points, Scale target) {
  std::set<std::int64_t> cells;
  const double n = static_cast<double>(target.cells());
  for (double x : points) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::out_of_range("covering_number: point outside [0,1]");
    auto k = static_cast<std::int64_t>(std::floor(x * n));
    cells.insert(std::min(k, target.cells() - 1));
  }
  return static_cast<std::int64_t>(cells.size());
}

namespace {

// Closed cell [k d, (k+1) d] meets closed [c - r, c + r].
bool cell_meets_interval(std::int64_t k, const Rational& d, const Rational& lo, const Rational& hi) {
  return Rational(k) * d <= hi && Rational(k + 1) * d >= lo;
}

void require_radius(const Rational& radius, Scale scale) {
  if (radius < scale.delta_exact()) throw std::invalid_argument("restrict_to_ball: radius below delta");
}

}  // namespace

GridSet1D restrict_to_ball(const GridSet1D& set, const Rational& center, const Rational& radius) {
  require_radius(radius, set.scale());
  const Rational d = set.scale().delta_exact();
  const Rational lo = center - radius;
  const Rational hi = center + radius;
  std::vector<std::int64_t> out;
  for (auto k : set.cells())
    if (cell_meets_interval(k, d, lo, hi)) out.push_back(k);
  return GridSet1D(set.scale(), std::move(out), set.support_lo(), set.support_hi());
}

GridSet2D restrict_to_ball(const GridSet2D& set, const Rational& cx, const Rational& cy,
                           const Rational& radius) {
  require_radius(radius, set.scale());
  const Rational d = set.scale().delta_exact();
  std::vector<Cell2> out;
  for (const auto& c : set.cells()) {
    if (cell_meets_interval(c.i, d, cx - radius, cx + radius) &&
        cell_meets_interval(c.j, d, cy - radius, cy + radius))
      out.push_back(c);
  }
  return GridSet2D(set.scale(), std::move(out));
}

ContentResult dyadic_content(const GridSet1D& set, double s) {
  if (s < 0.0 || s > 1.0) throw std::invalid_argument("dyadic_content: s outside [0,1]");
  ContentResult result{s, 0.0};
  if (set.empty()) return result;

  // Bottom-up over occupied dyadic intervals; level m holds the leaves.
  std::vector<std::pair<std::int64_t, double>> level;
  const double leaf = std::pow(set.scale().delta(), s);
  level.reserve(set.size());
  for (auto k : set.cells()) level.emplace_back(k, leaf);

  for (int lvl = set.scale().m - 1; lvl >= 0; --lvl) {
    const double own = std::pow(std::ldexp(1.0, -lvl), s);
    std::vector<std::pair<std::int64_t, double>> up;
    up.reserve(level.size());
    for (const auto& [k, h] : level) {
      const std::int64_t parent = k >> 1;
      if (!up.empty() && up.back().first == parent)
        up.back().second += h;
      else
        up.emplace_back(parent, h);
    }
    for (auto& node : up) node.second = std::min(own, node.second);
    level = std::move(up);
  }
  result.value = level.front().second;
  return result;
}

}  // namespace deltalab
