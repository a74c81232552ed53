#include "deltalab/incidence.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace deltalab {

Tube Tube::make(Scale scale, Rational slope, Rational intercept, std::int64_t id, std::int64_t multiplicity) {
  if (multiplicity < 1) throw std::invalid_argument("Tube: multiplicity must be >= 1");
  Tube t;
  t.scale = scale;
  t.slope = slope;
  t.intercept = intercept;
  t.width = Rational::dyadic(2, scale.m);
  t.multiplicity = multiplicity;
  t.id = id;
  return t;
}

Tube Tube::with_width(Rational w) const {
  const Rational d = scale.delta_exact();
  if (w != d && w != d * 2 && w != d * 4) throw std::invalid_argument("Tube: width must be delta, 2 delta or 4 delta");
  Tube t = *this;
  t.width = w;
  return t;
}

Tube Tube::with_extent(Rational lo, Rational hi) const {
  if (hi < lo) throw std::invalid_argument("Tube: empty axial extent");
  Tube t = *this;
  t.x_lo = lo;
  t.x_hi = hi;
  return t;
}

std::int64_t Shading::size() const {
  std::int64_t n = 0;
  for (const auto& e : entries) n += static_cast<std::int64_t>(e.size());
  return n;
}

void TwoEndsParams::check() const {
  if (!(0.0 < epsilon2 && epsilon2 < epsilon1 && epsilon1 < 1.0))
    throw std::invalid_argument("TwoEndsParams: need 0 < epsilon2 < epsilon1 < 1");
}

namespace {

bool mul_ok(int128 a, int128 b, int128& out) { return !__builtin_mul_overflow(a, b, &out); }

// Tube data in units of delta over a common denominator D:
// slope * X + intercept / delta = (A X + B) / D, width / delta = Wv / D.
struct Compiled {
  bool integral = false;
  int128 A = 0, B = 0, Wv = 0, D = 1;
  Rational lo_x, hi_x;  // axial extent in units of delta, clipped to [0, 2^m]
  Rational slope, C, W;
};

Compiled compile(const Tube& t) {
  Compiled c;
  const Rational n = Rational(t.scale.cells());
  c.slope = t.slope;
  c.C = t.intercept * n;
  c.W = t.width * n;
  c.lo_x = max(t.x_lo * n, Rational(0));
  c.hi_x = min(t.x_hi * n, n);
  int128 p = t.slope.num(), q = t.slope.den(), cn = c.C.num(), cd = c.C.den(), wn = c.W.num(), wd = c.W.den();
  int128 qcd, A, B, Wv, D, scratch;
  const int128 xmax = static_cast<int128>(t.scale.cells()) + 1;
  c.integral = mul_ok(q, cd, qcd) && mul_ok(qcd, wd, D) && mul_ok(p * cd, wd, A) && mul_ok(q * cn, wd, B) &&
               mul_ok(qcd, wn, Wv) && mul_ok(A < 0 ? -A : A, 2 * xmax, scratch) &&
               mul_ok(D, 2 * xmax, scratch) && (scratch < (int128{1} << 120));
  if (c.integral) {
    c.A = A;
    c.B = B;
    c.Wv = Wv;
    c.D = D;
  }
  return c;
}

std::pair<std::int64_t, std::int64_t> clamp_rows(int128 lo, int128 hi, std::int64_t cells) {
  lo = std::max<int128>(lo, 0);
  hi = std::min<int128>(hi, cells - 1);
  return {static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)};
}

std::pair<std::int64_t, std::int64_t> rows_for(const Compiled& c, std::int64_t i, std::int64_t cells) {
  const std::pair<std::int64_t, std::int64_t> none{1, 0};
  if (i < 0 || i >= cells) return none;
  const Rational x0 = max(Rational(i), c.lo_x);
  const Rational x1 = min(Rational(i + 1), c.hi_x);
  if (x1 < x0) return none;
  if (c.integral && x0.is_integer() && x1.is_integer()) {
    const int128 X0 = x0.num(), X1 = x1.num();
    const int128 gmin = c.A >= 0 ? c.A * X0 : c.A * X1;
    const int128 gmax = c.A >= 0 ? c.A * X1 : c.A * X0;
    // j + 1 >= gmin - W and j <= gmax + W
    const int128 lo = ceil_div(gmin + c.B - c.Wv, c.D) - 1;
    const int128 hi = floor_div(gmax + c.B + c.Wv, c.D);
    return clamp_rows(lo, hi, cells);
  }
  const Rational g0 = c.slope * x0 + c.C;
  const Rational g1 = c.slope * x1 + c.C;
  const Rational gmin = min(g0, g1), gmax = max(g0, g1);
  return clamp_rows(static_cast<int128>((gmin - c.W).ceil()) - 1, (gmax + c.W).floor(), cells);
}

std::vector<std::size_t> column_starts(const GridSet2D& squares) {
  const auto n = static_cast<std::size_t>(squares.scale().cells());
  std::vector<std::size_t> start(n + 1, 0);
  for (const auto& c : squares.cells()) ++start[static_cast<std::size_t>(c.i) + 1];
  for (std::size_t i = 0; i < n; ++i) start[i + 1] += start[i];
  return start;
}

void require_same_scale(const TubeFamily& family, const GridSet2D& squares) {
  if (family.scale != squares.scale()) throw ScaleMismatch("tube family and squares at different scales");
  for (const auto& t : family.tubes)
    if (t.scale != family.scale) throw ScaleMismatch("tube scale differs from its family");
}

std::vector<std::uint32_t> rasterize(const Tube& tube, const GridSet2D& squares,
                                     const std::vector<std::size_t>& start) {
  const Compiled c = compile(tube);
  const std::int64_t cells = squares.scale().cells();
  const auto& sq = squares.cells();
  std::vector<std::uint32_t> out;
  const std::int64_t i_lo = std::max<std::int64_t>(0, c.lo_x.ceil() - 1);
  const std::int64_t i_hi = std::min<std::int64_t>(cells - 1, c.hi_x.floor());
  for (std::int64_t i = i_lo; i <= i_hi; ++i) {
    const std::size_t b = start[static_cast<std::size_t>(i)], e = start[static_cast<std::size_t>(i) + 1];
    if (b == e) continue;
    const auto [lo, hi] = rows_for(c, i, cells);
    if (lo > hi) continue;
    auto first = std::lower_bound(sq.begin() + static_cast<std::ptrdiff_t>(b), sq.begin() + static_cast<std::ptrdiff_t>(e),
                                  Cell2{i, lo});
    for (; first != sq.begin() + static_cast<std::ptrdiff_t>(e) && first->j <= hi; ++first)
      out.push_back(static_cast<std::uint32_t>(first - sq.begin()));
  }
  return out;
}

Shading with_duals(std::vector<std::vector<std::uint32_t>> entries, std::size_t nsquares) {
  Shading sh;
  sh.dual_entries.assign(nsquares, {});
  for (std::size_t t = 0; t < entries.size(); ++t)
    for (auto p : entries[t]) sh.dual_entries[p].push_back(static_cast<std::uint32_t>(t));
  sh.entries = std::move(entries);
  return sh;
}

}  // namespace

std::pair<std::int64_t, std::int64_t> column_rows(const Tube& tube, std::int64_t i) {
  return rows_for(compile(tube), i, tube.scale.cells());
}

bool incident(Cell2 square, const Tube& tube) {
  const auto [lo, hi] = column_rows(tube, square.i);
  return lo <= square.j && square.j <= hi;
}

bool incident(Cell2 square, Scale scale, const Tube& tube) {
  if (scale != tube.scale) throw ScaleMismatch("incident: square and tube at different scales");
  return incident(square, tube);
}

bool square_inside_tube(Cell2 square, Scale scale, const Tube& tube) {
  if (scale != tube.scale) throw ScaleMismatch("square_inside_tube: different scales");
  const Rational d = scale.delta_exact();
  for (int dx = 0; dx <= 1; ++dx) {
    const Rational x = Rational(square.i + dx) * d;
    if (x < tube.x_lo || x > tube.x_hi) return false;
    const Rational g = tube.slope * x + tube.intercept;
    for (int dy = 0; dy <= 1; ++dy) {
      const Rational y = Rational(square.j + dy) * d;
      if ((y - g).abs() > tube.width) return false;
    }
  }
  return true;
}

Shading full_shading(const TubeFamily& family, const GridSet2D& squares) {
  require_same_scale(family, squares);
  const auto start = column_starts(squares);
  std::vector<std::vector<std::uint32_t>> entries(family.tubes.size());
  const auto n = static_cast<std::int64_t>(family.tubes.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::int64_t t = 0; t < n; ++t)
    entries[static_cast<std::size_t>(t)] = rasterize(family.tubes[static_cast<std::size_t>(t)], squares, start);
  return with_duals(std::move(entries), squares.size());
}

std::int64_t incidence_count(const TubeFamily& family, const GridSet2D& squares, bool weighted) {
  require_same_scale(family, squares);
  const auto start = column_starts(squares);
  const auto n = static_cast<std::int64_t>(family.tubes.size());
  std::int64_t total = 0;
#pragma omp parallel for schedule(dynamic, 8) reduction(+ : total)
  for (std::int64_t t = 0; t < n; ++t) {
    const auto& tube = family.tubes[static_cast<std::size_t>(t)];
    const auto k = static_cast<std::int64_t>(rasterize(tube, squares, start).size());
    total += weighted ? k * tube.multiplicity : k;
  }
  return total;
}

namespace serial {

namespace {

// Center-distance test in units of delta, doubled to stay integral:
// |(2j+1) D - (2i+1) A - 2B| <= 2 Wv + D + |A|. Exact whenever the square's
// column lies inside the axial extent; partial columns use the column test.
bool pair_incident(const Compiled& c, const Tube& tube, Cell2 sq) {
  if (c.integral && Rational(sq.i) >= c.lo_x && Rational(sq.i + 1) <= c.hi_x) {
    const int128 lhs = (2 * static_cast<int128>(sq.j) + 1) * c.D - (2 * static_cast<int128>(sq.i) + 1) * c.A - 2 * c.B;
    const int128 absA = c.A < 0 ? -c.A : c.A;
    return (lhs < 0 ? -lhs : lhs) <= 2 * c.Wv + c.D + absA;
  }
  return deltalab::incident(sq, tube);
}

}  // namespace

Shading full_shading(const TubeFamily& family, const GridSet2D& squares) {
  require_same_scale(family, squares);
  std::vector<std::vector<std::uint32_t>> entries(family.tubes.size());
  for (std::size_t t = 0; t < family.tubes.size(); ++t) {
    const Compiled c = compile(family.tubes[t]);
    const auto& sq = squares.cells();
    for (std::size_t p = 0; p < sq.size(); ++p)
      if (pair_incident(c, family.tubes[t], sq[p])) entries[t].push_back(static_cast<std::uint32_t>(p));
  }
  return with_duals(std::move(entries), squares.size());
}

std::int64_t incidence_count(const TubeFamily& family, const GridSet2D& squares, bool weighted) {
  require_same_scale(family, squares);
  std::int64_t total = 0;
  for (const auto& tube : family.tubes) {
    const Compiled c = compile(tube);
    std::int64_t k = 0;
    for (const auto& sq : squares.cells()) k += pair_incident(c, tube, sq) ? 1 : 0;
    total += weighted ? k * tube.multiplicity : k;
  }
  return total;
}

}  // namespace serial

std::vector<std::int64_t> axial_positions(const Tube& tube, std::span<const Cell2> shading) {
  const bool by_column = tube.slope.abs() <= Rational(1);
  std::vector<std::int64_t> pos;
  pos.reserve(shading.size());
  for (const auto& c : shading) pos.push_back(by_column ? c.i : c.j);
  std::sort(pos.begin(), pos.end());
  return pos;
}

std::int64_t ball_span(Scale scale, double rho) {
  return static_cast<std::int64_t>(std::floor(rho / scale.delta() + 1e-9));
}

std::pair<std::int64_t, std::int64_t> fullest_ball(std::span<const std::int64_t> pos, Scale scale, double rho) {
  const std::int64_t K = ball_span(scale, rho);
  std::int64_t best = 0, where = 0;
  std::size_t hi = 0;
  for (std::size_t lo = 0; lo < pos.size(); ++lo) {
    if (hi < lo) hi = lo;
    while (hi < pos.size() && pos[hi] - pos[lo] <= K) ++hi;
    const auto c = static_cast<std::int64_t>(hi - lo);
    if (c > best) {
      best = c;
      where = pos[lo];
    }
  }
  return {best, where};
}

TwoEndsCheck two_ends_check(std::span<const std::int64_t> positions, Scale scale, double rho, double threshold) {
  std::vector<std::int64_t> pos(positions.begin(), positions.end());
  std::sort(pos.begin(), pos.end());
  TwoEndsCheck out;
  out.threshold = threshold;
  const auto [count, first] = fullest_ball(pos, scale, rho);
  const std::int64_t K = ball_span(scale, rho);
  out.worst_count = count;
  out.worst_center = Rational::dyadic(2 * first + K + 1, scale.m + 1);
  out.ok = !pos.empty() && static_cast<double>(count) <= threshold;
  return out;
}

TwoEndsCheck is_two_ends(const Tube& tube, std::span<const Cell2> shading, const TwoEndsParams& params) {
  params.check();
  if (shading.empty()) throw std::invalid_argument("is_two_ends: empty shading");
  const auto pos = axial_positions(tube, shading);
  const double delta = tube.scale.delta();
  return two_ends_check(pos, tube.scale, std::pow(delta, params.epsilon1),
                        std::pow(delta, params.epsilon2) * static_cast<double>(pos.size()));
}

QuasiProductReport check_quasi_product(const TubeFamily& family) {
  if (!family.quasi_product) throw std::invalid_argument("check_quasi_product: family makes no claim");
  const auto& claim = *family.quasi_product;
  const Rational n = Rational(family.scale.cells());
  std::map<std::int64_t, std::vector<std::int64_t>> fibers;
  std::vector<std::int64_t> directions;
  for (const auto& t : family.tubes) {
    const std::int64_t dir = (t.slope * n).floor();
    directions.push_back(dir);
    fibers[dir].push_back((t.intercept * n).floor());
  }
  QuasiProductReport r;
  r.direction_constant = validate_cells(std::span<const std::int64_t>(directions), family.scale, SetKind::KatzTao, claim.s).C;
  for (const auto& [dir, fiber] : fibers)
    r.worst_fiber_constant = std::max(
        r.worst_fiber_constant, validate_cells(std::span<const std::int64_t>(fiber), family.scale, SetKind::KatzTao, claim.d).C);
  r.ok = r.direction_constant <= claim.K1 && r.worst_fiber_constant <= claim.K2;
  return r;
}

}  // namespace deltalab
