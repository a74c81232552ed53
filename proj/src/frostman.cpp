#include "deltalab/frostman.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <string>

namespace deltalab {

namespace {

int log2_exact(int v) {
  if (v <= 0 || (v & (v - 1)) != 0) return -1;
  int b = 0;
  while ((1 << b) < v) ++b;
  return b;
}

struct Window {
  std::int64_t count = 0;
  std::int64_t x = 0;  // first cell of the window
  std::int64_t y = 0;
};

double constant_for(SetKind kind, double s, std::int64_t count, int radius_exp, Scale scale,
                    std::size_t total) {
  if (count == 0) return 0.0;
  const double ratio = std::ldexp(1.0, radius_exp);  // r / delta
  if (kind == SetKind::KatzTao) return static_cast<double>(count) / std::pow(ratio, s);
  const double r = std::ldexp(1.0, radius_exp - scale.m);
  return static_cast<double>(count) / (std::pow(r, s) * static_cast<double>(total));
}

KTWitness assemble(SetKind kind, double s, Scale scale, std::size_t total, const std::vector<Window>& best,
                   bool two_d) {
  KTWitness w{kind, s, 0.0, std::nullopt};
  if (total == 0) return w;
  for (int j = 0; j <= scale.m; ++j) {
    const auto& b = best[static_cast<std::size_t>(j)];
    const double c = constant_for(kind, s, b.count, j, scale, total);
    if (c > w.C) {
      const std::int64_t R = std::int64_t{1} << j;
      BallWitness ball;
      ball.center_x = Rational::dyadic(b.x + R, scale.m);
      ball.center_y = two_d ? Rational::dyadic(b.y + R, scale.m) : Rational(0);
      ball.radius = Rational::dyadic(R, scale.m);
      ball.count = b.count;
      w.C = c;
      w.violating_ball = ball;
    }
  }
  return w;
}

std::vector<std::int64_t> sorted_unique(std::span<const std::int64_t> cells) {
  std::vector<std::int64_t> v(cells.begin(), cells.end());
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::vector<Cell2> sorted_unique(std::span<const Cell2> cells) {
  std::vector<Cell2> v(cells.begin(), cells.end());
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// Fullest run of `width` consecutive cells; leftmost on ties.
Window fullest_window(const std::vector<std::int64_t>& v, std::int64_t width) {
  Window best;
  std::size_t hi = 0;
  for (std::size_t lo = 0; lo < v.size(); ++lo) {
    if (hi < lo) hi = lo;
    while (hi < v.size() && v[hi] <= v[lo] + width - 1) ++hi;
    const auto c = static_cast<std::int64_t>(hi - lo);
    if (c > best.count) best = {c, v[lo], 0};
  }
  return best;
}

// Range add / global max with leftmost argmax.
class MaxTree {
 public:
  explicit MaxTree(std::size_t n) : n_(n), mx_(4 * n + 4, 0), lazy_(4 * n + 4, 0) {}

  void add(std::size_t l, std::size_t r, std::int64_t v) {
    if (l <= r) add(1, 0, n_ - 1, l, r, v);
  }
  std::int64_t max() const { return mx_[1]; }
  std::size_t argmax() const {
    std::size_t node = 1, lo = 0, hi = n_ - 1;
    std::int64_t target = mx_[1];
    while (lo < hi) {
      target -= lazy_[node];
      const std::size_t mid = (lo + hi) / 2;
      if (mx_[2 * node] == target) {
        node = 2 * node;
        hi = mid;
      } else {
        node = 2 * node + 1;
        lo = mid + 1;
      }
    }
    return lo;
  }

 private:
  void add(std::size_t node, std::size_t lo, std::size_t hi, std::size_t l, std::size_t r, std::int64_t v) {
    if (r < lo || hi < l) return;
    if (l <= lo && hi <= r) {
      mx_[node] += v;
      lazy_[node] += v;
      return;
    }
    const std::size_t mid = (lo + hi) / 2;
    add(2 * node, lo, mid, l, r, v);
    add(2 * node + 1, mid + 1, hi, l, r, v);
    mx_[node] = std::max(mx_[2 * node], mx_[2 * node + 1]) + lazy_[node];
  }

  std::size_t n_;
  std::vector<std::int64_t> mx_;
  std::vector<std::int64_t> lazy_;
};

// Fullest width x width box of cells. Sweep x, keep a max tree over candidate
// bottom rows (the distinct y values).
Window fullest_box(const std::vector<Cell2>& pts, const std::vector<std::int64_t>& ys, std::int64_t width) {
  Window best;
  if (pts.empty()) return best;
  MaxTree tree(ys.size());
  auto span_of = [&](std::int64_t y) {
    const auto l = std::lower_bound(ys.begin(), ys.end(), y - width + 1) - ys.begin();
    const auto r = std::upper_bound(ys.begin(), ys.end(), y) - ys.begin() - 1;
    return std::pair<std::size_t, std::size_t>(static_cast<std::size_t>(l), static_cast<std::size_t>(r));
  };
  std::size_t hi = 0;
  std::size_t lo = 0;
  while (lo < pts.size()) {
    const std::int64_t xs = pts[lo].i;
    while (hi < pts.size() && pts[hi].i <= xs + width - 1) {
      auto [l, r] = span_of(pts[hi].j);
      tree.add(l, r, 1);
      ++hi;
    }
    if (tree.max() > best.count) best = {tree.max(), xs, ys[tree.argmax()]};
    while (lo < pts.size() && pts[lo].i == xs) {
      auto [l, r] = span_of(pts[lo].j);
      tree.add(l, r, -1);
      ++lo;
    }
  }
  return best;
}

}  // namespace

GridSet1D cantor_set(Scale scale, int keep, int out_of, CantorPattern pattern, std::uint64_t seed) {
  if (keep < 1 || keep > out_of) throw std::invalid_argument("cantor_set: need 1 <= keep <= out_of");
  std::vector<int> digits;
  switch (pattern) {
    case CantorPattern::Spread:
      for (int i = 0; i < keep; ++i) digits.push_back(static_cast<int>(std::int64_t{i} * out_of / keep));
      return cantor_set(scale, digits, out_of);
    case CantorPattern::Leftmost:
      for (int i = 0; i < keep; ++i) digits.push_back(i);
      return cantor_set(scale, digits, out_of);
    case CantorPattern::Random: break;
  }
  const int b = log2_exact(out_of);
  if (b < 1 || scale.m % b != 0)
    throw std::invalid_argument("cantor_set: out_of must be a power of two with out_of^k = 2^m");
  std::mt19937_64 rng(seed);
  std::vector<int> all(static_cast<std::size_t>(out_of));
  std::iota(all.begin(), all.end(), 0);
  std::vector<std::int64_t> level{0};
  for (int d = 0; d < scale.m / b; ++d) {
    std::vector<std::int64_t> next;
    for (auto k : level) {
      std::shuffle(all.begin(), all.end(), rng);
      for (int i = 0; i < keep; ++i) next.push_back(k * out_of + all[static_cast<std::size_t>(i)]);
    }
    level = std::move(next);
  }
  return GridSet1D(scale, std::move(level));
}

GridSet1D cantor_set(Scale scale, std::span<const int> digits, int out_of) {
  const int b = log2_exact(out_of);
  if (b < 1 || scale.m % b != 0)
    throw std::invalid_argument("cantor_set: out_of must be a power of two with out_of^k = 2^m");
  if (digits.empty()) throw std::invalid_argument("cantor_set: empty digit set");
  for (int d : digits)
    if (d < 0 || d >= out_of) throw std::invalid_argument("cantor_set: digit out of range");
  std::vector<std::int64_t> level{0};
  for (int d = 0; d < scale.m / b; ++d) {
    std::vector<std::int64_t> next;
    next.reserve(level.size() * digits.size());
    for (auto k : level)
      for (int digit : digits) next.push_back(k * out_of + digit);
    level = std::move(next);
  }
  return GridSet1D(scale, std::move(level));
}

GridSet1D random_frostman_set(Scale scale, double s, std::uint64_t seed, double c0) {
  if (!(s > 0.0 && s <= 1.0)) throw std::invalid_argument("random_frostman_set: s outside (0,1]");
  const double p_both = std::pow(2.0, s) - 1.0;
  const double target = std::pow(2.0, s * scale.m);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::vector<std::int64_t> level{0};
    for (int d = 0; d < scale.m; ++d) {
      std::vector<std::int64_t> next;
      for (auto k : level) {
        if (coin(rng) < p_both) {
          next.push_back(2 * k);
          next.push_back(2 * k + 1);
        } else {
          next.push_back(2 * k + (coin(rng) < 0.5 ? 0 : 1));
        }
      }
      level = std::move(next);
    }
    const auto n = static_cast<double>(level.size());
    if (n < target / 2.0 || n > 2.0 * target) continue;
    GridSet1D set(scale, std::move(level));
    if (validate_set(set, SetKind::KatzTao, s).C <= c0) return set;
  }
  throw GeneratorError("random_frostman_set: no acceptable sample in 100 attempts");
}

KTWitness validate_cells(std::span<const std::int64_t> cells, Scale scale, SetKind kind, double s) {
  const auto v = sorted_unique(cells);
  std::vector<Window> best(static_cast<std::size_t>(scale.m + 1));
#pragma omp parallel for schedule(dynamic)
  for (int j = 0; j <= scale.m; ++j) {
    best[static_cast<std::size_t>(j)] = fullest_window(v, 2 * (std::int64_t{1} << j) + 1);
  }
  return assemble(kind, s, scale, v.size(), best, false);
}

KTWitness validate_cells(std::span<const Cell2> cells, Scale scale, SetKind kind, double s) {
  const auto pts = sorted_unique(cells);
  std::vector<std::int64_t> ys;
  ys.reserve(pts.size());
  for (const auto& c : pts) ys.push_back(c.j);
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  std::vector<Window> best(static_cast<std::size_t>(scale.m + 1));
#pragma omp parallel for schedule(dynamic)
  for (int j = 0; j <= scale.m; ++j) {
    best[static_cast<std::size_t>(j)] = fullest_box(pts, ys, 2 * (std::int64_t{1} << j) + 1);
  }
  return assemble(kind, s, scale, pts.size(), best, true);
}

namespace serial {

KTWitness validate_cells(std::span<const std::int64_t> cells, Scale scale, SetKind kind, double s) {
  const auto v = sorted_unique(cells);
  std::vector<Window> best(static_cast<std::size_t>(scale.m + 1));
  for (int j = 0; j <= scale.m; ++j) {
    const std::int64_t width = 2 * (std::int64_t{1} << j) + 1;
    Window& b = best[static_cast<std::size_t>(j)];
    for (auto start : v) {
      std::int64_t c = 0;
      for (auto k : v) c += (k >= start && k < start + width) ? 1 : 0;
      if (c > b.count) b = {c, start, 0};
    }
  }
  return assemble(kind, s, scale, v.size(), best, false);
}

KTWitness validate_cells(std::span<const Cell2> cells, Scale scale, SetKind kind, double s) {
  const auto pts = sorted_unique(cells);
  std::vector<std::int64_t> xs;
  for (const auto& c : pts) xs.push_back(c.i);
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::vector<Window> best(static_cast<std::size_t>(scale.m + 1));
  for (int j = 0; j <= scale.m; ++j) {
    const std::int64_t width = 2 * (std::int64_t{1} << j) + 1;
    Window& b = best[static_cast<std::size_t>(j)];
    for (auto x0 : xs) {
      std::vector<std::int64_t> col;
      for (const auto& c : pts)
        if (c.i >= x0 && c.i < x0 + width) col.push_back(c.j);
      std::sort(col.begin(), col.end());
      std::size_t hi = 0;
      for (std::size_t lo = 0; lo < col.size(); ++lo) {
        if (hi < lo) hi = lo;
        while (hi < col.size() && col[hi] < col[lo] + width) ++hi;
        const auto c = static_cast<std::int64_t>(hi - lo);
        if (c > b.count || (c == b.count && x0 == b.x && col[lo] < b.y)) b = {c, x0, col[lo]};
      }
    }
  }
  return assemble(kind, s, scale, pts.size(), best, true);
}

}  // namespace serial

KTWitness validate_set(const GridSet1D& set, SetKind kind, double s) {
  return validate_cells(std::span<const std::int64_t>(set.cells()), set.scale(), kind, s);
}

KTWitness validate_set(const GridSet2D& set, SetKind kind, double s) {
  return validate_cells(std::span<const Cell2>(set.cells()), set.scale(), kind, s);
}

double uniformity_period(double epsilon) {
  if (!(epsilon > 0.0)) throw EpsilonTooSmall("uniformity_period: epsilon must be positive");
  if (epsilon >= 1.0) return 1.0;
  // log2(2T)/T is decreasing for T >= 1 and equals 1 at T = 1.
  double lo = 1.0;
  double hi = 2.0;
  while (std::log2(2.0 * hi) / hi > epsilon) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (std::log2(2.0 * mid) / mid > epsilon ? lo : hi) = mid;
  }
  return hi;
}

namespace {

std::vector<int> uniformity_levels(int m, double T) {
  if (m < 2) throw EpsilonTooSmall("uniform_subset: need at least two dyadic levels");
  const int n = std::clamp(static_cast<int>(std::floor(m / T)), 2, m);
  std::vector<int> levels;
  for (int j = 0; j <= n; ++j) levels.push_back(static_cast<int>(std::llround(static_cast<double>(j) * m / n)));
  return levels;
}

template <class Pt, class ParentFn>
std::vector<Pt> prune_levels(std::vector<Pt> pts, const std::vector<int>& levels, int m, double tol,
                             ParentFn parent) {
  // Finest interior level first: removing whole coarse cells leaves the
  // counts of finer cells untouched.
  for (std::size_t idx = levels.size() - 1; idx-- > 1;) {
    const int shift = m - levels[idx];
    std::map<Pt, std::int64_t> count;
    for (const auto& p : pts) ++count[parent(p, shift)];
    std::map<int, std::int64_t> mass;
    auto bucket = [&](std::int64_t c) {
      return static_cast<int>(std::floor(std::log(static_cast<double>(c)) / std::log(tol) + 1e-12));
    };
    for (const auto& [cell, c] : count) mass[bucket(c)] += c;
    int chosen = mass.begin()->first;
    std::int64_t most = -1;
    for (const auto& [b, w] : mass) {
      if (w > most) {
        most = w;
        chosen = b;
      }
    }
    std::vector<Pt> kept;
    for (const auto& p : pts)
      if (bucket(count[parent(p, shift)]) == chosen) kept.push_back(p);
    pts = std::move(kept);
  }
  return pts;
}

template <class Pt, class ParentFn>
std::pair<double, std::vector<std::int64_t>> level_ratios(const std::vector<Pt>& pts, std::span<const int> levels,
                                                          int m, ParentFn parent) {
  double ratio = 1.0;
  std::vector<std::int64_t> mins;
  for (int e : levels) {
    std::map<Pt, std::int64_t> count;
    for (const auto& p : pts) ++count[parent(p, m - e)];
    std::int64_t lo = std::numeric_limits<std::int64_t>::max();
    std::int64_t hi = 0;
    for (const auto& [cell, c] : count) {
      lo = std::min(lo, c);
      hi = std::max(hi, c);
    }
    if (count.empty()) lo = 0;
    mins.push_back(lo);
    if (lo > 0) ratio = std::max(ratio, static_cast<double>(hi) / static_cast<double>(lo));
  }
  return {ratio, mins};
}

auto parent1 = [](std::int64_t k, int shift) { return k >> shift; };
auto parent2 = [](const Cell2& c, int shift) { return Cell2{c.i >> shift, c.j >> shift}; };

}  // namespace

UniformSubset uniform_subset(const GridSet1D& set, double epsilon, double tolerance) {
  if (!(tolerance > 1.0)) throw std::invalid_argument("uniform_subset: tolerance must exceed 1");
  if (set.empty()) throw std::invalid_argument("uniform_subset: empty set");
  const double T = uniformity_period(epsilon);
  const int m = set.scale().m;
  const auto levels = uniformity_levels(m, T);
  auto pts = prune_levels(set.cells(), levels, m, tolerance, parent1);
  auto [ratio, mins] = level_ratios(pts, levels, m, parent1);
  UniformityCertificate cert{epsilon, T, levels, mins, ratio, tolerance};
  return {GridSet1D(set.scale(), std::move(pts), set.support_lo(), set.support_hi()), cert};
}

UniformSubset2D uniform_subset(const GridSet2D& set, double epsilon, double tolerance) {
  if (!(tolerance > 1.0)) throw std::invalid_argument("uniform_subset: tolerance must exceed 1");
  if (set.empty()) throw std::invalid_argument("uniform_subset: empty set");
  const double T = uniformity_period(epsilon);
  const int m = set.scale().m;
  const auto levels = uniformity_levels(m, T);
  auto pts = prune_levels(set.cells(), levels, m, tolerance, parent2);
  auto [ratio, mins] = level_ratios(pts, levels, m, parent2);
  UniformityCertificate cert{epsilon, T, levels, mins, ratio, tolerance};
  return {GridSet2D(set.scale(), std::move(pts)), cert};
}

double uniformity_ratio(const GridSet1D& set, std::span<const int> level_exponents) {
  return level_ratios(set.cells(), level_exponents, set.scale().m, parent1).first;
}

double uniformity_ratio(const GridSet2D& set, std::span<const int> level_exponents) {
  return level_ratios(set.cells(), level_exponents, set.scale().m, parent2).first;
}

PigeonholeResult dyadic_pigeonhole(std::span<const double> keys) { return dyadic_pigeonhole(keys, keys); }

PigeonholeResult dyadic_pigeonhole(std::span<const double> keys, std::span<const double> weights) {
  if (keys.empty()) throw std::invalid_argument("dyadic_pigeonhole: empty list");
  if (keys.size() != weights.size()) throw std::invalid_argument("dyadic_pigeonhole: keys and weights differ in length");
  std::map<int, double> mass;
  PigeonholeResult res;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const double k = keys[i];
    if (!(k > 0.0) || !std::isfinite(k)) throw std::invalid_argument("dyadic_pigeonhole: keys must be positive");
    if (!(weights[i] >= 0.0)) throw std::invalid_argument("dyadic_pigeonhole: weights must be nonnegative");
    mass[dyadic_exponent(k)] += weights[i];
    res.total += weights[i];
  }
  res.nonempty_classes = static_cast<int>(mass.size());
  res.mass = -1.0;
  for (const auto& [e, w] : mass) {
    if (w > res.mass) {
      res.mass = w;
      res.exponent = e;
    }
  }
  res.bucket_value = std::ldexp(1.0, res.exponent);
  for (std::size_t i = 0; i < keys.size(); ++i)
    if (dyadic_exponent(keys[i]) == res.exponent) res.indices.push_back(i);
  return res;
}

}  // namespace deltalab
