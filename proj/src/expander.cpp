#include "deltalab/expander.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace deltalab {

namespace {

int log2_of_power(int v) {
  int b = 0;
  while ((1 << b) < v) ++b;
  if ((1 << b) != v) throw std::invalid_argument("out_of must be a power of two");
  return b;
}

std::vector<std::int64_t> f_values(const PairSet& pairs) {
  std::vector<std::int64_t> F;
  F.reserve(pairs.P.size());
  for (const auto& [k, l] : pairs.P) F.push_back(k * (k + l));  // f / delta^2
  return F;
}

std::vector<std::int64_t> projection(const std::vector<std::pair<std::int64_t, std::int64_t>>& P, bool first) {
  std::vector<std::int64_t> v;
  v.reserve(P.size());
  for (const auto& pr : P) v.push_back(first ? pr.first : pr.second);
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

double SetSpec::dimension() const {
  switch (kind) {
    case Kind::Full: return 1.0;
    case Kind::Cantor: return std::log(static_cast<double>(keep)) / std::log(static_cast<double>(out_of));
    case Kind::RandomFrostman: return s;
    case Kind::Point: return 0.0;
  }
  return 0.0;
}

GridSet1D half_interval_set(const SetSpec& spec, Scale scale) {
  if (scale.m < 1) throw std::invalid_argument("half_interval_set: need m >= 1");
  const std::int64_t base = std::int64_t{1} << (scale.m - 1);
  const Rational lo(1, 2), hi(1);
  std::vector<std::int64_t> cells;
  switch (spec.kind) {
    case SetSpec::Kind::Full:
      for (std::int64_t k = base; k < 2 * base; ++k) cells.push_back(k);
      break;
    case SetSpec::Kind::Point: cells.push_back(base); break;
    case SetSpec::Kind::Cantor: {
      const int b = log2_of_power(spec.out_of);
      const int inner = ((scale.m - 1) / b) * b;
      const auto c = cantor_set(Scale::of(inner), spec.keep, spec.out_of, CantorPattern::Spread);
      for (auto k : c.cells()) cells.push_back(base + (k << ((scale.m - 1) - inner)));
      break;
    }
    case SetSpec::Kind::RandomFrostman: {
      const auto c = random_frostman_set(Scale::of(scale.m - 1), spec.s, spec.seed);
      for (auto k : c.cells()) cells.push_back(base + k);
      break;
    }
  }
  return GridSet1D(scale, std::move(cells), lo, hi);
}

PairSet PairSet::full(const GridSet1D& A, const GridSet1D& B) {
  if (A.scale() != B.scale()) throw ScaleMismatch("PairSet: A and B at different scales");
  PairSet p{A, B, {}};
  p.P.reserve(A.size() * B.size());
  for (auto a : A.cells())
    for (auto b : B.cells()) p.P.emplace_back(a, b);
  return p;
}

PairSet PairSet::diagonal(const GridSet1D& A) {
  PairSet p{A, A, {}};
  for (auto a : A.cells()) p.P.emplace_back(a, a);
  return p;
}

PairSet random_dense_pairs(const GridSet1D& A, const GridSet1D& B, double density, std::uint64_t seed) {
  if (A.scale() != B.scale()) throw ScaleMismatch("PairSet: A and B at different scales");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution keep(density);
  PairSet p{A, B, {}};
  for (auto a : A.cells())
    for (auto b : B.cells())
      if (keep(rng)) p.P.emplace_back(a, b);
  if (p.P.empty() && !A.empty() && !B.empty()) p.P.emplace_back(A.cells().front(), B.cells().front());
  return p;
}

std::int64_t image_covering(const PairSet& pairs) {
  const int m = pairs.scale().m;
  auto F = f_values(pairs);
  for (auto& v : F) v >>= m;  // floor(f / delta)
  std::sort(F.begin(), F.end());
  return std::unique(F.begin(), F.end()) - F.begin();
}

std::int64_t energy_count(const PairSet& pairs) {
  auto F = f_values(pairs);
  std::sort(F.begin(), F.end());
  const std::int64_t w = pairs.scale().cells();  // delta / delta^2
  std::int64_t total = 0;
  std::size_t lo = 0, hi = 0;
  for (std::size_t i = 0; i < F.size(); ++i) {
    while (F[lo] < F[i] - w) ++lo;
    while (hi < F.size() && F[hi] <= F[i] + w) ++hi;
    total += static_cast<std::int64_t>(hi - lo);
  }
  return total;
}

std::vector<EnergyPair> energy_pairs(const PairSet& pairs) {
  const auto F = f_values(pairs);
  std::vector<std::size_t> order(F.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return F[a] < F[b]; });
  const std::int64_t w = pairs.scale().cells();
  std::vector<EnergyPair> out;
  std::size_t lo = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    while (F[order[lo]] < F[order[i]] - w) ++lo;
    for (std::size_t j = lo; j < order.size() && F[order[j]] <= F[order[i]] + w; ++j)
      out.push_back({order[i], order[j]});
  }
  return out;
}

namespace serial {

std::int64_t energy_count(const PairSet& pairs) {
  const auto F = f_values(pairs);
  const std::int64_t w = pairs.scale().cells();
  std::int64_t total = 0;
  for (auto x : F)
    for (auto y : F) total += (x - y <= w && y - x <= w) ? 1 : 0;
  return total;
}

}  // namespace serial

std::int64_t fiber_square_sum(const PairSet& pairs) {
  const int m = pairs.scale().m;
  auto F = f_values(pairs);
  for (auto& v : F) v >>= m;
  std::sort(F.begin(), F.end());
  std::int64_t total = 0;
  for (std::size_t i = 0; i < F.size();) {
    std::size_t j = i;
    while (j < F.size() && F[j] == F[i]) ++j;
    total += static_cast<std::int64_t>((j - i) * (j - i));
    i = j;
  }
  return total;
}

std::int64_t dual_transfer_violations(const PairSet& pairs) {
  const Rational d = pairs.scale().delta_exact();
  std::int64_t bad = 0;
  for (const auto& e : energy_pairs(pairs)) {
    const auto [k, l] = pairs.P[e.first];
    const auto [kp, lp] = pairs.P[e.second];
    const Rational a = Rational(k) * d, b = Rational(l) * d, ap = Rational(kp) * d, bp = Rational(lp) * d;
    const Rational gap = bp - ((a / ap) * b + (a * a - ap * ap) / ap);
    if (gap.abs() > d * 2) ++bad;
  }
  return bad;
}

int slope_gap_exponent(std::int64_t k, std::int64_t kp, Scale scale) {
  if (k == kp) return -1;
  const int128 num = static_cast<int128>(k > kp ? k - kp : kp - k) << scale.m;
  int l = 0;
  while ((static_cast<int128>(kp) << (l + 1)) <= num) ++l;
  return l;
}

DualInstance build_dual(const PairSet& pairs) {
  DualInstance inst;
  inst.scale = pairs.scale();
  inst.card_A = static_cast<std::int64_t>(pairs.A.size());
  const int m = inst.scale.m;
  const auto xs = projection(pairs.P, true);
  const auto ys = projection(pairs.P, false);

  std::vector<Cell2> pts;
  pts.reserve(ys.size() * ys.size());
  for (auto b : ys)
    for (auto bp : ys) pts.push_back({b, bp});
  inst.points = GridSet2D(inst.scale, std::move(pts));

  struct Agg {
    std::int64_t mult = 0, k = 0, kp = 0;
  };
  std::map<std::pair<std::int64_t, std::int64_t>, Agg> cells;
  for (auto k : xs)
    for (auto kp : xs) {
      const std::int64_t sc = static_cast<std::int64_t>(floor_div(static_cast<int128>(k) << m, kp));
      const std::int64_t ic = static_cast<std::int64_t>(floor_div(static_cast<int128>(k) * k - static_cast<int128>(kp) * kp, kp));
      auto& agg = cells[{sc, ic}];
      if (agg.mult == 0) {
        agg.k = k;
        agg.kp = kp;
      }
      ++agg.mult;
    }
  inst.card_calA = static_cast<std::int64_t>(xs.size() * xs.size());

  for (const auto& [cell, agg] : cells) {
    DualTube t;
    t.k = agg.k;
    t.kp = agg.kp;
    t.slope_cell = cell.first;
    t.intercept_cell = cell.second;
    t.tube = Tube::make(inst.scale, Rational(agg.k, agg.kp), Rational(agg.k * agg.k - agg.kp * agg.kp, agg.kp << m),
                        static_cast<std::int64_t>(inst.tubes.size()), agg.mult);
    t.delta_exp = slope_gap_exponent(agg.k, agg.kp, inst.scale);
    t.n_exp = dyadic_exponent(static_cast<double>(agg.mult));
    inst.buckets[{t.delta_exp, t.n_exp}].push_back(inst.tubes.size());
    inst.tubes.push_back(std::move(t));
  }
  std::size_t diagonal = 0;
  for (const auto& [key, list] : inst.buckets)
    if (key.first == -1) diagonal += list.size();
  if (diagonal > 1) throw std::logic_error("build_dual: more than one tube with slope gap below delta");
  return inst;
}

BucketReport check_bucket_bound(const DualInstance& inst, double s, double epsilon, double constant) {
  BucketReport rep;
  rep.constant = constant;
  const double delta = inst.scale.delta();
  for (const auto& [key, list] : inst.buckets) {
    const double Delta = std::ldexp(1.0, -key.first);
    const double N = std::ldexp(1.0, key.second);
    BucketRow row{key, static_cast<std::int64_t>(list.size()), 0.0};
    row.ratio = static_cast<double>(row.count) * N * std::pow(Delta, s) /
                (std::pow(delta, -epsilon) * static_cast<double>(inst.card_A));
    rep.max_ratio = std::max(rep.max_ratio, row.ratio);
    rep.rows.push_back(row);
  }
  rep.ok = rep.max_ratio <= constant;
  return rep;
}

ShadingKTReport check_shading_kt(const DualInstance& inst, BucketKey bucket, double s, double epsilon) {
  const int l = bucket.first;
  if (l < 3) throw std::invalid_argument("check_shading_kt: needs Delta <= 1/8");
  ShadingKTReport rep;
  const int m = inst.scale.m;
  rep.bound = 8.0 * std::pow(inst.scale.delta(), -epsilon);
  auto it = inst.buckets.find(bucket);
  if (it == inst.buckets.end()) {
    rep.ok = true;
    return rep;
  }
  std::vector<const DualTube*> tubes;
  for (auto i : it->second) tubes.push_back(&inst.tubes[i]);
  const double N = std::ldexp(1.0, bucket.second);
  const double scale_factor = N * std::pow(std::ldexp(1.0, l - m), s);  // N (delta / Delta)^s

  const auto& pts = inst.points.cells();
  std::vector<double> value(pts.size(), 0.0);
  const auto npts = static_cast<std::int64_t>(pts.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t pi = 0; pi < npts; ++pi) {
    const auto& p = pts[static_cast<std::size_t>(pi)];
    std::vector<std::pair<std::int64_t, std::int64_t>> slopes;
    for (const auto* t : tubes) {
      // kp |b' - slope b - intercept| / delta <= 2 kp
      const int128 lhs = static_cast<int128>(p.j) * t->kp - static_cast<int128>(t->k) * p.i -
                         (static_cast<int128>(t->k) * t->k - static_cast<int128>(t->kp) * t->kp);
      if ((lhs < 0 ? -lhs : lhs) <= 2 * static_cast<int128>(t->kp)) slopes.emplace_back(t->k, t->kp);
    }
    if (slopes.empty()) continue;
    std::sort(slopes.begin(), slopes.end(), [](const auto& a, const auto& b) {
      return static_cast<int128>(a.first) * b.second < static_cast<int128>(b.first) * a.second;
    });
    double K3 = 0.0;
    for (int j = 0; j + 3 <= l; ++j) {
      // slopes within a closed interval of radius 2^j delta
      std::size_t hi = 0;
      std::int64_t best = 0;
      for (std::size_t lo = 0; lo < slopes.size(); ++lo) {
        if (hi < lo) hi = lo;
        while (hi < slopes.size()) {
          const auto& a = slopes[lo];
          const auto& b = slopes[hi];
          const int128 diff = (static_cast<int128>(b.first) * a.second - static_cast<int128>(a.first) * b.second) << m;
          if (diff > (static_cast<int128>(a.second) * b.second) << (j + 1)) break;
          ++hi;
        }
        best = std::max<std::int64_t>(best, static_cast<std::int64_t>(hi - lo));
      }
      K3 = std::max(K3, static_cast<double>(best) / std::pow(std::ldexp(1.0, j), s));
    }
    value[static_cast<std::size_t>(pi)] = K3 * scale_factor;
  }
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (value[i] > 0) ++rep.points_checked;
    if (value[i] > rep.max_value) {
      rep.max_value = value[i];
      rep.worst_point = pts[i];
    }
  }
  rep.ok = rep.max_value <= rep.bound;
  return rep;
}

PairSet make_pairs(const ExperimentSpec& spec, Scale scale) {
  const auto A = half_interval_set(spec.A, scale);
  switch (spec.pairs) {
    case PairKind::Diagonal: return PairSet::diagonal(A);
    case PairKind::Full: return PairSet::full(A, half_interval_set(spec.B, scale));
    case PairKind::RandomDense:
      return random_dense_pairs(A, half_interval_set(spec.B, scale), spec.density,
                                spec.seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(scale.m)));
  }
  return PairSet::full(A, A);
}

FitResult exponent_fit(const ExperimentSpec& spec, bool with_energy) {
  if (spec.m_hi - spec.m_lo < 4) throw std::invalid_argument("exponent_fit: need m_hi - m_lo >= 4");
  const int n = spec.m_hi - spec.m_lo + 1;
  FitResult fit;
  fit.rows.resize(static_cast<std::size_t>(n));
  fit.theory_exponent = 2.0 * (spec.A.dimension() + (spec.pairs == PairKind::Diagonal ? spec.A : spec.B).dimension()) / 3.0;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    const int m = spec.m_lo + i;
    const auto pairs = make_pairs(spec, Scale::of(m));
    SweepRow row;
    row.m = m;
    row.delta = std::ldexp(1.0, -m);
    row.card_A = static_cast<std::int64_t>(pairs.A.size());
    row.card_B = static_cast<std::int64_t>(pairs.B.size());
    row.card_P = static_cast<std::int64_t>(pairs.P.size());
    row.image_cover = image_covering(pairs);
    row.energy = with_energy ? energy_count(pairs) : 0;
    fit.rows[static_cast<std::size_t>(i)] = row;
  }
  for (const auto& r : fit.rows)
    if (r.image_cover == 0) throw DegenerateFit("exponent_fit: zero covering number at m = " + std::to_string(r.m));
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& r : fit.rows) {
    const double x = r.m, y = std::log2(static_cast<double>(r.image_cover));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double nn = n;
  fit.slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / nn;
  for (const auto& r : fit.rows)
    if (r.m >= spec.m_lo + 2)
      fit.residuals.push_back(std::log2(static_cast<double>(r.image_cover)) - (fit.slope * r.m + fit.intercept));
  return fit;
}

}  // namespace deltalab
