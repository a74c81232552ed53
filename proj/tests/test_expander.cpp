#include <doctest.h>

#include <random>
#include <set>

#include "deltalab/expander.hpp"
#include "oracles.hpp"

using namespace deltalab;

namespace {

GridSet1D upper_half(Scale sc) { return half_interval_set(SetSpec{}, sc); }

SetSpec cantor_half() {
  SetSpec s;
  s.kind = SetSpec::Kind::Cantor;
  s.keep = 2;
  s.out_of = 4;
  return s;
}

PairSet random_pairs(Scale sc, std::mt19937_64& rng, int n) {
  const auto A = upper_half(sc);
  std::set<std::pair<std::int64_t, std::int64_t>> chosen;
  const auto half = sc.cells() / 2;
  while (static_cast<int>(chosen.size()) < n)
    chosen.insert({half + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(half)),
                   half + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(half))});
  PairSet ps{A, A, {chosen.begin(), chosen.end()}};
  return ps;
}

}  // namespace

TEST_CASE("image_covering examples") {
  const Scale sc = Scale::of(8);
  const GridSet1D one(sc, {128});
  CHECK(image_covering(PairSet::full(one, one)) == 1);

  const auto A = upper_half(sc);
  const auto full = image_covering(PairSet::full(A, A));
  CHECK(full >= 256);
  CHECK(full <= 3 * 256 * 256);

  // Diagonal: f(a, a) = 2 a^2, with a = k delta, lies in cell floor(2 k^2 delta).
  std::set<std::int64_t> cells;
  for (auto k : A.cells()) cells.insert((2 * k * k) >> sc.m);
  CHECK(image_covering(PairSet::diagonal(A)) == static_cast<std::int64_t>(cells.size()));
}

TEST_CASE("energy_count examples and oracle") {
  const Scale sc = Scale::of(8);
  const GridSet1D one(sc, {200});
  CHECK(energy_count(PairSet::full(one, one)) == 1);

  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 3; ++trial) {
    const auto ps = random_pairs(sc, rng, 500);
    const auto e = energy_count(ps);
    CHECK(e == static_cast<std::int64_t>(oracle::brute_energy_pairs(ps).size()));
    CHECK(e == serial::energy_count(ps));
    CHECK(e == static_cast<std::int64_t>(energy_pairs(ps).size()));
    // Cauchy-Schwarz over the image cells.
    const auto n = static_cast<std::int64_t>(ps.P.size());
    CHECK(image_covering(ps) * fiber_square_sum(ps) >= n * n);
    CHECK(e >= fiber_square_sum(ps));
  }
}

TEST_CASE("energy pairs lie near their dual lines") {
  std::mt19937_64 rng(42);
  const Scale sc = Scale::of(8);
  const auto A = upper_half(sc);
  const auto ps = random_dense_pairs(A, A, 0.3, 7);
  CHECK(dual_transfer_violations(ps) == 0);
  for (const auto& e : energy_pairs(ps)) {
    const auto [k, l] = ps.P[e.first];
    const auto [kp, lp] = ps.P[e.second];
    CHECK(oracle::dual_pair_ok(k, l, kp, lp));
  }
}

TEST_CASE("build_dual examples") {
  const Scale sc = Scale::of(8);
  const auto A = upper_half(sc);
  // A single first coordinate: every line is y = x.
  const GridSet1D u(sc, {150});
  const auto one = build_dual(PairSet::full(u, A));
  REQUIRE(one.tubes.size() == 1);
  CHECK(one.tubes[0].tube.slope == Rational(1));
  CHECK(one.tubes[0].tube.intercept == Rational(0));
  CHECK(one.tubes[0].delta_exp == -1);
  CHECK(one.tubes[0].tube.multiplicity == one.card_calA);
  CHECK(one.points.size() == A.size() * A.size());

  // Two first coordinates u != u': y = x twice plus slopes u/u' and u'/u.
  const GridSet1D two(sc, {150, 200});
  const auto inst2 = build_dual(PairSet::full(two, u));
  REQUIRE(inst2.tubes.size() == 3);
  std::set<std::pair<std::int64_t, std::int64_t>> seen;
  for (const auto& t : inst2.tubes) {
    if (t.k == t.kp) {
      CHECK(t.tube.multiplicity == 2);
    } else {
      CHECK(t.tube.multiplicity == 1);
      CHECK(t.tube.slope == Rational(t.k, t.kp));
      seen.insert({t.k, t.kp});
    }
  }
  CHECK(seen == std::set<std::pair<std::int64_t, std::int64_t>>{{150, 200}, {200, 150}});

  std::mt19937_64 rng(43);
  const auto inst = build_dual(random_pairs(sc, rng, 400));
  std::int64_t mult = 0;
  for (const auto& t : inst.tubes) mult += t.tube.multiplicity;
  CHECK(mult == inst.card_calA);
  for (const auto& [key, ids] : inst.buckets)
    for (auto id : ids) {
      const auto& t = inst.tubes[id];
      CHECK(t.delta_exp == key.first);
      CHECK(t.n_exp == key.second);
      CHECK(t.tube.multiplicity >= (std::int64_t{1} << key.second));
      CHECK(t.tube.multiplicity < (std::int64_t{2} << key.second));
      if (key.first >= 0) {
        // 2^l <= |k - k'| 2^m / k' < 2^(l+1)
        const auto gap = std::abs(t.k - t.kp) << sc.m;
        CHECK(gap >= (t.kp << key.first));
        CHECK(gap < (t.kp << (key.first + 1)));
      }
    }
}

TEST_CASE("bucket bound audits") {
  const Scale s8 = Scale::of(8);
  const auto A = upper_half(s8);
  const auto full = check_bucket_bound(build_dual(PairSet::full(A, A)), 1.0, 0.1);
  CHECK(full.max_ratio <= 4.0);

  const GridSet1D u(s8, {150});
  // A single pair only produces the diagonal tube, whose bucket has Delta = 2.
  const auto single = check_bucket_bound(build_dual(PairSet::full(u, u)), 1.0, 0.1);
  CHECK(single.max_ratio == doctest::Approx(2.0 * std::pow(s8.delta(), 0.1)));
  CHECK(single.ok);

  const Scale s10 = Scale::of(10);
  const auto C = half_interval_set(cantor_half(), s10);
  const auto cant = check_bucket_bound(build_dual(PairSet::full(C, C)), 0.5, 0.1);
  CHECK(cant.max_ratio <= 8.0);
  CHECK(cant.ok);
}

TEST_CASE("check_shading_kt audits") {
  const Scale s10 = Scale::of(10);
  const auto C = half_interval_set(cantor_half(), s10);
  const auto inst = build_dual(PairSet::full(C, C));
  bool any = false;
  for (const auto& [key, ids] : inst.buckets) {
    if (key.first != 4) continue;  // Delta = 1/16
    any = true;
    const auto r = check_shading_kt(inst, key, 0.5, 0.1);
    CHECK(r.max_value <= std::pow(s10.delta(), -0.1) * 8);
    CHECK(r.ok);
  }
  CHECK(any);

  const Scale s8 = Scale::of(8);
  const auto A = upper_half(s8);
  const auto dense = build_dual(random_dense_pairs(A, A, 0.5, 3));
  for (const auto& [key, ids] : dense.buckets) {
    if (key.first < 3) continue;
    const auto r = check_shading_kt(dense, key, 1.0, 0.1);
    CHECK(std::isfinite(r.max_value));
    if (ids.size() == 1) CHECK(r.max_value <= r.bound);
  }
}

TEST_CASE("exponent_fit examples") {
  ExperimentSpec full;
  full.m_lo = 6;
  full.m_hi = 12;
  const auto f = exponent_fit(full, false);
  CHECK(f.slope >= 1.0);
  CHECK(f.rows.size() == 7);
  CHECK(f.residuals.size() == 5);
  CHECK(f.theory_exponent == doctest::Approx(4.0 / 3.0));

  ExperimentSpec point;
  point.A.kind = SetSpec::Kind::Point;
  point.B.kind = SetSpec::Kind::Point;
  point.m_lo = 6;
  point.m_hi = 12;
  CHECK(exponent_fit(point, false).slope == doctest::Approx(0.0));

  ExperimentSpec bad = full;
  bad.m_hi = 8;
  CHECK_THROWS_AS(exponent_fit(bad, false), std::invalid_argument);
}
