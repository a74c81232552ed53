#include <doctest.h>

#include <random>

#include "deltalab/incidence.hpp"
#include "oracles.hpp"

using namespace deltalab;

namespace {

Tube random_tube(Scale sc, std::mt19937_64& rng) {
  const std::int64_t q = 1 + static_cast<std::int64_t>(rng() % 32);
  const std::int64_t p = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(2 * q + 1)) - q;
  const std::int64_t den = sc.cells() * 4;
  const std::int64_t b = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(2 * den)) - den / 2;
  return Tube::make(sc, Rational(p, q), Rational(b, den));
}

GridSet2D random_squares(Scale sc, std::mt19937_64& rng, int n) {
  std::vector<Cell2> cells;
  for (int k = 0; k < n; ++k)
    cells.push_back({static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(sc.cells())),
                     static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(sc.cells()))});
  return GridSet2D(sc, std::move(cells));
}

}  // namespace

TEST_CASE("incident examples") {
  const Scale sc = Scale::of(6);
  const auto diag = Tube::make(sc, Rational(1), Rational(0));
  CHECK(incident(Cell2{10, 10}, diag));
  CHECK_FALSE(incident(Cell2{10, 20}, diag));  // 10 delta above the line
  // Closed-closed: a square touching the tube boundary at one corner counts.
  const auto flat = Tube::make(sc, Rational(0), Rational::dyadic(10, 6));
  CHECK(incident(Cell2{0, 12}, flat));   // bottom edge at y = 12 delta = top of tube
  CHECK_FALSE(incident(Cell2{0, 13}, flat));
}

TEST_CASE("incident matches the separating-axis oracle on random squares") {
  std::mt19937_64 rng(21);
  const Scale sc = Scale::of(8);
  for (int trial = 0; trial < 20; ++trial) {
    auto t = random_tube(sc, rng);
    if (trial % 3 == 1) t = t.with_width(sc.delta_exact());
    if (trial % 3 == 2) t = t.with_extent(Rational(1, 5), Rational(3, 4));
    for (int k = 0; k < 200; ++k) {
      const Cell2 c{static_cast<std::int64_t>(rng() % 256), static_cast<std::int64_t>(rng() % 256)};
      CHECK(incident(c, t) == oracle::sat_incident(c, t));
    }
    // Squares hugging the tube stress the boundary cases.
    for (std::int64_t i = 0; i < 256; i += 7) {
      const auto [lo, hi] = column_rows(t, i);
      for (std::int64_t j = lo - 2; j <= hi + 2; ++j) {
        if (j < 0 || j >= 256) continue;
        CHECK(incident(Cell2{i, j}, t) == oracle::sat_incident(Cell2{i, j}, t));
      }
    }
  }
}

TEST_CASE("square_inside_tube implies incident") {
  std::mt19937_64 rng(22);
  const Scale sc = Scale::of(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto t = random_tube(sc, rng);
    for (std::int64_t i = 0; i < 128; ++i)
      for (std::int64_t j = 0; j < 128; j += 3)
        if (square_inside_tube(Cell2{i, j}, sc, t)) CHECK(incident(Cell2{i, j}, t));
  }
}

TEST_CASE("full_shading examples") {
  const Scale sc = Scale::of(6);
  std::vector<Cell2> cells;
  for (std::int64_t i = 0; i < 64; ++i)
    for (std::int64_t j = 0; j < 64; ++j) cells.push_back({i, j});
  const GridSet2D G(sc, cells);
  // Total width 2 delta (half-width delta) covers one to three rows.
  const auto line = Tube::make(sc, Rational(0), Rational::dyadic(65, 7));
  TubeFamily one{sc, {line.with_width(sc.delta_exact())}, std::nullopt};
  const auto sh = full_shading(one, G);
  CHECK(sh.entries[0].size() >= 64);
  CHECK(sh.entries[0].size() <= 3 * 64);
  CHECK(static_cast<std::int64_t>(sh.entries[0].size()) == oracle::brute_incidences(one, G, false));
  // The default 2 delta neighbourhood covers four or five rows.
  TubeFamily wide{sc, {line}, std::nullopt};
  const auto shw = full_shading(wide, G);
  CHECK(shw.entries[0].size() >= 4 * 64);
  CHECK(shw.entries[0].size() <= 5 * 64);

  const auto empty = full_shading(one, GridSet2D(sc, {}));
  CHECK(empty.entries.size() == 1);
  CHECK(empty.entries[0].empty());
}

TEST_CASE("full_shading and incidence_count match the all-pairs oracle") {
  std::mt19937_64 rng(23);
  const Scale sc = Scale::of(8);
  for (int trial = 0; trial < 5; ++trial) {
    TubeFamily fam{sc, {}, std::nullopt};
    for (int k = 0; k < 100; ++k) {
      auto t = random_tube(sc, rng);
      t.multiplicity = 1 + static_cast<std::int64_t>(rng() % 4);
      fam.tubes.push_back(t);
    }
    const auto P = random_squares(sc, rng, 1000);
    const auto sh = full_shading(fam, P);
    CHECK(sh.entries == oracle::brute_shading(fam, P));
    CHECK(sh.entries == serial::full_shading(fam, P).entries);
    CHECK(incidence_count(fam, P) == oracle::brute_incidences(fam, P, false));
    CHECK(incidence_count(fam, P, true) == oracle::brute_incidences(fam, P, true));
    CHECK(incidence_count(fam, P) == serial::incidence_count(fam, P));
    // The dual lists are the transpose.
    std::int64_t dual_total = 0;
    for (std::size_t p = 0; p < sh.dual_entries.size(); ++p)
      for (auto t : sh.dual_entries[p]) {
        ++dual_total;
        CHECK(std::binary_search(sh.entries[t].begin(), sh.entries[t].end(), static_cast<std::uint32_t>(p)));
      }
    CHECK(dual_total == sh.size());
  }
}

TEST_CASE("incidence_count trivial cases") {
  const Scale sc = Scale::of(6);
  TubeFamily fam{sc, {Tube::make(sc, Rational(0), Rational(1, 8))}, std::nullopt};
  CHECK(incidence_count(fam, GridSet2D(sc, {{3, 60}, {40, 50}})) == 0);
  const auto G = GridSet2D(sc, {{0, 8}, {1, 8}, {2, 8}, {3, 7}});
  CHECK(incidence_count(fam, G) == 4);
}

TEST_CASE("is_two_ends examples") {
  const Scale sc = Scale::of(12);
  const auto tube = Tube::make(sc, Rational(0), Rational::dyadic(4097, 13));
  std::vector<Cell2> spread;
  for (std::int64_t i = 0; i < 4096; i += 64) spread.push_back({i, 2048});
  CHECK(is_two_ends(tube, spread, TwoEndsParams{0.5, 0.1}).ok);

  std::vector<Cell2> clump{{100, 2048}, {101, 2048}, {102, 2048}};
  CHECK_FALSE(is_two_ends(tube, clump, TwoEndsParams{0.5, 0.1}).ok);
  CHECK_FALSE(is_two_ends(tube, clump, TwoEndsParams{0.1, 0.01}).ok);

  std::vector<Cell2> single{{7, 2048}};
  for (double e2 : {0.01, 0.1, 0.4}) CHECK_FALSE(is_two_ends(tube, single, TwoEndsParams{0.5, e2}).ok);
}

TEST_CASE("two_ends_check agrees with a lattice scan") {
  std::mt19937_64 rng(24);
  const Scale sc = Scale::of(10);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::int64_t> pos;
    const int n = 2 + static_cast<int>(rng() % 30);
    for (int k = 0; k < n; ++k) pos.push_back(static_cast<std::int64_t>(rng() % 1024));
    const double rho = std::ldexp(1.0, -static_cast<int>(1 + rng() % 8));
    const auto c = two_ends_check(pos, sc, rho, 1e9);
    std::sort(pos.begin(), pos.end());
    CHECK(c.worst_count == oracle::lattice_ball_max(pos, sc, rho));
  }
}

TEST_CASE("check_quasi_product reads directions and fibers") {
  const Scale sc = Scale::of(6);
  TubeFamily fam{sc, {}, QuasiProductClaim{0.5, 0.5, 8, 8}};
  for (int d = 0; d < 4; ++d)
    for (int b = 0; b < 4; ++b) fam.tubes.push_back(Tube::make(sc, Rational::dyadic(16 * d, 6), Rational::dyadic(16 * b, 6)));
  const auto r = check_quasi_product(fam);
  CHECK(r.direction_constant >= 1.0);
  CHECK(r.worst_fiber_constant >= 1.0);
  CHECK(r.ok);
  fam.quasi_product.reset();
  CHECK_THROWS_AS(check_quasi_product(fam), std::invalid_argument);
}
