#include <doctest.h>

#include <random>

#include "deltalab/frostman.hpp"
#include "oracles.hpp"

using namespace deltalab;

TEST_CASE("cantor_set examples") {
  CHECK(cantor_set(Scale::of(8), 4, 4).size() == 256);
  const auto C = cantor_set(Scale::of(8), 2, 4);
  CHECK(C.size() == 16);
  CHECK(validate_set(C, SetKind::KatzTao, 0.5).C <= 2.0);
  const auto L = cantor_set(Scale::of(6), 1, 2, CantorPattern::Leftmost);
  CHECK(L.cells() == std::vector<std::int64_t>{0});
  CHECK_THROWS_AS(cantor_set(Scale::of(7), 2, 4), std::invalid_argument);
}

TEST_CASE("random_frostman_set examples") {
  CHECK(random_frostman_set(Scale::of(8), 1.0, 3).size() == 256);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto A = random_frostman_set(Scale::of(10), 0.5, seed);
    CHECK(A.size() >= 16);
    CHECK(A.size() <= 64);
    CHECK(oracle::kt_scan_1d(A.cells(), A.scale(), SetKind::KatzTao, 0.5) <= 8.0);
  }
  CHECK(random_frostman_set(Scale::of(10), 0.5, 42) == random_frostman_set(Scale::of(10), 0.5, 42));
}

TEST_CASE("validate_set examples") {
  const auto full = GridSet1D::full(Scale::of(4));
  CHECK(validate_set(full, SetKind::KatzTao, 1.0).C == 3.0);
  CHECK(oracle::kt_scan_1d(full.cells(), full.scale(), SetKind::KatzTao, 1.0) == 3.0);
  for (double s : {0.1, 0.5, 1.0}) CHECK(validate_set(GridSet1D(Scale::of(6), {9}), SetKind::KatzTao, s).C == 1.0);
  const double c = validate_set(cantor_set(Scale::of(8), 2, 4), SetKind::KatzTao, 0.5).C;
  CHECK(c >= 1.0);
  CHECK(c <= 3.0);
}

TEST_CASE("validate_set witness ball attains the constant") {
  const auto A = random_frostman_set(Scale::of(9), 0.6, 8);
  const auto w = validate_set(A, SetKind::KatzTao, 0.6);
  REQUIRE(w.violating_ball.has_value());
  const auto& b = *w.violating_ball;
  CHECK(restrict_to_ball(A, b.center_x, b.radius).size() >= static_cast<std::size_t>(b.count));
  const double ratio = (b.radius / A.scale().delta_exact()).to_double();
  CHECK(static_cast<double>(b.count) / std::pow(ratio, 0.6) == doctest::Approx(w.C));
}

TEST_CASE("1-D validator matches the exhaustive scan and the serial reference") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::int64_t> cells;
    const int n = 1 + static_cast<int>(rng() % 60);
    for (int k = 0; k < n; ++k) cells.push_back(static_cast<std::int64_t>(rng() % 128));
    const GridSet1D A(Scale::of(7), cells);
    for (auto kind : {SetKind::KatzTao, SetKind::Frostman}) {
      const double s = 0.3 + 0.1 * (trial % 7);
      const auto par = validate_set(A, kind, s).C;
      CHECK(par == oracle::kt_scan_1d(A.cells(), A.scale(), kind, s));
      CHECK(par == serial::validate_cells(std::span<const std::int64_t>(A.cells()), A.scale(), kind, s).C);
    }
  }
}

TEST_CASE("2-D validator matches the exhaustive scan and the serial reference") {
  std::mt19937_64 rng(78);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Cell2> cells;
    const int n = 1 + static_cast<int>(rng() % 40);
    for (int k = 0; k < n; ++k) cells.push_back({static_cast<std::int64_t>(rng() % 32), static_cast<std::int64_t>(rng() % 32)});
    const GridSet2D P(Scale::of(5), cells);
    const double s = 0.6 + 0.1 * (trial % 5);
    const auto par = validate_set(P, SetKind::KatzTao, s).C;
    CHECK(par == oracle::kt_scan_2d(P.cells(), P.scale(), s));
    CHECK(par == serial::validate_cells(std::span<const Cell2>(P.cells()), P.scale(), SetKind::KatzTao, s).C);
  }
}

TEST_CASE("KT constant is monotone under inclusion") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::int64_t> cells;
    for (int k = 0; k < 40; ++k) cells.push_back(static_cast<std::int64_t>(rng() % 512));
    const GridSet1D A(Scale::of(9), cells);
    cells.resize(20);
    const GridSet1D B(Scale::of(9), cells);
    CHECK(validate_set(B, SetKind::KatzTao, 0.5).C <= validate_set(A, SetKind::KatzTao, 0.5).C);
  }
}

TEST_CASE("uniform_subset examples") {
  const auto full = GridSet1D::full(Scale::of(8));
  CHECK(uniform_subset(full, 0.3).subset == full);
  const auto C = cantor_set(Scale::of(8), 2, 4);
  const auto u = uniform_subset(C, 0.1);
  CHECK(u.subset == C);
  CHECK(u.certificate.ratio_bound <= u.certificate.tolerance);

  // Full left half plus one cell near 1.
  std::vector<std::int64_t> cells;
  for (std::int64_t k = 0; k < 512; ++k) cells.push_back(k);
  cells.push_back(1020);
  const GridSet1D A(Scale::of(10), cells);
  const auto v = uniform_subset(A, 0.2);
  for (auto k : v.subset.cells()) CHECK(k < 512);
  CHECK(uniformity_ratio(v.subset, v.certificate.level_exponents) <= v.certificate.tolerance);
}

TEST_CASE("uniform_subset output passes the uniformity re-check") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto A = random_frostman_set(Scale::of(10), 0.6, seed);
    const auto u = uniform_subset(A, 0.25);
    CHECK_FALSE(u.subset.empty());
    CHECK(std::includes(A.cells().begin(), A.cells().end(), u.subset.cells().begin(), u.subset.cells().end()));
    CHECK(uniformity_ratio(u.subset, u.certificate.level_exponents) <= u.certificate.tolerance);
  }
}

TEST_CASE("dyadic_pigeonhole examples") {
  const std::vector<double> equal(7, 3.0);
  CHECK(dyadic_pigeonhole(std::span<const double>(equal)).indices.size() == 7);

  std::vector<double> powers;
  for (int k = 0; k <= 10; ++k) powers.push_back(std::ldexp(1.0, k));
  const auto r = dyadic_pigeonhole(std::span<const double>(powers));
  CHECK(r.indices == std::vector<std::size_t>{10});
  CHECK(r.bucket_value == 1024.0);

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(1, 1000);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> keys;
    for (int k = 0; k < 100; ++k) keys.push_back(u(rng));
    const auto p = dyadic_pigeonhole(std::span<const double>(keys));
    double mass = 0, total = 0;
    for (auto i : p.indices) mass += keys[i];
    for (double k : keys) total += k;
    CHECK(mass >= total / 20);
    CHECK(mass >= total / (2.0 * p.nonempty_classes));
    for (auto i : p.indices) CHECK(dyadic_exponent(keys[i]) == p.exponent);
  }
  CHECK_THROWS_AS(dyadic_pigeonhole(std::span<const double>()), std::invalid_argument);
}
