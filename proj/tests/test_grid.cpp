#include <doctest.h>

#include <random>

#include "deltalab/frostman.hpp"
#include "deltalab/grid.hpp"
#include "deltalab/rational.hpp"

using namespace deltalab;

TEST_CASE("rational arithmetic is exact and normalized") {
  CHECK(Rational(2, 4) == Rational(1, 2));
  CHECK(Rational(1, -2) == Rational(-1, 2));
  CHECK((Rational(1, 3) + Rational(1, 6)) == Rational(1, 2));
  CHECK((Rational(3, 4) * Rational(2, 3)) == Rational(1, 2));
  CHECK(Rational(-7, 2).floor() == -4);
  CHECK(Rational(-7, 2).ceil() == -3);
  CHECK(Rational::dyadic(3, 4) == Rational(3, 16));
  CHECK(Rational(1, 3) < Rational(1, 2));
  CHECK_THROWS(Rational(1, 0));
}

TEST_CASE("covering_number examples") {
  CHECK(covering_number(GridSet1D::full(Scale::of(4)), Scale::of(4)) == 16);
  const double pt[] = {0.3};
  for (int m : {0, 3, 10}) CHECK(covering_number(std::span<const double>(pt), Scale::of(m)) == 1);
  // Middle-half Cantor set: keep the outer quarters, depth 5, at m = 10.
  const int digits[] = {0, 3};
  const auto C = cantor_set(Scale::of(10), std::span<const int>(digits), 4);
  CHECK(covering_number(C, Scale::of(10)) == 32);
  CHECK(covering_number(C, Scale::of(2)) == 2);
  const double one[] = {1.0};
  CHECK(covering_number(std::span<const double>(one), Scale::of(3)) == 1);
}

TEST_CASE("covering_number never increases when coarsening") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::int64_t> cells;
    for (int k = 0; k < 40; ++k) cells.push_back(static_cast<std::int64_t>(rng() % 1024));
    const GridSet1D A(Scale::of(10), cells);
    std::int64_t prev = covering_number(A, Scale::of(10));
    CHECK(prev == static_cast<std::int64_t>(A.size()));
    for (int m = 9; m >= 0; --m) {
      const auto c = covering_number(A, Scale::of(m));
      CHECK(c <= prev);
      CHECK(c * 2 >= prev);
      prev = c;
    }
  }
}

TEST_CASE("restrict_to_ball examples and linear-scan oracle") {
  const auto full = GridSet1D::full(Scale::of(4));
  CHECK(restrict_to_ball(full, Rational(1, 2), Rational(1)).size() == 16);
  const Rational d = Rational::dyadic(1, 4);
  for (std::int64_t k = 0; k < 16; ++k)
    CHECK(restrict_to_ball(full, (Rational(k) + Rational(1, 2)) * d, d).size() <= 3);

  std::mt19937_64 rng(5);
  std::vector<std::int64_t> cells;
  while (cells.size() < 50) cells.push_back(static_cast<std::int64_t>(rng() % 256));
  const GridSet1D A(Scale::of(8), cells);
  const Rational c(1, 4), r = Rational::dyadic(1, 4);
  const auto got = restrict_to_ball(A, c, r);
  std::vector<std::int64_t> want;
  const Rational dd = Rational::dyadic(1, 8);
  for (auto k : A.cells())
    if (Rational(k) * dd <= c + r && Rational(k + 1) * dd >= c - r) want.push_back(k);
  CHECK(got.cells() == want);
}

TEST_CASE("restrict_to_ball in 2-D uses the sup metric") {
  std::vector<Cell2> cells;
  for (std::int64_t i = 0; i < 8; ++i)
    for (std::int64_t j = 0; j < 8; ++j) cells.push_back({i, j});
  const GridSet2D G(Scale::of(3), cells);
  const Rational d = Rational::dyadic(1, 3);
  // Center of cell (3, 3), radius delta: the closed 3x3 block of cells plus
  // the cells touching its boundary.
  const auto B = restrict_to_ball(G, d * Rational(7, 2), d * Rational(7, 2), d);
  for (const auto& c : B.cells()) {
    CHECK(c.i >= 2);
    CHECK(c.i <= 4);
    CHECK(c.j >= 2);
    CHECK(c.j <= 4);
  }
  CHECK(B.size() == 9);
}

TEST_CASE("dyadic_content examples") {
  CHECK(dyadic_content(GridSet1D::full(Scale::of(6)), 1.0).value == 1.0);
  CHECK(dyadic_content(GridSet1D(Scale::of(6), {}), 0.5).value == 0.0);
  CHECK(dyadic_content(cantor_set(Scale::of(8), 2, 4), 0.5).value == 1.0);
  // A single cell costs delta^s.
  CHECK(dyadic_content(GridSet1D(Scale::of(6), {5}), 0.5).value == doctest::Approx(0.125));
}

TEST_CASE("dyadic_content is monotone under inclusion") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::int64_t> cells;
    for (int k = 0; k < 30; ++k) cells.push_back(static_cast<std::int64_t>(rng() % 256));
    const GridSet1D A(Scale::of(8), cells);
    cells.resize(15);
    const GridSet1D B(Scale::of(8), cells);
    for (double s : {0.3, 0.7, 1.0}) CHECK(dyadic_content(B, s).value <= dyadic_content(A, s).value + 1e-12);
  }
}

TEST_CASE("grid sets reject foreign scales") {
  CHECK_THROWS_AS(covering_number(GridSet1D::full(Scale::of(3)), Scale::of(5)), std::invalid_argument);
}
