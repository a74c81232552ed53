#include <doctest.h>

#include <random>

#include "deltalab/refinement.hpp"
#include "oracles.hpp"

using namespace deltalab;

namespace {

std::vector<Cell2> on_row(const std::vector<std::int64_t>& pos, std::int64_t row) {
  std::vector<Cell2> out;
  for (auto k : pos) out.push_back({k, row});
  return out;
}

}  // namespace

TEST_CASE("two_ends_reduce keeps an equispaced full shading") {
  const Scale sc = Scale::of(12);
  const auto t = Tube::make(sc, Rational(0), Rational(1, 2));
  std::vector<std::int64_t> pos;
  for (std::int64_t k = 0; k < 4096; k += 64) pos.push_back(k);
  const auto out = two_ends_reduce(t, on_row(pos, 2048), 0.5, 0.2);
  CHECK(out.L == 1.0);
  CHECK(out.N == 64);
  CHECK(out.steps == 0);
}

TEST_CASE("two_ends_reduce localizes to a sub-segment") {
  const Scale sc = Scale::of(12);
  const auto t = Tube::make(sc, Rational(0), Rational(1, 2));
  for (int lexp = 2; lexp <= 5; ++lexp) {
    const double ell = std::ldexp(1.0, -lexp);
    const auto span = static_cast<std::int64_t>(ell * 4096);
    const int P = static_cast<int>(std::lround(std::sqrt(ell * 4096)));
    std::vector<std::int64_t> pos;
    for (int k = 0; k < P; ++k) pos.push_back(1000 + k * span / P);
    for (double eps : {0.1, 0.2, 0.3}) {
      const auto out = two_ends_reduce(t, on_row(pos, 2048), 0.5, eps);
      CAPTURE(lexp);
      CAPTURE(eps);
      CHECK(out.N == P);
      CHECK(out.L >= ell);
      CHECK(out.segment_lo.to_double() <= 1000 * sc.delta());
      if (eps == 0.1) CHECK(out.L <= 2 * ell);
    }
  }
}

TEST_CASE("two_ends_reduce on a single square") {
  const Scale sc = Scale::of(10);
  const auto t = Tube::make(sc, Rational(0), Rational(1, 2));
  const std::vector<Cell2> one{{5, 512}};
  const auto out = two_ends_reduce(t, one, 0.5, 0.2);
  CHECK(out.N == 1);
  CHECK(out.L == doctest::Approx(sc.delta()));
  CHECK_FALSE(is_two_ends(t, out.kept, TwoEndsParams{0.5, 0.1}).ok);
}

TEST_CASE("two_ends_reduce argument checks") {
  const Scale sc = Scale::of(8);
  const auto t = Tube::make(sc, Rational(0), Rational(1, 2));
  const std::vector<Cell2> sh{{1, 128}, {100, 128}};
  CHECK_THROWS_AS(two_ends_reduce(t, sh, 0.5, 0.6), std::invalid_argument);
  CHECK_THROWS_AS(two_ends_reduce(t, sh, 0.02, 0.2), std::invalid_argument);
  CHECK_THROWS_AS(two_ends_reduce(t, std::vector<Cell2>{}, 0.5, 0.2), std::invalid_argument);
}

TEST_CASE("two_ends_reduce meets the lemma bounds on KT shadings") {
  std::mt19937_64 rng(31);
  const Scale sc = Scale::of(10);
  for (int trial = 0; trial < 30; ++trial) {
    const double s = 0.4 + 0.1 * (trial % 5);
    const double eps = 0.1 + 0.05 * (trial % 3);
    const std::int64_t width = std::int64_t{1} << (4 + trial % 7);
    const std::int64_t lo = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(1024 - width + 1));
    const auto pos = oracle::kt_line_positions(sc, s, rng, lo, lo + width);
    REQUIRE(interval_kt(pos, s));
    const auto core = two_ends_core(pos, sc, s, eps);
    CAPTURE(trial);
    CHECK(core.lower_bounds_ok);
    CHECK(core.inequality_ok);
    // Re-verify the final window on the lattice oracle.
    std::vector<std::int64_t> kept;
    for (auto i : core.kept) kept.push_back(pos[i]);
    std::sort(kept.begin(), kept.end());
    const double rho = core.L > sc.delta() * (1 + 1e-12) ? core.L * std::pow(sc.delta() / core.L, eps) : sc.delta();
    CHECK(static_cast<double>(oracle::lattice_ball_max(kept, sc, rho)) <= core.threshold);
    for (auto k : kept) {
      CHECK(k >= core.first);
      CHECK(k <= core.last);
    }
  }
}

TEST_CASE("bipartite_refine examples") {
  BipartiteGraph K;
  for (int i = 0; i < 6; ++i) {
    K.left.push_back(i);
    K.right.push_back(i);
  }
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) K.edges.push_back({i, j});
  auto r = bipartite_refine(K);
  CHECK(r.graph.edges.size() == 36);
  CHECK(r.degrees_ok);
  CHECK(r.mass_ok);

  BipartiteGraph M;
  for (int i = 0; i < 8; ++i) {
    M.left.push_back(i);
    M.right.push_back(100 + i);
    M.edges.push_back({i, 100 + i});
  }
  CHECK(bipartite_refine(M).graph.edges.size() == 8);

  // Double star: a0 joined to every b, b0 joined to every a.
  BipartiteGraph S;
  for (int i = 0; i < 10; ++i) {
    S.left.push_back(i);
    S.right.push_back(100 + i);
    S.edges.push_back({0, 100 + i});
    if (i > 0) S.edges.push_back({i, 100});
  }
  REQUIRE(S.edges.size() == 19);
  r = bipartite_refine(S);
  CHECK(r.E0 == 19);
  CHECK(r.graph.edges.size() >= 10);
  CHECK(oracle::check_refine(S, r.graph).all());
}

TEST_CASE("bipartite_refine guarantees hold on random graphs") {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 100; ++trial) {
    auto g = oracle::random_graph(rng, trial < 80 ? 60 : 1000);
    g.normalize();
    if (g.edges.empty()) continue;
    const auto r = bipartite_refine(g);
    const auto c = oracle::check_refine(g, r.graph);
    CAPTURE(trial);
    CHECK(c.left_degrees);
    CHECK(c.right_degrees);
    CHECK(c.mass);
    CHECK(c.induced);
    CHECK(r.degrees_ok);
    CHECK(r.mass_ok);
    // Peeling again against the original thresholds deletes nothing.
    const auto again = bipartite_refine(r.graph);
    CHECK(again.graph.edges.size() <= r.graph.edges.size());
  }
}

TEST_CASE("bipartite_refine rejects an empty edge set") {
  BipartiteGraph g;
  g.left = {1};
  g.right = {2};
  CHECK_THROWS_AS(bipartite_refine(g), std::invalid_argument);
}

TEST_CASE("degree_profile examples") {
  BipartiteGraph K;
  for (int i = 0; i < 3; ++i) {
    K.left.push_back(i);
    K.right.push_back(10 + i);
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) K.edges.push_back({i, 10 + j});
  auto p = degree_profile(K);
  CHECK(p.left == std::map<std::int64_t, std::int64_t>{{3, 3}});
  CHECK(p.right == std::map<std::int64_t, std::int64_t>{{3, 3}});

  std::mt19937_64 rng(33);
  auto g = oracle::random_graph(rng, 200);
  g.normalize();
  std::map<std::int64_t, std::int64_t> dl, dr;
  for (auto v : g.left) dl[v] = 0;
  for (auto v : g.right) dr[v] = 0;
  for (auto [a, b] : g.edges) {
    ++dl[a];
    ++dr[b];
  }
  std::map<std::int64_t, std::int64_t> hl, hr;
  for (auto [v, d] : dl) ++hl[d];
  for (auto [v, d] : dr) ++hr[d];
  p = degree_profile(g);
  CHECK(p.left == hl);
  CHECK(p.right == hr);
}
