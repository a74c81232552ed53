#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "deltalab/harness.hpp"

namespace deltalab {

double HypothesisWitnesses::max_constant() const {
  return std::max({tubes.C, squares.C, worst_shading.C, worst_dual.C});
}

std::vector<Cell2> tube_parameter_cells(const std::vector<Tube>& tubes, Scale scale) {
  const Rational n(scale.cells());
  std::vector<Cell2> out;
  out.reserve(tubes.size());
  for (const auto& t : tubes) out.push_back({(t.slope * n).floor(), (t.intercept * n).floor()});
  return out;
}

namespace {

KTWitness worst_of(const std::vector<std::vector<Cell2>>& sets, Scale scale, double s) {
  KTWitness best{SetKind::KatzTao, s, 0.0, std::nullopt};
  const auto n = static_cast<std::int64_t>(sets.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t k = 0; k < n; ++k) {
    const auto& cells = sets[static_cast<std::size_t>(k)];
    if (cells.empty()) continue;
    auto w = validate_cells(std::span<const Cell2>(cells), scale, SetKind::KatzTao, s);
#pragma omp critical(deltalab_worst_of)
    if (w.C > best.C) best = w;
  }
  return best;
}

}  // namespace

TheoremInstance make_instance(Scale scale, double s, std::vector<Tube> tubes, GridSet2D squares) {
  if (!(s > 0.0 && s <= 1.0)) throw std::invalid_argument("make_instance: s outside (0, 1]");
  if (squares.scale() != scale) throw ScaleMismatch("make_instance: squares at a different scale");
  for (const auto& t : tubes)
    if (t.scale != scale) throw ScaleMismatch("make_instance: tube at a different scale");
  TheoremInstance inst;
  inst.scale = scale;
  inst.s = s;
  inst.tubes = TubeFamily{scale, std::move(tubes), std::nullopt};
  inst.squares = std::move(squares);
  inst.shading = full_shading(inst.tubes, inst.squares);

  const auto params = tube_parameter_cells(inst.tubes.tubes, scale);
  inst.witnesses.tubes = validate_cells(std::span<const Cell2>(params), scale, SetKind::KatzTao, 2 * s);
  inst.witnesses.squares = validate_set(inst.squares, SetKind::KatzTao, 2 * s);

  const auto& cells = inst.squares.cells();
  std::vector<std::vector<Cell2>> shadings(inst.tubes.tubes.size());
  for (std::size_t t = 0; t < shadings.size(); ++t)
    for (auto p : inst.shading.entries[t]) shadings[t].push_back(cells[p]);
  inst.witnesses.worst_shading = worst_of(shadings, scale, s);

  std::vector<std::vector<Cell2>> duals(cells.size());
  for (std::size_t p = 0; p < duals.size(); ++p)
    for (auto t : inst.shading.dual_entries[p]) duals[p].push_back(params[t]);
  inst.witnesses.worst_dual = worst_of(duals, scale, s);
  return inst;
}

TheoremInstance degenerate_instance(Scale scale) {
  std::vector<Tube> tubes{Tube::make(scale, Rational(0), Rational::dyadic(1, scale.m + 1))};
  return make_instance(scale, 1.0, std::move(tubes), GridSet2D(scale, {Cell2{0, 0}}));
}

namespace {

std::pair<std::vector<Tube>, GridSet2D> trainlike(Scale scale, double s, std::mt19937_64& rng) {
  const int m = scale.m;
  const int ms = std::clamp(static_cast<int>(std::lround(m * s)), 0, m);
  const std::int64_t g = std::int64_t{1} << (m - ms);
  const std::int64_t ox = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(g));
  const std::int64_t oy = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(g));
  std::vector<Cell2> pts;
  for (std::int64_t i = ox; i < scale.cells(); i += g)
    for (std::int64_t j = oy; j < scale.cells(); j += g) pts.push_back({i, j});

  // One denominator keeps every line at about the same number of points.
  const int Q = 2 + static_cast<int>(rng() % 3);
  std::vector<std::pair<int, int>> dirs;
  std::bernoulli_distribution keep(0.75);
  for (int p = -Q; p <= Q; ++p)
    if (std::gcd(std::abs(p), Q) == 1 && keep(rng)) dirs.emplace_back(p, Q);
  if (dirs.empty()) dirs.emplace_back(1, Q);

  std::vector<Tube> tubes;
  for (auto [p, q] : dirs) {
    // Lines through cell centers: intercept = key delta / (2q).
    std::map<std::int64_t, int> lines;
    for (const auto& c : pts) ++lines[(2 * c.j + 1) * q - p * (2 * c.i + 1)];
    for (const auto& [key, count] : lines)
      if (count >= 2)
        tubes.push_back(Tube::make(scale, Rational(p, q), Rational(key, 2 * q) * scale.delta_exact(),
                                   static_cast<std::int64_t>(tubes.size())));
  }
  return {std::move(tubes), GridSet2D(scale, std::move(pts))};
}

// A random Frostman set built two levels coarser, each point jittered inside
// its block of four cells, so that points are at least three cells apart.
GridSet1D separated_frostman(Scale scale, double s, std::mt19937_64& rng) {
  const int coarse = std::max(1, scale.m - 2);
  const double sc = std::min(1.0, s * scale.m / coarse);
  const auto A = random_frostman_set(Scale::of(coarse), sc, rng());
  const std::int64_t block = std::int64_t{1} << (scale.m - coarse);
  std::vector<std::int64_t> cells;
  for (auto k : A.cells()) cells.push_back(k * block + static_cast<std::int64_t>(rng() % 2));
  return GridSet1D(scale, std::move(cells));
}

std::pair<std::vector<Tube>, GridSet2D> random_style(Scale scale, double s, std::mt19937_64& rng) {
  const auto A = separated_frostman(scale, s, rng);
  const auto B = separated_frostman(scale, s, rng);
  std::vector<Cell2> pts;
  for (auto i : A.cells())
    for (auto j : B.cells()) pts.push_back({i, j});

  const std::size_t target = std::max<std::size_t>(1, pts.size() / 4);
  std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
  std::set<std::pair<Rational, Rational>> seen;
  std::vector<Tube> tubes;
  for (std::size_t tries = 0; tubes.size() < target && tries < 50 * target; ++tries) {
    const Cell2 a = pts[pick(rng)];
    const Cell2 b = pts[pick(rng)];
    const std::int64_t dx = b.i - a.i, dy = b.j - a.j;
    if (dx == 0 || std::abs(dy) > std::abs(dx)) continue;
    const Rational slope(dy, dx);
    const Rational intercept = Rational((2 * a.j + 1) * dx - dy * (2 * a.i + 1), 2 * dx) * scale.delta_exact();
    if (!seen.emplace(slope, intercept).second) continue;
    tubes.push_back(Tube::make(scale, slope, intercept, static_cast<std::int64_t>(tubes.size())));
  }
  return {std::move(tubes), GridSet2D(scale, std::move(pts))};
}

}  // namespace

TheoremInstance generate_instance(Scale scale, double s, InstanceStyle style, std::uint64_t seed, double max_constant,
                                  int attempts) {
  if (!(s > 0.0 && s <= 1.0)) throw std::invalid_argument("generate_instance: s outside (0, 1]");
  if (attempts < 1) throw std::invalid_argument("generate_instance: attempts must be positive");
  std::mt19937_64 rng(seed);
  double best = std::numeric_limits<double>::infinity();
  for (int a = 0; a < attempts; ++a) {
    std::pair<std::vector<Tube>, GridSet2D> drawn;
    try {
      drawn = style == InstanceStyle::Trainlike ? trainlike(scale, s, rng) : random_style(scale, s, rng);
    } catch (const GeneratorError&) {
      continue;
    }
    if (drawn.first.empty()) continue;
    auto inst = make_instance(scale, s, std::move(drawn.first), std::move(drawn.second));
    inst.style = style;
    inst.seed = seed;
    const double c = inst.witnesses.max_constant();
    if (c <= max_constant) return inst;
    best = std::min(best, c);
  }
  throw ResampleExhausted("generate_instance: no draw met the KT constants (best draw reached " +
                          std::to_string(best) + ")");
}

}  // namespace deltalab
