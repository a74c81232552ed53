#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "deltalab/harness.hpp"

namespace deltalab {

double PipelineState::claimed_K1() const {
  return std::min(1.0 / (M * std::pow(L, 2 * s)), 1.0 / (M * L));
}
double PipelineState::claimed_K1p() const {
  return std::min(1.0 / (Mp * std::pow(Lp, 2 * s)), 1.0 / (Mp * Lp));
}
double PipelineState::claimed_K2() const { return 1.0 / (Mp * std::pow(Lp, s)); }
double PipelineState::claimed_K2p() const { return 1.0 / (M * std::pow(L, s)); }

namespace {

using Key2 = std::pair<int, int>;

// Heaviest class of a keyed mass table; ties go to the smaller key.
template <class K>
K heaviest(const std::map<K, double>& mass) {
  auto best = mass.begin();
  for (auto it = mass.begin(); it != mass.end(); ++it)
    if (it->second > best->second) best = it;
  return best->first;
}

struct Segment {
  std::int64_t c0 = 0, c1 = 0;  // columns
  double L = 1;
  std::int64_t N = 0;
  std::vector<std::uint32_t> squares;  // Y(tau), sorted square ids
};

struct Arc {
  std::int64_t a0 = 0, a1 = 0;  // slope cells
  std::int64_t e0 = 0, e1 = 0;  // enlarged
  double L = 1;
  std::int64_t N = 0;
};

struct Placement {
  RectKey R;
  Rational xQ, sigma;
  std::int64_t base = 0;  // bottom of the strip, in cells of sheared height
};

// The cell gamma of R: axial length delta / L', height delta.
struct Gamma {
  RectKey R;
  std::int64_t a = 0, b = 0;
  friend auto operator<=>(const Gamma&, const Gamma&) = default;
};

// Rectangles are at least 2^kMinStripExp cells tall so a tube of width 2 delta
// and its drift inside one direction class fit in a strip.
constexpr int kMinStripExp = 4;

}  // namespace

PipelineState run_pipeline(const TheoremInstance& inst, double epsilon, double slack) {
  PipelineState st;
  st.scale = inst.scale;
  st.s = inst.s;
  st.epsilon = epsilon;
  st.slack = slack;
  const Scale sc = inst.scale;
  const int m = sc.m;
  const double delta = sc.delta();
  const double s = inst.s;
  const Rational d = sc.delta_exact();
  const Rational n_cells(sc.cells());
  const auto& tubes = inst.tubes.tubes;
  const auto& cells = inst.squares.cells();
  const std::size_t nT = tubes.size(), nP = cells.size();
  for (const auto& t : tubes)
    if (Rational(1) < t.slope.abs()) throw std::invalid_argument("run_pipeline: tubes must satisfy |slope| <= 1");

  std::int64_t prev_edges = inst.shading.size();
  // Contractions pass the multiplicity of a contracted edge as `weight`.
  auto record = [&](int step, const std::string& name, std::int64_t left, std::int64_t right, std::int64_t edges,
                    std::map<std::string, double> values = {}, double weight = 1.0) {
    TraceRecord r{step, name, left, right, edges,
                  prev_edges == 0 ? 0.0 : weight * static_cast<double>(edges) / static_cast<double>(prev_edges),
                  std::move(values)};
    st.trace.push_back(std::move(r));
    prev_edges = edges;
    st.steps_completed = step;
  };
  auto stop = [&](const std::string& why) {
    st.early_exit = true;
    st.exit_reason = why;
    return st;
  };
  record(0, "input", static_cast<std::int64_t>(nT), static_cast<std::int64_t>(nP), inst.shading.size());
  if (inst.shading.size() == 0) return stop("no incidences");

  std::vector<std::int64_t> slope_cell(nT);
  for (std::size_t t = 0; t < nT; ++t) slope_cell[t] = (tubes[t].slope * n_cells).floor();

  // Step 1: degree class, two-ends segment per tube, then (L, N) class.
  std::vector<std::uint32_t> T1;
  std::vector<Segment> seg(nT);
  {
    std::vector<double> keys;
    std::vector<std::uint32_t> ids;
    for (std::size_t t = 0; t < nT; ++t)
      if (!inst.shading.entries[t].empty()) {
        keys.push_back(static_cast<double>(inst.shading.entries[t].size()));
        ids.push_back(static_cast<std::uint32_t>(t));
      }
    const auto ph = dyadic_pigeonhole(std::span<const double>(keys));
    st.P = ph.bucket_value;
    std::vector<std::uint32_t> cand;
    for (auto i : ph.indices) cand.push_back(ids[i]);

    std::int64_t bound_failures = 0;
    bool broken = false;
    const auto nc = static_cast<std::int64_t>(cand.size());
#pragma omp parallel for schedule(dynamic, 8) reduction(+ : bound_failures) reduction(|| : broken)
    for (std::int64_t k = 0; k < nc; ++k) {
      const auto t = cand[static_cast<std::size_t>(k)];
      const auto& ys = inst.shading.entries[t];
      std::vector<std::int64_t> pos;
      pos.reserve(ys.size());
      for (auto p : ys) pos.push_back(cells[p].i);
      const auto core = two_ends_core(pos, sc, s, epsilon);
      Segment& g = seg[t];
      g.c0 = core.steps == 0 ? 0 : core.first;
      g.c1 = core.steps == 0 ? sc.cells() - 1 : core.last;
      g.L = core.L;
      g.N = core.N;
      for (auto i : core.kept) g.squares.push_back(ys[i]);
      std::sort(g.squares.begin(), g.squares.end());
      if (!core.lower_bounds_ok) ++bound_failures;
      if (!core.inequality_ok) broken = true;
    }
    if (broken) throw StepClaimViolation(1, "a two-ends segment fails the two-ends inequality");
    st.two_ends_bound_failures += bound_failures;

    std::map<Key2, double> mass;
    for (auto t : cand) mass[{dyadic_exponent(seg[t].L), dyadic_exponent(static_cast<double>(seg[t].N))}] += seg[t].N;
    const auto [ell, nexp] = heaviest(mass);
    for (auto t : cand)
      if (dyadic_exponent(seg[t].L) == ell && dyadic_exponent(static_cast<double>(seg[t].N)) == nexp) T1.push_back(t);
    // Upper end of the class: every segment fits in a column.
    st.ell = std::min(std::max(ell + 1, kMinStripExp - m), 0);
    st.L = std::ldexp(1.0, st.ell);
    st.N = std::ldexp(1.0, nexp);
    st.card_T1 = static_cast<std::int64_t>(T1.size());
  }
  std::vector<std::vector<std::uint32_t>> g1_dual(nP);
  std::int64_t E1 = 0;
  for (auto t : T1)
    for (auto p : seg[t].squares) {
      g1_dual[p].push_back(t);
      ++E1;
    }
  const double slack_factor = std::pow(delta, slack);
  record(1, "two-ends segments", st.card_T1, static_cast<std::int64_t>(nP), E1,
         {{"P", st.P},
          {"N", st.N},
          {"L", st.L},
          {"claim_N_vs_P", st.N >= slack_factor * st.P / 2 ? 1.0 : 0.0},
          {"claim_L_lower", st.L >= slack_factor * delta * std::pow(st.N, 1.0 / s) / 2 ? 1.0 : 0.0}});

  // Step 2: the same on the dual side, arcs of slopes at each square.
  std::vector<Arc> arc(nP);
  std::vector<std::uint32_t> P1;
  {
    std::vector<double> keys;
    std::vector<std::uint32_t> ids;
    for (std::size_t p = 0; p < nP; ++p)
      if (!g1_dual[p].empty()) {
        keys.push_back(static_cast<double>(g1_dual[p].size()));
        ids.push_back(static_cast<std::uint32_t>(p));
      }
    const auto ph = dyadic_pigeonhole(std::span<const double>(keys));
    st.Pp = ph.bucket_value;
    std::vector<std::uint32_t> cand;
    for (auto i : ph.indices) cand.push_back(ids[i]);

    std::int64_t bound_failures = 0;
    bool broken = false;
    const auto nc = static_cast<std::int64_t>(cand.size());
#pragma omp parallel for schedule(dynamic, 8) reduction(+ : bound_failures) reduction(|| : broken)
    for (std::int64_t k = 0; k < nc; ++k) {
      const auto p = cand[static_cast<std::size_t>(k)];
      std::vector<std::int64_t> pos;
      for (auto t : g1_dual[p]) pos.push_back(slope_cell[t]);
      const auto core = two_ends_core(pos, sc, s, epsilon);
      Arc& a = arc[p];
      a.a0 = core.steps == 0 ? -sc.cells() : core.first;
      a.a1 = core.steps == 0 ? sc.cells() : core.last;
      const std::int64_t ext = (a.a1 - a.a0 + 2) / 2;
      a.e0 = a.a0 - ext;
      a.e1 = a.a1 + ext;
      a.L = core.L;
      a.N = core.N;
      if (!core.lower_bounds_ok) ++bound_failures;
      if (!core.inequality_ok) broken = true;
    }
    if (broken) throw StepClaimViolation(2, "a two-ends arc fails the two-ends inequality");
    st.two_ends_bound_failures += bound_failures;

    std::map<Key2, double> mass;
    for (auto p : cand) mass[{dyadic_exponent(arc[p].L), dyadic_exponent(static_cast<double>(arc[p].N))}] += arc[p].N;
    const auto [ellp, nexp] = heaviest(mass);
    for (auto p : cand)
      if (dyadic_exponent(arc[p].L) == ellp && dyadic_exponent(static_cast<double>(arc[p].N)) == nexp) P1.push_back(p);
    st.ellp = std::min(std::max(ellp, kMinStripExp - m - st.ell), 0);
    st.Lp = std::ldexp(1.0, st.ellp);
    st.Np = std::ldexp(1.0, nexp);
    st.card_P1 = static_cast<std::int64_t>(P1.size());
  }
  std::vector<char> inP1(nP, 0);
  for (auto p : P1) inP1[p] = 1;
  std::vector<std::vector<std::uint32_t>> g2(nT), g2_dual(nP);
  std::int64_t E2 = 0;
  for (auto p : P1)
    for (auto t : g1_dual[p])
      if (slope_cell[t] >= arc[p].e0 && slope_cell[t] <= arc[p].e1) {
        g2[t].push_back(p);
        g2_dual[p].push_back(t);
        ++E2;
      }
  for (auto& v : g2) std::sort(v.begin(), v.end());
  record(2, "two-ends arcs", st.card_T1, st.card_P1, E2, {{"Pp", st.Pp}, {"Np", st.Np}, {"Lp", st.Lp}});

  const double cutoff = std::pow(delta, -2.0 * s / 3.0 + slack);
  if (st.N < cutoff || st.Np < cutoff) return stop("N or N' below delta^(-2s/3 + slack): the incidence bound holds directly");
  if (E2 == 0) return stop("no edges after Step 2");

  // Step 3: cluster tubes sharing a segment.
  using ClusterKey = std::tuple<std::int64_t, std::int64_t, std::int64_t, std::vector<std::uint32_t>>;
  std::vector<std::vector<std::uint32_t>> clusters;
  {
    std::map<ClusterKey, std::vector<std::uint32_t>> by_key;
    for (auto t : T1) by_key[{slope_cell[t], seg[t].c0, seg[t].c1, seg[t].squares}].push_back(t);
    std::vector<std::vector<std::uint32_t>> all;
    std::vector<double> keys, weights;
    for (auto& [k, members] : by_key) {
      double w = 0;
      for (auto t : members) w += static_cast<double>(g2[t].size());
      keys.push_back(static_cast<double>(members.size()));
      weights.push_back(w);
      all.push_back(std::move(members));
    }
    const auto ph = dyadic_pigeonhole(std::span<const double>(keys), std::span<const double>(weights));
    if (ph.mass == 0) return stop("no edges after Step 3");
    st.M = ph.bucket_value;
    for (auto i : ph.indices) clusters.push_back(std::move(all[i]));
  }
  std::size_t nC = clusters.size();
  std::int64_t E3 = 0;
  for (const auto& c : clusters)
    for (auto t : c) E3 += static_cast<std::int64_t>(g2[t].size());
  record(3, "segment clusters", static_cast<std::int64_t>(nC), st.card_P1, E3, {{"M", st.M}});

  // Step 4: tubes of one cluster see the same squares.
  std::vector<std::vector<std::uint32_t>> g4(nC);
  std::int64_t E4 = 0;
  for (std::size_t c = 0; c < nC; ++c) {
    const auto& rep = g2[clusters[c].front()];
    for (auto t : clusters[c])
      if (g2[t] != rep) throw StepClaimViolation(4, "tubes of one cluster have different neighbourhoods");
    g4[c] = rep;
    E4 += static_cast<std::int64_t>(rep.size());
  }
  record(4, "cluster graph", static_cast<std::int64_t>(nC), st.card_P1, E4,
         {{"E3_over_M", static_cast<double>(E3) / st.M}}, st.M);

  // Steps 5-6: columns Q of width L, direction classes of width L', and
  // sheared strips R of height L L'. Each (column, class) takes the strip
  // offset that keeps the most edges; segments that do not fit inside their
  // strip are dropped.
  const Rational Lr = Rational::dyadic(1, -st.ell);
  const Rational Lpr = Rational::dyadic(1, -st.ellp);
  const Rational LLp = Lr * Lpr;
  if (m + st.ell + st.ellp < 1) throw StepClaimViolation(11, "rescaled scale is not below 1");
  const std::int64_t H = std::int64_t{1} << (m + st.ell + st.ellp);  // strip height in cells
  auto fdiv = [](std::int64_t a, std::int64_t b) { return a >= 0 ? a / b : -((-a + b - 1) / b); };
  auto frame = [&](const Rational& x, const Rational& direction) {
    Placement pl;
    const std::int64_t qx = (x / Lr).floor(), k = (direction / Lpr).floor();
    pl.xQ = Rational(qx) * Lr;
    pl.sigma = Rational(2 * k + 1, 2) * Lpr;
    pl.R = {qx, k, 0};
    return pl;
  };
  auto sheared = [&](const Placement& pl, const Rational& x, const Rational& y) {
    return (y - pl.sigma * (x - pl.xQ)) * n_cells;
  };
  struct Span {
    std::size_t c;
    std::int64_t lo, hi;
    double weight;
  };
  std::vector<Placement> cplace(nC);
  std::map<std::pair<std::int64_t, std::int64_t>, std::vector<Span>> frames;
  for (std::size_t c = 0; c < nC; ++c) {
    const auto t = clusters[c].front();
    const Tube& T = tubes[t];
    const Rational xm = Rational::dyadic(seg[t].c0 + seg[t].c1 + 1, m + 1);
    cplace[c] = frame(xm, T.slope);
    const auto& pl = cplace[c];
    const Rational x0 = Rational(seg[t].c0) * d, x1 = Rational(seg[t].c1 + 1) * d;
    if (x0 < pl.xQ || x1 > pl.xQ + Lr) continue;
    const Rational v0 = sheared(pl, x0, T.slope * x0 + T.intercept);
    const Rational v1 = sheared(pl, x1, T.slope * x1 + T.intercept);
    const Rational w = T.width * n_cells;
    frames[{std::get<0>(pl.R), std::get<1>(pl.R)}].push_back(
        {c, (min(v0, v1) - w).floor(), (max(v0, v1) + w).ceil(), static_cast<double>(g4[c].size())});
  }
  std::map<std::pair<std::int64_t, std::int64_t>, std::int64_t> offset;
  std::vector<std::vector<std::uint32_t>> kept_clusters, kept_g4;
  std::vector<Placement> kept_place;
  std::int64_t E_fit = 0;
  for (const auto& [fk, spans] : frames) {
    std::int64_t best_o = 0;
    double best_mass = -1;
    for (std::int64_t o = 0; o < H; ++o) {
      double mass = 0;
      for (const auto& sp : spans)
        if (sp.hi - o <= (fdiv(sp.lo - o, H) + 1) * H) mass += sp.weight;
      if (mass > best_mass) {
        best_mass = mass;
        best_o = o;
      }
    }
    offset[fk] = best_o;
    for (const auto& sp : spans) {
      const std::int64_t h = fdiv(sp.lo - best_o, H);
      if (sp.hi - best_o > (h + 1) * H) continue;
      Placement pl = cplace[sp.c];
      pl.R = {fk.first, fk.second, h};
      pl.base = best_o + h * H;
      kept_place.push_back(pl);
      kept_clusters.push_back(std::move(clusters[sp.c]));
      kept_g4.push_back(std::move(g4[sp.c]));
      E_fit += static_cast<std::int64_t>(kept_g4.back().size());
    }
  }
  st.rect_total = static_cast<std::int64_t>(nC);
  st.rect_fit = static_cast<std::int64_t>(kept_clusters.size());
  clusters = std::move(kept_clusters);
  g4 = std::move(kept_g4);
  cplace = std::move(kept_place);
  nC = clusters.size();
  std::map<RectKey, std::vector<std::uint32_t>> rect_tubes;
  for (std::size_t c = 0; c < nC; ++c) rect_tubes[cplace[c].R].push_back(static_cast<std::uint32_t>(c));
  {
    std::size_t total = 0;
    for (const auto& [R, v] : rect_tubes) total += v.size();
    if (total != nC) throw StepClaimViolation(6, "segments are not partitioned by the rectangles");
  }
  if (nC == 0) return stop("no segment fits inside a rectangle");
  record(6, "rectangles", static_cast<std::int64_t>(nC), st.card_P1, E_fit,
         {{"rectangles", static_cast<double>(rect_tubes.size())},
          {"segments_dropped", static_cast<double>(st.rect_total - st.rect_fit)}});

  // Step 7: each square goes to the strip of its column and arc direction.
  std::vector<Gamma> gam(nP);
  std::vector<Placement> pplace(nP);
  {
    std::size_t total = 0;
    std::map<RectKey, std::size_t> per_rect;
    for (auto p : P1) {
      const Rational xc = Rational::dyadic(2 * cells[p].i + 1, m + 1);
      const Rational yc = Rational::dyadic(2 * cells[p].j + 1, m + 1);
      Placement pl = frame(xc, Rational::dyadic(arc[p].a0 + arc[p].a1 + 1, m + 1));
      const std::pair<std::int64_t, std::int64_t> fk{std::get<0>(pl.R), std::get<1>(pl.R)};
      const auto it = offset.find(fk);
      const std::int64_t o = it == offset.end() ? 0 : it->second;
      const std::int64_t v = sheared(pl, xc, yc).floor();
      const std::int64_t h = fdiv(v - o, H);
      pl.R = {fk.first, fk.second, h};
      pl.base = o + h * H;
      pplace[p] = pl;
      gam[p] = {pl.R, ((xc - pl.xQ) * Lpr * n_cells).floor(), v - pl.base};
      ++per_rect[pl.R];
    }
    for (const auto& [R, k] : per_rect) total += k;
    if (total != P1.size()) throw StepClaimViolation(7, "squares are not partitioned by the rectangles");
  }
  std::vector<std::vector<std::uint32_t>> g4p(nC), g4p_dual(nP);
  std::int64_t E4p = 0;
  for (std::size_t c = 0; c < nC; ++c)
    for (auto p : g4[c])
      if (pplace[p].R == cplace[c].R) {
        g4p[c].push_back(p);
        g4p_dual[p].push_back(static_cast<std::uint32_t>(c));
        ++E4p;
      }
  record(7, "square assignment", static_cast<std::int64_t>(nC), st.card_P1, E4p);

  // Step 8: cells gamma with comparable square counts.
  std::map<Gamma, std::vector<std::uint32_t>> gamma_squares;
  for (auto p : P1) gamma_squares[gam[p]].push_back(p);
  std::vector<Gamma> Gam;
  std::vector<std::vector<std::uint32_t>> gam_members;
  {
    std::vector<Gamma> all;
    std::vector<std::vector<std::uint32_t>> members;
    std::vector<double> keys, weights;
    for (auto& [g, ps] : gamma_squares) {
      double w = 0;
      for (auto p : ps) w += static_cast<double>(g4p_dual[p].size());
      all.push_back(g);
      keys.push_back(static_cast<double>(ps.size()));
      weights.push_back(w);
      members.push_back(ps);
    }
    const auto ph = dyadic_pigeonhole(std::span<const double>(keys), std::span<const double>(weights));
    if (ph.mass == 0) return stop("no edges after Step 7");
    st.Mp = ph.bucket_value;
    for (auto i : ph.indices) {
      Gam.push_back(all[i]);
      gam_members.push_back(std::move(members[i]));
    }
  }
  std::int64_t E5 = 0, P5 = 0;
  for (const auto& ps : gam_members)
    for (auto p : ps) {
      E5 += static_cast<std::int64_t>(g4p_dual[p].size());
      ++P5;
    }
  record(8, "square cells", static_cast<std::int64_t>(nC), P5, E5,
         {{"Mp", st.Mp}, {"cells", static_cast<double>(Gam.size())}});

  // Step 9: contract each gamma; its neighbours are the segments containing it.
  std::vector<std::int64_t> cluster_of(nT, -1);
  for (std::size_t c = 0; c < nC; ++c)
    for (auto t : clusters[c]) cluster_of[t] = static_cast<std::int64_t>(c);
  auto gamma_inside = [&](const Gamma& g, std::size_t c) {
    const auto t = clusters[c].front();
    const Tube& T = tubes[t];
    const auto& pl = cplace[c];
    const Rational x0 = pl.xQ + Rational(g.a) * d / Lpr;
    const Rational x1 = x0 + d / Lpr;
    if (x0 < Rational(seg[t].c0) * d || x1 > Rational(seg[t].c1 + 1) * d) return false;
    const Rational base = Rational(pl.base + g.b) * d;
    for (const Rational& x : {x0, x1})
      for (const Rational& v : {base, base + d}) {
        const Rational y = v + pl.sigma * (x - pl.xQ);
        if ((y - T.slope * x - T.intercept).abs() > T.width) return false;
      }
    return true;
  };
  std::vector<std::vector<std::uint32_t>> inside(Gam.size());
  std::int64_t E6 = 0;
  for (std::size_t k = 0; k < Gam.size(); ++k) {
    const Gamma& g = Gam[k];
    // A segment containing gamma contains the centre of each of its squares,
    // so its tubes already meet that square.
    std::set<std::uint32_t> cand;
    for (auto t : inst.shading.dual_entries[gam_members[k].front()])
      if (cluster_of[t] >= 0 && cplace[static_cast<std::size_t>(cluster_of[t])].R == g.R)
        cand.insert(static_cast<std::uint32_t>(cluster_of[t]));
    for (auto c : cand)
      if (gamma_inside(g, c)) inside[k].push_back(c);
    for (auto p : gam_members[k]) {
      const auto& nb = g4p_dual[p];
      for (auto c : inside[k])
        if (std::find(nb.begin(), nb.end(), c) == nb.end())
          throw StepClaimViolation(9, "a segment containing a cell is not adjacent to one of its squares");
      st.step9_dropped += static_cast<std::int64_t>(nb.size() - inside[k].size());
    }
    E6 += static_cast<std::int64_t>(inside[k].size());
  }
  record(9, "contracted cells", static_cast<std::int64_t>(nC), static_cast<std::int64_t>(Gam.size()), E6,
         {{"dropped_edges", static_cast<double>(st.step9_dropped)},
          {"E6_times_Mp", static_cast<double>(E6) * st.Mp}},
         st.Mp);
  if (E6 == 0) return stop("no segment contains a whole cell");

  // Step 10: peel low degrees.
  BipartiteGraph g6;
  for (std::size_t c = 0; c < nC; ++c) g6.left.push_back(static_cast<std::int64_t>(c));
  for (std::size_t k = 0; k < Gam.size(); ++k) {
    g6.right.push_back(static_cast<std::int64_t>(k));
    for (auto c : inside[k]) g6.edges.emplace_back(c, static_cast<std::int64_t>(k));
  }
  // Vertices without edges carry no mass; drop them before peeling.
  {
    std::set<std::int64_t> l, r;
    for (const auto& [a, b] : g6.edges) {
      l.insert(a);
      r.insert(b);
    }
    g6.left.assign(l.begin(), l.end());
    g6.right.assign(r.begin(), r.end());
  }
  const auto refined = bipartite_refine(g6);
  const auto& g7 = refined.graph;
  record(10, "peeled graph", static_cast<std::int64_t>(g7.left.size()), static_cast<std::int64_t>(g7.right.size()),
         static_cast<std::int64_t>(g7.edges.size()),
         {{"degrees_ok", refined.degrees_ok ? 1.0 : 0.0}, {"mass_ok", refined.mass_ok ? 1.0 : 0.0}});

  // Step 11: rescale each rectangle to the unit square at delta / (L L').
  const int mbar = m + st.ell + st.ellp;
  const Scale sbar = Scale::of(mbar);
  st.rescaled_scale = sbar;
  std::map<RectKey, RescaledFamily> fam;
  std::map<std::int64_t, std::uint32_t> tube_slot, cell_slot;
  for (auto c : g7.left) {
    const auto t = clusters[static_cast<std::size_t>(c)].front();
    const Tube& T = tubes[t];
    const auto& pl = cplace[static_cast<std::size_t>(c)];
    auto& F = fam[pl.R];
    F.key = pl.R;
    F.scale = sbar;
    const Rational slope = (T.slope - pl.sigma) / Lpr;
    const Rational intercept = (T.slope * pl.xQ + T.intercept - Rational(pl.base) * d) / LLp;
    const Rational lo = (Rational(seg[t].c0) * d - pl.xQ) / Lr;
    const Rational hi = (Rational(seg[t].c1 + 1) * d - pl.xQ) / Lr;
    tube_slot[c] = static_cast<std::uint32_t>(F.tubes.size());
    F.tubes.push_back(Tube::make(sbar, slope, intercept, c).with_extent(lo, hi));
  }
  for (auto k : g7.right) {
    const Gamma& g = Gam[static_cast<std::size_t>(k)];
    auto& F = fam[g.R];
    F.key = g.R;
    F.scale = sbar;
    if (g.a < 0 || g.b < 0 || g.a >= sbar.cells() || g.b >= sbar.cells())
      throw StepClaimViolation(11, "a rescaled cell falls outside the unit square");
    cell_slot[k] = static_cast<std::uint32_t>(F.squares.size());
    F.squares.push_back({g.a, g.b});
  }
  for (auto& [R, F] : fam) {
    F.shading.assign(F.tubes.size(), {});
    F.dual.assign(F.squares.size(), {});
  }
  for (const auto& [c, k] : g7.edges) {
    auto& F = fam[cplace[static_cast<std::size_t>(c)].R];
    const auto ti = tube_slot.at(c), si = cell_slot.at(k);
    F.shading[ti].push_back(si);
    F.dual[si].push_back(ti);
  }
  // Containment is affine invariant; check it on every pair the rescaled
  // tube can reach.
  std::int64_t mismatches = 0;
  for (auto& [R, F] : fam) {
    std::map<std::int64_t, std::vector<std::pair<std::int64_t, std::uint32_t>>> by_column;
    for (std::uint32_t si = 0; si < F.squares.size(); ++si) by_column[F.squares[si].i].push_back({F.squares[si].j, si});
    for (std::uint32_t ti = 0; ti < F.tubes.size(); ++ti) {
      std::vector<std::uint32_t> got;
      for (const auto& [col, list] : by_column) {
        const auto [lo, hi] = column_rows(F.tubes[ti], col);
        for (const auto& [row, si] : list)
          if (row >= lo && row <= hi && square_inside_tube(F.squares[si], sbar, F.tubes[ti])) got.push_back(si);
      }
      std::sort(got.begin(), got.end());
      auto want = F.shading[ti];
      std::sort(want.begin(), want.end());
      if (got != want) ++mismatches;
    }
  }
  if (mismatches > 0) throw StepClaimViolation(11, "rescaling changed the incidence relation");
  for (auto& [R, F] : fam) st.rescaled.push_back(std::move(F));
  record(11, "rescaled rectangles", static_cast<std::int64_t>(g7.left.size()),
         static_cast<std::int64_t>(g7.right.size()), static_cast<std::int64_t>(g7.edges.size()),
         {{"mbar", static_cast<double>(mbar)}, {"rectangles", static_cast<double>(st.rescaled.size())}});
  return st;
}

}  // namespace deltalab
