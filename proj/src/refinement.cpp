#include "deltalab/refinement.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <unordered_map>

namespace deltalab {

namespace {

constexpr double kRel = 1e-12;

}  // namespace

TwoEndsCore two_ends_core(std::span<const std::int64_t> positions, Scale scale, double s, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw std::invalid_argument("two_ends: epsilon outside (0, 1/2)");
  if (!(epsilon * epsilon < s / 2.0)) throw std::invalid_argument("two_ends: need epsilon^2 < s/2");
  if (positions.empty()) throw std::invalid_argument("two_ends: empty shading");

  const double delta = scale.delta();
  std::vector<std::size_t> cur(positions.size());
  std::iota(cur.begin(), cur.end(), 0);
  std::stable_sort(cur.begin(), cur.end(), [&](auto a, auto b) { return positions[a] < positions[b]; });

  TwoEndsCore out;
  out.P = static_cast<std::int64_t>(positions.size());
  out.first = positions[cur.front()];
  out.last = positions[cur.back()];
  double L = 1.0;
  auto sorted_positions = [&] {
    std::vector<std::int64_t> v;
    v.reserve(cur.size());
    for (auto i : cur) v.push_back(positions[i]);
    return v;
  };
  auto radius_and_threshold = [&](double len, std::size_t n) {
    if (len <= delta * (1 + kRel)) return std::pair<double, double>(delta, static_cast<double>(n));
    const double ratio = delta / len;
    return std::pair<double, double>(len * std::pow(ratio, epsilon),
                                     std::pow(ratio, epsilon * epsilon * epsilon) * static_cast<double>(n));
  };

  while (L > delta * (1 + kRel)) {
    const auto [rho, thr] = radius_and_threshold(L, cur.size());
    const auto pos = sorted_positions();
    const auto [count, where] = fullest_ball(pos, scale, rho);
    if (static_cast<double>(count) <= thr) break;
    const std::int64_t K = ball_span(scale, rho);
    std::vector<std::size_t> next;
    for (auto i : cur)
      if (positions[i] >= where && positions[i] <= where + K) next.push_back(i);
    cur = std::move(next);
    L = std::max(rho, delta);
    out.first = where;
    out.last = std::min(where + K, out.last);  // windows stay nested
    ++out.steps;
  }

  const auto [rho, thr] = radius_and_threshold(L, cur.size());
  const auto pos = sorted_positions();
  out.worst_count = fullest_ball(pos, scale, rho).first;
  out.threshold = thr;
  out.inequality_ok = static_cast<double>(out.worst_count) <= thr;
  out.L = L;
  out.N = static_cast<std::int64_t>(cur.size());
  out.kept = std::move(cur);

  const double P = static_cast<double>(out.P);
  const double e2 = epsilon * epsilon;
  const double L_min = std::pow(std::pow(delta, s) * P, 1.0 / (s - e2));
  const double N_min = std::pow(L, e2) * P;
  out.lower_bounds_ok = L >= L_min * (1 - kRel) && static_cast<double>(out.N) >= N_min * (1 - kRel);
  return out;
}

TwoEndsOutcome two_ends_reduce_unchecked(const Tube& tube, std::span<const Cell2> shading, double s,
                                         double epsilon, bool* bounds_ok) {
  const bool by_column = tube.slope.abs() <= Rational(1);
  std::vector<std::int64_t> pos;
  pos.reserve(shading.size());
  for (const auto& c : shading) pos.push_back(by_column ? c.i : c.j);
  const auto core = two_ends_core(pos, tube.scale, s, epsilon);
  TwoEndsOutcome out;
  out.L = core.L;
  out.N = core.N;
  out.epsilon = epsilon;
  out.steps = core.steps;
  out.segment_lo = Rational::dyadic(core.first, tube.scale.m);
  out.segment_hi = out.segment_lo.to_double() + core.L;
  for (auto i : core.kept) out.kept.push_back(shading[i]);
  std::sort(out.kept.begin(), out.kept.end());
  if (!core.inequality_ok) throw InternalInvariant("two_ends_reduce: final segment fails the two-ends inequality");
  if (bounds_ok) *bounds_ok = core.lower_bounds_ok;
  return out;
}

TwoEndsOutcome two_ends_reduce(const Tube& tube, std::span<const Cell2> shading, double s, double epsilon) {
  bool ok = false;
  auto out = two_ends_reduce_unchecked(tube, shading, s, epsilon, &ok);
  if (!ok) throw GuaranteeViolation("two_ends_reduce: lower bounds on L or N fail", out.L, out.N);
  return out;
}

bool interval_kt(std::span<const std::int64_t> positions, double s) {
  std::vector<std::int64_t> v(positions.begin(), positions.end());
  std::sort(v.begin(), v.end());
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size(); ++j) {
      const double spread = static_cast<double>(std::max<std::int64_t>(v[j] - v[i], 1));
      if (static_cast<double>(j - i + 1) > std::pow(spread, s) * (1 + kRel)) return false;
    }
  return true;
}

void BipartiteGraph::normalize() {
  auto tidy = [](auto& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  tidy(left);
  tidy(right);
  tidy(edges);
  for (const auto& [a, b] : edges)
    if (!std::binary_search(left.begin(), left.end(), a) || !std::binary_search(right.begin(), right.end(), b))
      throw std::invalid_argument("BipartiteGraph: edge uses an unlisted vertex");
}

RefineReport bipartite_refine(const BipartiteGraph& input) {
  BipartiteGraph g = input;
  g.normalize();
  if (g.edges.empty()) throw std::invalid_argument("bipartite_refine: empty edge set");
  RefineReport rep;
  rep.E0 = static_cast<std::int64_t>(g.edges.size());
  rep.A0 = static_cast<std::int64_t>(g.left.size());
  rep.B0 = static_cast<std::int64_t>(g.right.size());

  const std::size_t nA = g.left.size();
  auto idx_left = [&](std::int64_t a) { return static_cast<std::size_t>(std::lower_bound(g.left.begin(), g.left.end(), a) - g.left.begin()); };
  auto idx_right = [&](std::int64_t b) { return nA + static_cast<std::size_t>(std::lower_bound(g.right.begin(), g.right.end(), b) - g.right.begin()); };

  const std::size_t nV = nA + g.right.size();
  std::vector<std::vector<std::size_t>> adj(nV);  // edge ids
  std::vector<std::pair<std::size_t, std::size_t>> ends(g.edges.size());
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    ends[e] = {idx_left(g.edges[e].first), idx_right(g.edges[e].second)};
    adj[ends[e].first].push_back(e);
    adj[ends[e].second].push_back(e);
  }
  std::vector<std::int64_t> deg(nV);
  for (std::size_t v = 0; v < nV; ++v) deg[v] = static_cast<std::int64_t>(adj[v].size());
  // deg >= E / (4 side) <=> 4 side deg >= E, compared in integers.
  auto below = [&](std::size_t v) {
    const std::int64_t side = v < nA ? rep.A0 : rep.B0;
    return 4 * side * deg[v] < rep.E0;
  };

  std::vector<char> gone(nV, 0), edge_gone(g.edges.size(), 0), queued(nV, 0);
  std::deque<std::size_t> queue;
  for (std::size_t v = 0; v < nV; ++v)
    if (below(v)) {
      queue.push_back(v);
      queued[v] = 1;
    }
  while (!queue.empty()) {
    const std::size_t v = queue.front();
    queue.pop_front();
    gone[v] = 1;
    for (auto e : adj[v]) {
      if (edge_gone[e]) continue;
      edge_gone[e] = 1;
      const std::size_t w = ends[e].first == v ? ends[e].second : ends[e].first;
      --deg[w];
      if (!queued[w] && below(w)) {
        queue.push_back(w);
        queued[w] = 1;
      }
    }
  }

  for (std::size_t v = 0; v < nA; ++v)
    if (!gone[v]) rep.graph.left.push_back(g.left[v]);
  for (std::size_t v = nA; v < nV; ++v)
    if (!gone[v]) rep.graph.right.push_back(g.right[v - nA]);
  for (std::size_t e = 0; e < g.edges.size(); ++e)
    if (!edge_gone[e]) rep.graph.edges.push_back(g.edges[e]);
  if (rep.graph.edges.empty()) throw InternalInvariant("bipartite_refine: peeling removed every edge");

  rep.degrees_ok = true;
  for (std::size_t v = 0; v < nV; ++v)
    if (!gone[v] && below(v)) rep.degrees_ok = false;
  rep.mass_ok = 2 * static_cast<std::int64_t>(rep.graph.edges.size()) >= rep.E0;
  if (!rep.degrees_ok || !rep.mass_ok) throw InternalInvariant("bipartite_refine: degree or mass guarantee failed");
  return rep;
}

DegreeProfile degree_profile(const BipartiteGraph& graph) {
  std::unordered_map<std::int64_t, std::int64_t> dl, dr;
  for (auto a : graph.left) dl[a] = 0;
  for (auto b : graph.right) dr[b] = 0;
  for (const auto& [a, b] : graph.edges) {
    ++dl[a];
    ++dr[b];
  }
  DegreeProfile p;
  for (const auto& [v, d] : dl) ++p.left[d];
  for (const auto& [v, d] : dr) ++p.right[d];
  return p;
}

}  // namespace deltalab
