#include <algorithm>
#include <cmath>
#include <limits>

#include "deltalab/harness.hpp"

namespace deltalab {

namespace {

double kt_of(const std::vector<Cell2>& cells, Scale scale, double s) {
  if (cells.empty()) return 0.0;
  return validate_cells(std::span<const Cell2>(cells), scale, SetKind::KatzTao, s).C;
}

std::vector<Cell2> shading_cells(const RescaledFamily& F, std::size_t t) {
  std::vector<Cell2> out;
  for (auto si : F.shading[t]) out.push_back(F.squares[si]);
  return out;
}

std::vector<Cell2> dual_cells(const RescaledFamily& F, const std::vector<Cell2>& params, std::size_t p) {
  std::vector<Cell2> out;
  for (auto ti : F.dual[p]) out.push_back(params[ti]);
  return out;
}

struct FamilyConstants {
  double K1 = 0, K1p = 0, K2 = 0, K2p = 0;
};

FamilyConstants measure(const RescaledFamily& F, double t, double sigma) {
  FamilyConstants k;
  const auto params = tube_parameter_cells(F.tubes, F.scale);
  k.K1 = kt_of(params, F.scale, t);
  k.K1p = kt_of(F.squares, F.scale, t);
  for (std::size_t i = 0; i < F.tubes.size(); ++i) k.K2 = std::max(k.K2, kt_of(shading_cells(F, i), F.scale, sigma));
  for (std::size_t p = 0; p < F.squares.size(); ++p)
    k.K2p = std::max(k.K2p, kt_of(dual_cells(F, params, p), F.scale, sigma));
  return k;
}

}  // namespace

RescaledKTReport check_rescaled_kt(const PipelineState& state, double bound) {
  RescaledKTReport rep;
  rep.bound = bound;
  rep.rows.resize(state.rescaled.size());
  const double c1 = std::max(1.0, state.claimed_K1()), c1p = std::max(1.0, state.claimed_K1p());
  const double c2 = std::max(1.0, state.claimed_K2()), c2p = std::max(1.0, state.claimed_K2p());
  const auto n = static_cast<std::int64_t>(state.rescaled.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t r = 0; r < n; ++r) {
    const auto& F = state.rescaled[static_cast<std::size_t>(r)];
    const auto k = measure(F, 2 * state.s, state.s);
    auto& row = rep.rows[static_cast<std::size_t>(r)];
    row.key = F.key;
    row.K1 = k.K1;
    row.K1p = k.K1p;
    row.K2 = k.K2;
    row.K2p = k.K2p;
    row.ratio = std::max({k.K1 / c1, k.K1p / c1p, k.K2 / c2, k.K2p / c2p});
  }
  for (const auto& row : rep.rows) rep.max_ratio = std::max(rep.max_ratio, row.ratio);
  rep.ok = !state.early_exit && !state.rescaled.empty() && rep.max_ratio <= bound;
  return rep;
}

RescaledTwoEndsReport check_rescaled_two_ends(const PipelineState& state) {
  RescaledTwoEndsReport rep;
  if (state.rescaled.empty()) return rep;
  const int mbar = state.rescaled_scale.m;
  // delta-bar^alpha = (delta / L)^epsilon
  rep.alpha = state.epsilon * static_cast<double>(state.scale.m + state.ell) / static_cast<double>(mbar);
  rep.epsilon2 = std::pow(state.epsilon, 4);
  if (!(rep.alpha < 1.0)) throw std::invalid_argument("check_rescaled_two_ends: alpha >= 1, no ball fits");
  const TwoEndsParams params{rep.alpha, rep.epsilon2};
  for (const auto& F : state.rescaled)
    for (std::size_t t = 0; t < F.tubes.size(); ++t) {
      if (F.shading[t].empty()) continue;
      const auto cells = shading_cells(F, t);
      ++rep.checked;
      if (is_two_ends(F.tubes[t], cells, params).ok) ++rep.passed;
    }
  return rep;
}

WangWuValue wang_wu_evaluator(const std::vector<std::int64_t>& shading_sizes, std::int64_t union_size, Scale scale,
                              double t, double K1, double K2, double N) {
  if (!(N > 0) || union_size <= 0) throw std::invalid_argument("wang_wu_evaluator: need N > 0 and a nonempty union");
  double sum = 0;
  for (auto k : shading_sizes) sum += static_cast<double>(k);
  WangWuValue w;
  w.lhs = std::sqrt(N) * std::pow(scale.delta(), t / 2) * sum;
  w.rhs_core = K1 * std::sqrt(K2) * static_cast<double>(union_size);
  w.ratio = w.rhs_core > 0 ? w.lhs / w.rhs_core : std::numeric_limits<double>::infinity();
  return w;
}

double product_bound(Scale scale, double s, double d, double K1, double K2, double K3, double card_T,
                     double card_Y) {
  return std::cbrt(K3) * std::pow(K1 * K2, 2.0 / 3.0) * std::cbrt(std::pow(scale.delta(), -s - d) * card_T) *
         std::pow(card_Y, 2.0 / 3.0);
}

double theorem_exponent(double s) { return s <= 0.5 ? 0.75 * s : s - s * s / 2; }
double nn_exponent(double s) { return s <= 0.5 ? 1.5 * s : 2 * s - s * s; }

ReplayReport replay_final_steps(const PipelineState& state, double slack) {
  ReplayReport rep;
  const double s = state.s;
  const double delta = state.scale.delta();
  const double sigma = std::min(2 * s, 2 - 2 * s);
  rep.wang_wu_ok = !state.rescaled.empty();
  for (const auto& F : state.rescaled) {
    const auto k = measure(F, 2 * s, sigma);
    const double allowed = std::pow(F.scale.delta(), -slack);
    {
      std::vector<std::int64_t> sizes;
      std::int64_t N = std::numeric_limits<std::int64_t>::max(), uni = 0;
      for (const auto& sh : F.shading)
        if (!sh.empty()) {
          sizes.push_back(static_cast<std::int64_t>(sh.size()));
          N = std::min<std::int64_t>(N, static_cast<std::int64_t>(sh.size()));
        }
      for (const auto& du : F.dual) uni += du.empty() ? 0 : 1;
      const auto w = wang_wu_evaluator(sizes, uni, F.scale, 2 * s, k.K1, k.K2, static_cast<double>(N));
      rep.step14_ratios.push_back(w.ratio);
      if (w.ratio > allowed) rep.wang_wu_ok = false;
    }
    {
      std::vector<std::int64_t> sizes;
      std::int64_t N = std::numeric_limits<std::int64_t>::max(), uni = 0;
      for (const auto& du : F.dual)
        if (!du.empty()) {
          sizes.push_back(static_cast<std::int64_t>(du.size()));
          N = std::min<std::int64_t>(N, static_cast<std::int64_t>(du.size()));
        }
      for (const auto& sh : F.shading) uni += sh.empty() ? 0 : 1;
      const auto w = wang_wu_evaluator(sizes, uni, F.scale, 2 * s, k.K1p, k.K2p, static_cast<double>(N));
      rep.step15_ratios.push_back(w.ratio);
      if (w.ratio > allowed) rep.wang_wu_ok = false;
    }
  }
  const double T1 = static_cast<double>(state.card_T1), P1 = static_cast<double>(state.card_P1);
  if (T1 > 0 && P1 > 0) {
    rep.tube_lhs = std::pow(state.N, 1.5) * T1 / P1;
    rep.tube_rhs = std::pow(delta, -s) * std::pow(state.Lp, s / 2) / std::pow(state.L, s);
    rep.square_lhs = std::pow(state.Np, 1.5) * P1 / T1;
    rep.square_rhs = std::pow(delta, -s) * std::pow(state.L, s / 2) / std::pow(state.Lp, s);
  }
  rep.NNp = state.N * state.Np;
  rep.NNp_bound = std::pow(delta, -nn_exponent(s) - slack);
  return rep;
}

FinalBoundReport final_bound_report(const TheoremInstance& instance, const PipelineState* state, double slack) {
  FinalBoundReport r;
  const double s = instance.s;
  const double delta = instance.scale.delta();
  r.I = instance.incidences();
  r.card_T = static_cast<std::int64_t>(instance.tubes.tubes.size());
  r.card_P = static_cast<std::int64_t>(instance.squares.size());
  r.slack = slack;
  const double TP = static_cast<double>(r.card_T) * static_cast<double>(r.card_P);
  r.exponent = theorem_exponent(s);
  r.bound = std::pow(delta, -r.exponent) * std::sqrt(TP);
  r.ratio = r.bound > 0 ? static_cast<double>(r.I) / r.bound : 0.0;
  r.within = static_cast<double>(r.I) <= std::pow(delta, -slack) * r.bound;

  r.remark_exponent = s <= 0.5 ? 0.8 * s : 2 * s / (2 + s);
  const double pre = std::pow(delta, -r.remark_exponent);
  const double T = static_cast<double>(r.card_T), P = static_cast<double>(r.card_P);
  r.remark_bounds[0] = pre * std::pow(P, 0.4) * std::pow(T, 0.6);
  r.remark_bounds[1] = pre * std::pow(P, 0.6) * std::pow(T, 0.4);
  r.remark_bounds[2] = pre * std::sqrt(TP);
  r.stronger_than_remark = r.bound <= r.remark_bounds[2];

  if (state != nullptr && state->steps_completed >= 2) {
    r.NNp = state->N * state->Np;
    r.NNp_bound = std::pow(delta, -nn_exponent(s) - slack);
    r.NNp_within = *r.NNp <= *r.NNp_bound;
  }
  return r;
}

std::tuple<std::int64_t, double, double> box_count_estimates(const GridSet2D& squares, Cell2 corner, std::int64_t w,
                                                             std::int64_t h, double s, double C) {
  if (w < 1 || h < 1) throw std::invalid_argument("box_count_estimates: empty box");
  std::int64_t exact = 0;
  for (const auto& c : squares.cells())
    if (c.i >= corner.i && c.i < corner.i + w && c.j >= corner.j && c.j < corner.j + h) ++exact;
  // A KT constant measured at dyadic radii bounds balls of radius up to the
  // next power of two; a window of radius R covers a box of side R.
  auto ball = [&](std::int64_t side) {
    std::int64_t R = 1;
    while (R < side) R *= 2;
    return C * std::pow(static_cast<double>(R), 2 * s);
  };
  const std::int64_t lo = std::min(w, h), hi = std::max(w, h);
  const double single = ball(hi);
  const double tiled = static_cast<double>((hi + lo - 1) / lo) * ball(lo);
  return {exact, single, tiled};
}

}  // namespace deltalab
