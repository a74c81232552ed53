#include "deltalab/json_io.hpp"

#include <fstream>
#include <sstream>

namespace deltalab {

namespace {

template <typename T>
T field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(std::string("missing field \"") + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw FormatError(std::string("field \"") + key + "\": " + e.what());
  }
}

template <typename T>
T field_or(const Json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return field<T>(j, key);
}

Scale scale_field(const Json& j) {
  const int m = field<int>(j, "m");
  if (m < 0 || m > 30) throw FormatError("m must lie in [0, 30]");
  return Scale::of(m);
}

template <typename Fn>
auto wrap(const char* what, Fn fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const FormatError&) {
    throw;
  } catch (const Json::exception& e) {
    throw FormatError(std::string(what) + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string(what) + ": " + e.what());
  }
}

int log2_exact(int n) {
  int b = 0;
  while ((1 << b) < n) ++b;
  if ((1 << b) != n) throw FormatError("\"of\" must be a power of two");
  return b;
}

}  // namespace

Json rational_to_json(const Rational& r) { return Json::array({r.num(), r.den()}); }

Rational rational_from_json(const Json& j) {
  if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
    throw FormatError("rational must be [num, den]");
  const auto den = j[1].get<std::int64_t>();
  if (den == 0) throw FormatError("rational with zero denominator");
  return Rational(j[0].get<std::int64_t>(), den);
}

Json gridset_to_json(const GridSet1D& set) { return {{"m", set.scale().m}, {"cells", set.cells()}}; }

Json gridset_to_json(const GridSet2D& set) {
  Json cells = Json::array();
  for (const auto& c : set.cells()) cells.push_back({c.i, c.j});
  return {{"m", set.scale().m}, {"cells", std::move(cells)}};
}

bool gridset_is_2d(const Json& j) {
  const auto cells = field<Json>(j, "cells");
  if (!cells.is_array()) throw FormatError("\"cells\" must be an array");
  return !cells.empty() && cells[0].is_array();
}

GridSet1D gridset1d_from_json(const Json& j) {
  return wrap("grid set", [&] {
    const Scale sc = scale_field(j);
    auto cells = field<std::vector<std::int64_t>>(j, "cells");
    for (auto k : cells)
      if (k < 0 || k >= sc.cells()) throw FormatError("cell " + std::to_string(k) + " outside the grid");
    return GridSet1D(sc, std::move(cells));
  });
}

GridSet2D gridset2d_from_json(const Json& j) {
  return wrap("grid set", [&] {
    const Scale sc = scale_field(j);
    std::vector<Cell2> cells;
    for (const auto& c : field<Json>(j, "cells")) {
      if (!c.is_array() || c.size() != 2) throw FormatError("2-D cells must be [i, j]");
      const Cell2 cell{c[0].get<std::int64_t>(), c[1].get<std::int64_t>()};
      if (cell.i < 0 || cell.j < 0 || cell.i >= sc.cells() || cell.j >= sc.cells())
        throw FormatError("cell outside the grid");
      cells.push_back(cell);
    }
    return GridSet2D(sc, std::move(cells));
  });
}

Json tubes_to_json(const TubeFamily& family) {
  Json tubes = Json::array();
  for (const auto& t : family.tubes)
    tubes.push_back({{"slope", rational_to_json(t.slope)},
                     {"intercept", rational_to_json(t.intercept)},
                     {"mult", t.multiplicity}});
  return {{"m", family.scale.m}, {"tubes", std::move(tubes)}};
}

TubeFamily tubes_from_json(const Json& j) {
  return wrap("tube family", [&] {
    TubeFamily f;
    f.scale = scale_field(j);
    std::int64_t id = 0;
    for (const auto& t : field<Json>(j, "tubes")) {
      const auto mult = field_or<std::int64_t>(t, "mult", 1);
      if (mult < 1) throw FormatError("tube multiplicity must be positive");
      f.tubes.push_back(Tube::make(f.scale, rational_from_json(field<Json>(t, "slope")),
                                   rational_from_json(field<Json>(t, "intercept")), id++, mult));
    }
    return f;
  });
}

Json shading_to_json(const Shading& shading) {
  return {{"tubes", shading.entries}, {"squares", shading.dual_entries}};
}

Json graph_to_json(const BipartiteGraph& g) {
  Json edges = Json::array();
  for (auto [a, b] : g.edges) edges.push_back({a, b});
  return {{"left", g.left}, {"right", g.right}, {"edges", std::move(edges)}};
}

BipartiteGraph graph_from_json(const Json& j) {
  return wrap("graph", [&] {
    BipartiteGraph g;
    g.left = field<std::vector<std::int64_t>>(j, "left");
    g.right = field<std::vector<std::int64_t>>(j, "right");
    for (const auto& e : field<Json>(j, "edges")) {
      if (!e.is_array() || e.size() != 2) throw FormatError("edges must be [a, b]");
      g.edges.emplace_back(e[0].get<std::int64_t>(), e[1].get<std::int64_t>());
    }
    g.normalize();
    return g;
  });
}

GenSpec genspec_from_json(const Json& j) {
  return wrap("generator spec", [&] {
    GenSpec g;
    g.m = field_or<int>(j, "m", 8);
    const auto type = field<std::string>(j, "type");
    if (type == "cantor") {
      g.set.kind = SetSpec::Kind::Cantor;
      g.set.keep = field_or<int>(j, "keep", 2);
      g.set.out_of = field_or<int>(j, "of", 4);
      log2_exact(g.set.out_of);
      if (g.set.keep < 1 || g.set.keep > g.set.out_of) throw FormatError("need 1 <= keep <= of");
    } else if (type == "random") {
      g.set.kind = SetSpec::Kind::RandomFrostman;
      g.set.s = field<double>(j, "s");
      g.set.seed = field_or<std::uint64_t>(j, "seed", 0);
    } else if (type == "full") {
      g.set.kind = SetSpec::Kind::Full;
    } else if (type == "point") {
      g.set.kind = SetSpec::Kind::Point;
    } else {
      throw FormatError("unknown set type \"" + type + "\"");
    }
    return g;
  });
}

GridSet1D generate_set(const GenSpec& spec) {
  const Scale sc = Scale::of(spec.m);
  switch (spec.set.kind) {
    case SetSpec::Kind::Full: return GridSet1D::full(sc);
    case SetSpec::Kind::Point: return GridSet1D(sc, {0});
    case SetSpec::Kind::RandomFrostman: return random_frostman_set(sc, spec.set.s, spec.set.seed);
    case SetSpec::Kind::Cantor: {
      // Depth floor(m / b), each kept cell refined to its leftmost child at scale m.
      const int b = log2_exact(spec.set.out_of);
      const int inner = (spec.m / b) * b;
      const auto c = cantor_set(Scale::of(inner), spec.set.keep, spec.set.out_of);
      std::vector<std::int64_t> cells;
      for (auto k : c.cells()) cells.push_back(k << (spec.m - inner));
      return GridSet1D(sc, std::move(cells));
    }
  }
  throw FormatError("unknown set kind");
}

ExperimentSpec experiment_from_json(const Json& j) {
  return wrap("experiment spec", [&] {
    ExperimentSpec e;
    e.A = genspec_from_json(field<Json>(j, "A")).set;
    e.B = j.contains("B") ? genspec_from_json(j.at("B")).set : e.A;
    const auto P = field_or<std::string>(j, "P", "full");
    if (P == "full") e.pairs = PairKind::Full;
    else if (P == "random-dense") e.pairs = PairKind::RandomDense;
    else if (P == "diagonal") e.pairs = PairKind::Diagonal;
    else throw FormatError("unknown pair set \"" + P + "\"");
    e.density = field_or<double>(j, "density", 0.5);
    e.seed = field_or<std::uint64_t>(j, "seed", 0);
    const auto range = field<std::vector<int>>(j, "m_range");
    if (range.size() != 2 || range[0] < 1 || range[1] < range[0] || range[1] > 24)
      throw FormatError("m_range must be [lo, hi] with 1 <= lo <= hi <= 24");
    e.m_lo = range[0];
    e.m_hi = range[1];
    e.epsilon = field_or<double>(j, "epsilon", 0.1);
    return e;
  });
}

Json witness_to_json(const KTWitness& w) {
  Json out{{"kind", w.kind == SetKind::KatzTao ? "katz-tao" : "frostman"}, {"s", w.s}, {"C", w.C}};
  if (w.violating_ball) {
    const auto& b = *w.violating_ball;
    out["ball"] = {{"center_x", rational_to_json(b.center_x)},
                   {"center_y", rational_to_json(b.center_y)},
                   {"radius", rational_to_json(b.radius)},
                   {"count", b.count}};
  } else {
    out["ball"] = nullptr;
  }
  return out;
}

Json trace_to_json(const TraceRecord& r) {
  Json values = Json::object();
  for (const auto& [k, v] : r.values) values[k] = v;
  return {{"step", r.step}, {"name", r.name},   {"left", r.left},
          {"right", r.right}, {"edges", r.edges}, {"loss", r.loss}, {"values", std::move(values)}};
}

Json pipeline_summary_to_json(const PipelineState& st) {
  return {{"step", 17},
          {"name", "summary"},
          {"m", st.scale.m},
          {"s", st.s},
          {"epsilon", st.epsilon},
          {"slack", st.slack},
          {"early_exit", st.early_exit},
          {"exit_reason", st.exit_reason},
          {"steps_completed", st.steps_completed},
          {"L", st.L},
          {"Lp", st.Lp},
          {"N", st.N},
          {"Np", st.Np},
          {"M", st.M},
          {"Mp", st.Mp},
          {"P", st.P},
          {"Pp", st.Pp},
          {"card_T1", st.card_T1},
          {"card_P1", st.card_P1},
          {"rectangles", st.rescaled.size()},
          {"rescaled_m", st.rescaled_scale.m},
          {"K1", st.claimed_K1()},
          {"K1p", st.claimed_K1p()},
          {"K2", st.claimed_K2()},
          {"K2p", st.claimed_K2p()}};
}

Json parse_json(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw FormatError(std::string("malformed JSON: ") + e.what());
  }
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json(ss.str());
}

}  // namespace deltalab
