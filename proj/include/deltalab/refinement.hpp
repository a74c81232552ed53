#pragma once

// Two-ends reduction of a shading along a tube, and min-degree peeling of
// bipartite graphs.

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "deltalab/grid.hpp"
#include "deltalab/incidence.hpp"

namespace deltalab {

class GuaranteeViolation : public std::runtime_error {
 public:
  GuaranteeViolation(const std::string& what, double L, std::int64_t N)
      : std::runtime_error(what), L(L), N(N) {}
  double L;
  std::int64_t N;
};

class InternalInvariant : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Descent on integer axial positions (duplicates allowed).
struct TwoEndsCore {
  double L = 1;                 // segment length, real
  std::int64_t first = 0;       // window of the final segment, in positions
  std::int64_t last = 0;
  std::vector<std::size_t> kept;  // indices into the input positions
  std::int64_t N = 0;
  std::int64_t P = 0;
  int steps = 0;
  bool lower_bounds_ok = false;  // L >= (delta^s P)^(1/(s-eps^2)) and N >= L^(eps^2) P
  bool inequality_ok = false;    // re-verified on the final segment
  std::int64_t worst_count = 0;
  double threshold = 0;
};

TwoEndsCore two_ends_core(std::span<const std::int64_t> positions, Scale scale, double s, double epsilon);

struct TwoEndsOutcome {
  Rational segment_lo;   // axial coordinate
  double segment_hi = 0;
  double L = 1;
  std::vector<Cell2> kept;
  std::int64_t N = 0;
  double epsilon = 0;
  int steps = 0;
};

// Throws GuaranteeViolation when the final segment misses the lower bounds.
TwoEndsOutcome two_ends_reduce(const Tube& tube, std::span<const Cell2> shading, double s, double epsilon);
TwoEndsOutcome two_ends_reduce_unchecked(const Tube& tube, std::span<const Cell2> shading, double s,
                                         double epsilon, bool* bounds_ok = nullptr);

// Every closed interval of length l >= delta holds at most (l/delta)^s of
// the square centers.
bool interval_kt(std::span<const std::int64_t> positions, double s);

struct BipartiteGraph {
  std::vector<std::int64_t> left;
  std::vector<std::int64_t> right;
  std::vector<std::pair<std::int64_t, std::int64_t>> edges;

  void normalize();  // sort and dedupe everything; edges must use listed vertices
};

struct RefineReport {
  BipartiteGraph graph;
  std::int64_t E0 = 0, A0 = 0, B0 = 0;
  bool degrees_ok = false;
  bool mass_ok = false;
};

RefineReport bipartite_refine(const BipartiteGraph& graph);

struct DegreeProfile {
  std::map<std::int64_t, std::int64_t> left;   // degree -> number of vertices
  std::map<std::int64_t, std::int64_t> right;
};

DegreeProfile degree_profile(const BipartiteGraph& graph);

}  // namespace deltalab
