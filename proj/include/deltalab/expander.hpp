#pragma once

// Image covering and energy of f(x, y) = x (x + y) on pair sets in
// [1/2, 1]^2, the dual line/tube instance, bucket audits and exponent fits.
//
// A grid index k stands for the point a = k delta (left endpoint).

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "deltalab/frostman.hpp"
#include "deltalab/grid.hpp"
#include "deltalab/incidence.hpp"

namespace deltalab {

class DegenerateFit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SetSpec {
  enum class Kind { Full, Cantor, RandomFrostman, Point };
  Kind kind = Kind::Full;
  int keep = 2;
  int out_of = 4;
  double s = 0.5;          // RandomFrostman only
  std::uint64_t seed = 0;  // RandomFrostman only

  double dimension() const;
};

// The set at scale m inside [1/2, 1]: indices in [2^(m-1), 2^m).
GridSet1D half_interval_set(const SetSpec& spec, Scale scale);

struct PairSet {
  GridSet1D A;
  GridSet1D B;
  std::vector<std::pair<std::int64_t, std::int64_t>> P;  // (a index, b index), sorted

  static PairSet full(const GridSet1D& A, const GridSet1D& B);
  static PairSet diagonal(const GridSet1D& A);
  Scale scale() const { return A.scale(); }
};

// Each pair of A x B kept independently with probability `density`.
PairSet random_dense_pairs(const GridSet1D& A, const GridSet1D& B, double density, std::uint64_t seed);

std::int64_t image_covering(const PairSet& pairs);
std::int64_t energy_count(const PairSet& pairs);

struct EnergyPair {
  std::size_t first = 0;   // index into PairSet::P
  std::size_t second = 0;
};

std::vector<EnergyPair> energy_pairs(const PairSet& pairs);

namespace serial {
std::int64_t energy_count(const PairSet& pairs);  // all ordered pairs
}

// Sum over image cells of (points in the cell)^2; a lower bound for the energy.
std::int64_t fiber_square_sum(const PairSet& pairs);

// Number of energy pairs ((a,b),(a',b')) whose point (b, b') is farther than
// 2 delta (vertically) from the line l_{a,a'}; checked in exact arithmetic.
std::int64_t dual_transfer_violations(const PairSet& pairs);

struct DualTube {
  Tube tube;               // representative line, multiplicity filled in
  std::int64_t k = 0;      // representative a = k delta
  std::int64_t kp = 0;     // representative a' = kp delta
  std::int64_t slope_cell = 0;
  std::int64_t intercept_cell = 0;
  int delta_exp = 0;       // Delta = 2^-delta_exp; -1 encodes Delta = 2
  int n_exp = 0;           // 2^n_exp <= multiplicity < 2^(n_exp+1)
};

using BucketKey = std::pair<int, int>;  // (delta_exp, n_exp)

struct DualInstance {
  Scale scale;
  std::int64_t card_A = 0;      // #A
  std::int64_t card_calA = 0;   // #{(a, a')}
  GridSet2D points;             // the (b, b') pairs, as index pairs
  std::vector<DualTube> tubes;  // distinct tubes
  std::map<BucketKey, std::vector<std::size_t>> buckets;
};

DualInstance build_dual(const PairSet& pairs);

// Slope-gap class of the line through (k, kp): -1 when k == kp, else l with
// 2^l <= |k - kp| 2^m / kp < 2^(l+1).
int slope_gap_exponent(std::int64_t k, std::int64_t kp, Scale scale);

struct BucketRow {
  BucketKey key;
  std::int64_t count = 0;
  double ratio = 0;
};

struct BucketReport {
  std::vector<BucketRow> rows;
  double max_ratio = 0;
  double constant = 8;
  bool ok = false;
};

BucketReport check_bucket_bound(const DualInstance& instance, double s, double epsilon, double constant = 8.0);

struct ShadingKTReport {
  double max_value = 0;  // max over points of K3 N (delta / Delta)^s
  double bound = 0;      // 8 delta^(-epsilon)
  std::optional<Cell2> worst_point;
  std::size_t points_checked = 0;
  bool ok = false;
};

// Point-in-tube uses the vertical test |b' - (slope b + intercept)| <= 2 delta
// on the representative line.
ShadingKTReport check_shading_kt(const DualInstance& instance, BucketKey bucket, double s, double epsilon);

enum class PairKind { Full, RandomDense, Diagonal };

struct ExperimentSpec {
  SetSpec A;
  SetSpec B;
  PairKind pairs = PairKind::Full;
  double density = 0.5;
  std::uint64_t seed = 0;
  int m_lo = 6;
  int m_hi = 14;
  double epsilon = 0.1;
};

PairSet make_pairs(const ExperimentSpec& spec, Scale scale);

struct SweepRow {
  int m = 0;
  double delta = 0;
  std::int64_t card_A = 0;
  std::int64_t card_B = 0;
  std::int64_t card_P = 0;
  std::int64_t image_cover = 0;
  std::int64_t energy = 0;
};

struct FitResult {
  double slope = 0;
  double intercept = 0;
  std::vector<double> residuals;  // m_lo + 2 .. m_hi
  std::vector<SweepRow> rows;
  double theory_exponent = 0;     // 2 (s + t) / 3
};

FitResult exponent_fit(const ExperimentSpec& spec, bool with_energy = true);

}  // namespace deltalab
