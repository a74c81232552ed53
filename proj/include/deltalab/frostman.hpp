#pragma once

// Generators and exact validators for (delta, s)-Frostman and Katz-Tao sets,
// epsilon-uniform subset extraction, and dyadic pigeonholing.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "deltalab/grid.hpp"

namespace deltalab {

enum class SetKind { Frostman, KatzTao };

class GeneratorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EpsilonTooSmall : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A closed sup-metric ball. Centers live on the (delta/2)-lattice.
struct BallWitness {
  Rational center_x;
  Rational center_y;  // zero for 1-D sets
  Rational radius;
  std::int64_t count = 0;
};

struct KTWitness {
  SetKind kind = SetKind::KatzTao;
  double s = 0;
  double C = 0;
  std::optional<BallWitness> violating_ball;
};

struct UniformityCertificate {
  double epsilon = 0;
  double T = 0;                          // T_eps with log2(2T)/T = eps
  std::vector<int> level_exponents;      // dyadic exponents of the uniformity levels
  std::vector<std::int64_t> per_level_counts;  // smallest #(A0 cap P) per level
  double ratio_bound = 1;                // worst max/min over levels
  double tolerance = 2;
};

enum class CantorPattern { Spread, Leftmost, Random };

// Depth-k self-similar set keeping `keep` of every `out_of` children.
// Spread keeps children floor(i * out_of / keep), Leftmost keeps 0..keep-1.
GridSet1D cantor_set(Scale scale, int keep, int out_of, CantorPattern pattern = CantorPattern::Spread,
                     std::uint64_t seed = 0);
GridSet1D cantor_set(Scale scale, std::span<const int> digits, int out_of);

inline constexpr double kFrostmanAcceptC0 = 8.0;

GridSet1D random_frostman_set(Scale scale, double s, std::uint64_t seed, double c0 = kFrostmanAcceptC0);

// Exact minimal constant over all dyadic radii delta <= r <= 1 and all centers.
// A cell counts towards B(x, r) when its half-open cell [k d, (k+1) d) meets
// the closed ball.
KTWitness validate_set(const GridSet1D& set, SetKind kind, double s);
KTWitness validate_set(const GridSet2D& set, SetKind kind, double s);

// Same scan on raw integer cells (any integer range), used for tube
// parameter sets and rescaled families.
KTWitness validate_cells(std::span<const std::int64_t> cells, Scale scale, SetKind kind, double s);
KTWitness validate_cells(std::span<const Cell2> cells, Scale scale, SetKind kind, double s);

namespace serial {
// Reference implementations kept for cross-checking the parallel kernels.
KTWitness validate_cells(std::span<const std::int64_t> cells, Scale scale, SetKind kind, double s);
KTWitness validate_cells(std::span<const Cell2> cells, Scale scale, SetKind kind, double s);
}  // namespace serial

// T with log2(2T) / T = epsilon, T >= 1.
double uniformity_period(double epsilon);

struct UniformSubset {
  GridSet1D subset;
  UniformityCertificate certificate;
};
struct UniformSubset2D {
  GridSet2D subset;
  UniformityCertificate certificate;
};

UniformSubset uniform_subset(const GridSet1D& set, double epsilon, double tolerance = 2.0);
UniformSubset2D uniform_subset(const GridSet2D& set, double epsilon, double tolerance = 2.0);

// Re-check of the level-count comparability on an arbitrary set.
double uniformity_ratio(const GridSet1D& set, std::span<const int> level_exponents);
double uniformity_ratio(const GridSet2D& set, std::span<const int> level_exponents);

struct PigeonholeResult {
  int exponent = 0;           // bucket is [2^exponent, 2^(exponent+1))
  double bucket_value = 1;    // 2^exponent
  std::vector<std::size_t> indices;  // original order
  double mass = 0;
  double total = 0;
  int nonempty_classes = 0;
};

// Dyadic class of the key with the largest total key mass; ties go to the
// smaller class.
PigeonholeResult dyadic_pigeonhole(std::span<const double> keys);

// Classes by key, mass by weight (weights may be zero).
PigeonholeResult dyadic_pigeonhole(std::span<const double> keys, std::span<const double> weights);

template <class T, class KeyFn>
std::pair<double, std::vector<T>> dyadic_pigeonhole(const std::vector<T>& items, KeyFn key) {
  if (items.empty()) throw std::invalid_argument("dyadic_pigeonhole: empty list");
  std::vector<double> keys;
  keys.reserve(items.size());
  for (const auto& it : items) keys.push_back(static_cast<double>(key(it)));
  auto res = dyadic_pigeonhole(std::span<const double>(keys));
  std::vector<T> out;
  out.reserve(res.indices.size());
  for (auto i : res.indices) out.push_back(items[i]);
  return {res.bucket_value, std::move(out)};
}

inline int dyadic_exponent(double key) {
  int e = 0;
  std::frexp(key, &e);  // key = f * 2^e, f in [0.5, 1)
  return e - 1;
}

}  // namespace deltalab
