#pragma once

// Instances of the (delta, s) tube/square incidence problem, the
// seventeen-step reduction (Steps 1-11 executed, Steps 12-17 checked), the
// Wang-Wu and product-bound evaluators and the final bound report.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "deltalab/frostman.hpp"
#include "deltalab/grid.hpp"
#include "deltalab/incidence.hpp"
#include "deltalab/refinement.hpp"

namespace deltalab {

class StepClaimViolation : public std::logic_error {
 public:
  StepClaimViolation(int step, const std::string& what)
      : std::logic_error("step " + std::to_string(step) + ": " + what), step(step) {}
  int step;
};

class ResampleExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class InstanceStyle { Random, Trainlike };

struct HypothesisWitnesses {
  KTWitness tubes;          // tube parameters, exponent 2s
  KTWitness squares;        // P, exponent 2s
  KTWitness worst_shading;  // max over T of Y(T), exponent s
  KTWitness worst_dual;     // max over p of Y'(p) as tube parameters, exponent s
  double max_constant() const;
};

struct TheoremInstance {
  Scale scale;
  double s = 0.5;
  InstanceStyle style = InstanceStyle::Random;
  std::uint64_t seed = 0;
  TubeFamily tubes;
  GridSet2D squares;
  Shading shading;  // Y(T) = every square meeting T
  HypothesisWitnesses witnesses;

  std::int64_t incidences() const { return shading.size(); }
};

// (floor(slope / delta), floor(intercept / delta)) for each tube.
std::vector<Cell2> tube_parameter_cells(const std::vector<Tube>& tubes, Scale scale);

// Builds the full shading and measures the four hypothesis constants.
TheoremInstance make_instance(Scale scale, double s, std::vector<Tube> tubes, GridSet2D squares);

// One horizontal tube through one square.
TheoremInstance degenerate_instance(Scale scale);

// Draws instances until all four constants are at most `max_constant`.
// Trainlike: P is a lattice of spacing 2^(m - round(m s)), T the lattice
// lines with slopes p/Q for one random Q in {2, 3, 4}. Random: P is a product
// of two separated random Frostman sets, T lines through random pairs of P.
TheoremInstance generate_instance(Scale scale, double s, InstanceStyle style, std::uint64_t seed,
                                  double max_constant = 8.0, int attempts = 20);

struct TraceRecord {
  int step = 0;
  std::string name;
  std::int64_t left = 0;   // tubes, clusters or segments
  std::int64_t right = 0;  // squares or cells
  std::int64_t edges = 0;
  // edges / edges of the previous graph, contracted edges counted M (Step 4)
  // or M' (Step 9) times
  double loss = 1;
  std::map<std::string, double> values;
};

// Rectangle R: column qx of width L, direction class k of width L', strip h of
// height L L' in coordinates sheared along the class direction.
using RectKey = std::tuple<std::int64_t, std::int64_t, std::int64_t>;

struct RescaledFamily {
  RectKey key;
  Scale scale;
  std::vector<Tube> tubes;                          // one per surviving segment of R
  std::vector<Cell2> squares;                       // the cells gamma, rescaled
  std::vector<std::vector<std::uint32_t>> shading;  // per tube, indices into squares
  std::vector<std::vector<std::uint32_t>> dual;     // per square, indices into tubes
};

struct PipelineState {
  Scale scale;
  double s = 0.5;
  double epsilon = 0.1;
  double slack = 0.2;
  bool early_exit = false;
  std::string exit_reason;
  int steps_completed = 0;

  int ell = 0;   // L = 2^ell
  int ellp = 0;  // L' = 2^ellp
  double L = 1, Lp = 1;
  double N = 0, Np = 0;  // dyadic classes
  double M = 1, Mp = 1;
  double P = 0, Pp = 0;  // degree classes of Steps 1 and 2
  std::int64_t card_T1 = 0, card_P1 = 0;
  std::int64_t two_ends_bound_failures = 0;  // two-ends lower bounds on L or N missed (tubes and squares)
  std::int64_t step9_dropped = 0;             // G4' edges (tau, p) with gamma(p) outside tau
  std::int64_t rect_fit = 0, rect_total = 0;  // segments kept at Step 6 (inside their R) and offered

  std::vector<TraceRecord> trace;
  Scale rescaled_scale;
  std::vector<RescaledFamily> rescaled;

  // Step 12 claims.
  double claimed_K1() const;
  double claimed_K1p() const;
  double claimed_K2() const;
  double claimed_K2p() const;
};

PipelineState run_pipeline(const TheoremInstance& instance, double epsilon = 0.1, double slack = 0.2);

struct RescaledKTRow {
  RectKey key;
  double K1 = 0, K1p = 0, K2 = 0, K2p = 0;  // measured
  double ratio = 0;                         // worst measured / max(1, claimed)
};

struct RescaledKTReport {
  std::vector<RescaledKTRow> rows;
  double max_ratio = 0;
  double bound = 8;
  bool ok = false;
};

RescaledKTReport check_rescaled_kt(const PipelineState& state, double bound = 8.0);

struct RescaledTwoEndsReport {
  double alpha = 0;
  double epsilon2 = 0;
  std::int64_t checked = 0;
  std::int64_t passed = 0;
  double pass_rate() const { return checked == 0 ? 1.0 : static_cast<double>(passed) / static_cast<double>(checked); }
};

// Every rescaled shading against (delta-bar^alpha, epsilon^4) two-ends, with
// delta-bar^alpha = (delta / L)^epsilon.
RescaledTwoEndsReport check_rescaled_two_ends(const PipelineState& state);

struct WangWuValue {
  double lhs = 0;       // N^(1/2) delta^(t/2) sum #Y(T)
  double rhs_core = 0;  // K1 K2^(1/2) #Y(T-family)
  double ratio = 0;
};

// shading_sizes[T] = #Y(T); union_size = #Y(T-family).
WangWuValue wang_wu_evaluator(const std::vector<std::int64_t>& shading_sizes, std::int64_t union_size, Scale scale,
                              double t, double K1, double K2, double N);

// Product bound: K3^(1/3) (K1 K2)^(2/3) (delta^(-s-d) #T)^(1/3) #Y^(2/3).
double product_bound(Scale scale, double s, double d, double K1, double K2, double K3, double card_T,
                     double card_Y);

struct ReplayReport {
  std::vector<double> step14_ratios;  // per R, against delta-bar^(-slack)
  std::vector<double> step15_ratios;
  // N^(3/2) #T1 / #P1 against delta^(-s) L'^(s/2) / L^s, and the dual pair.
  double tube_lhs = 0, tube_rhs = 0, square_lhs = 0, square_rhs = 0;
  double NNp = 0, NNp_bound = 0;
  bool wang_wu_ok = false;  // every per-R ratio <= delta-bar^(-slack)
};

// Steps 14-16: Wang-Wu on every rectangle and its dual, then the two
// averaged inequalities and the resulting N N' bound.
ReplayReport replay_final_steps(const PipelineState& state, double slack = 0.15);

// Exponent e with I <~ delta^(-e) (#T #P)^(1/2): 3s/4 for s <= 1/2,
// s - s^2/2 above.
double theorem_exponent(double s);
// Exponent of the N N' bound: 3s/2 for s <= 1/2, 2s - s^2 above.
double nn_exponent(double s);

struct FinalBoundReport {
  std::int64_t I = 0;
  std::int64_t card_T = 0;
  std::int64_t card_P = 0;
  double exponent = 0;
  double bound = 0;      // delta^(-exponent) (#T #P)^(1/2)
  double ratio = 0;      // I / bound
  double slack = 0.15;
  bool within = false;   // I <= delta^(-slack) bound
  // Remark bounds: P^(2/5) T^(3/5), P^(3/5) T^(2/5), geometric mean.
  double remark_exponent = 0;
  double remark_bounds[3] = {0, 0, 0};
  bool stronger_than_remark = false;  // bound <= geometric-mean remark bound
  std::optional<double> NNp;
  std::optional<double> NNp_bound;     // delta^(-nn_exponent - slack)
  std::optional<bool> NNp_within;
};

FinalBoundReport final_bound_report(const TheoremInstance& instance, const PipelineState* state = nullptr,
                                    double slack = 0.15);

// Exact count of P in a box of width w and height h (in cells) and the two
// KT estimates for it: one square of side max(w, h), or ceil(max/min) squares
// of side min(w, h). Returns {exact, single, tiled}.
std::tuple<std::int64_t, double, double> box_count_estimates(const GridSet2D& squares, Cell2 corner, std::int64_t w,
                                                             std::int64_t h, double s, double C);

}  // namespace deltalab
