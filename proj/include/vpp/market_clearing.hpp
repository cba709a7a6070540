#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "vpp/core_model.hpp"
#include "vpp/errors.hpp"

namespace vpp {

struct Generator {
  std::string name;
  double cost_quad = 0.0;  // c_n, $/(kWh)^2
  double cost_lin = 0.0;   // d_n, $/kWh
  double g_min = 0.0;      // kWh
  double g_max = 0.0;      // kWh
};

/// Network line with its distribution factors. Flow is
/// sum_n pi_ns g_n - sum_j pi_js D_j^f + pi_vs (W - D).
struct Line {
  std::string name;
  std::vector<double> generator_factors;
  std::vector<double> fixed_demand_factors;
  double vpp_factor = 0.0;
  double capacity = 0.0;  // kWh
};

struct GeneratorFleet {
  std::vector<Generator> generators;
  std::vector<Line> lines;
  std::vector<double> fixed_demands;  // kWh

  double total_fixed_demand() const;
  double min_output() const;
  double max_output() const;
};

GeneratorFleet validate_fleet(GeneratorFleet fleet);
GeneratorFleet fleet_from_json(const nlohmann::json& j);
nlohmann::json fleet_to_json(const GeneratorFleet& fleet);
GeneratorFleet load_fleet(const std::filesystem::path& path);

struct BoundConstraint {
  enum class Side { lower, upper };
  std::size_t generator = 0;
  Side side = Side::lower;

  friend bool operator==(const BoundConstraint&, const BoundConstraint&) = default;
};

std::string to_string(const BoundConstraint& b);

struct LineFlow {
  std::size_t line = 0;
  double flow = 0.0;
  double capacity = 0.0;
};

struct DispatchResult {
  std::vector<double> outputs;  // g_n
  double price = 0.0;           // lambda, multiplier of the balance row
  double net_demand = 0.0;      // D + sum D^f - W served by the fleet
  std::vector<BoundConstraint> binding_set;
  std::vector<LineFlow> line_violations;

  double balance_residual() const;
};

/**
 * Least-cost dispatch with a scalar balance row and generator boxes.
 *
 * Solved by water-filling over the aggregate supply curve, which is exact.
 * Line limits are evaluated after the fact and listed in `line_violations`.
 * Throws InfeasibleError when the net demand is outside the fleet's range and
 * DegenerateDualError when the balance multiplier is not unique inside that
 * range. At the range ends the one-sided limit from inside is reported.
 */
DispatchResult solve_dispatch(const GeneratorFleet& fleet, double vpp_demand, double renewable_total);

/// One affine piece lambda = slope * q + intercept of the price curve, valid
/// for VPP net demand q in [q_lo, q_hi].
struct PriceSegment {
  double slope = 0.0;
  double intercept = 0.0;
  double q_lo = 0.0;
  double q_hi = 0.0;

  double price(double q) const { return slope * q + intercept; }
  bool contains(double q) const { return q >= q_lo && q <= q_hi; }
};

struct SweepRange {
  double q_min = 0.0;
  double q_max = 0.0;
  double step = 1.0;
};

/// Breakpoints are located to this width before the pieces are intersected.
inline constexpr double kBreakpointTolerance = 1e-8;

/**
 * Recovers the piecewise-affine price curve over a sweep of VPP net demand.
 *
 * Each sweep point is dispatched; a change of binding set between adjacent
 * points is bisected down to kBreakpointTolerance and adjacent pieces are
 * intersected to pin the breakpoint. Within a piece every sweep point must
 * match the fitted line to 1e-9 relative.
 */
std::vector<PriceSegment> calibrate_price_curve(const GeneratorFleet& fleet, const SweepRange& sweep);

/// lambda(D, W) = alpha * (D - W) + beta0. Warns when the result is not positive.
double price(const Scenario& scenario, double total_demand, double total_renewable);

/// Copies the scenario with (alpha, beta0) taken from a calibrated segment.
Scenario with_price_segment(Scenario scenario, const PriceSegment& segment);

}  // namespace vpp
