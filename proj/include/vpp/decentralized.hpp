#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "vpp/core_model.hpp"

namespace vpp {

/// Equilibrium precision per subregion when each subregion's I consumers
/// share the cost of their local prediction. Independent of beta.
std::vector<double> optimal_precision_dis(const Scenario& s);

/// Best-response intercept and slope of subregion `sr` at price signal `beta`.
struct ResponseCoefficients {
  double b1 = 0.0;
  double b2 = 0.0;
};
ResponseCoefficients response_coefficients(const Scenario& s, double beta, double tau, std::size_t sr);

/// Demand of one consumer of subregion `sr` given its local prediction.
double consumer_response(const Scenario& s, double beta, const std::vector<double>& tau, double w_pre,
                         std::size_t sr);

/// Same, when some consumers of the subregion have fixed loads: the fixed
/// energy moves into the price signal and only the flexible ones count.
double consumer_response_inflexible(const Scenario& s, double beta, const std::vector<double>& tau, double w_pre,
                                    std::size_t sr, const std::vector<double>& fixed_loads);

struct C1Report {
  bool holds = false;
  double spectral_radius = 0.0;
  /// Largest I for which the condition holds; empty when it holds for every I.
  std::optional<long> max_consumers;
};

C1Report check_c1(const Scenario& s);

/// Dense L x L matrix of the synchronous F-update.
struct IterationMatrix {
  std::size_t size = 0;
  std::vector<double> entries;  // row-major
  double spectral_radius = 0.0;

  double operator()(std::size_t r, std::size_t c) const { return entries[r * size + c]; }
};

IterationMatrix iteration_matrix(const Scenario& s);

/// Offset h of F^{k+1} = H F^k + h. `signal` is the per-subregion average of
/// the consumers' predictions.
std::vector<double> iteration_offset(const Scenario& s, const std::vector<double>& tau,
                                     const std::vector<double>& signal);

/// Limit of the per-subregion average demand for realized outputs `w`.
/// Throws ConditionC1Error when the iteration that reaches it is unstable.
std::vector<double> fixed_point_demand(const Scenario& s, const std::vector<double>& tau,
                                       const std::vector<double>& w);

/// Per-consumer predictions, one list per subregion. A subregion with tau = 0
/// holds no predictions; its consumers report the prior mean instead.
struct PredictionSet {
  std::vector<std::vector<double>> values;

  /// Average prediction per subregion; the prior mean where none are held.
  std::vector<double> signal(const Scenario& s) const;
};

/// Draws W_l + eps_il for every consumer at precision `tau`. Consumer i of
/// subregion l uses the substream keyed by l * I + i.
PredictionSet draw_predictions(const Scenario& s, const std::vector<double>& tau, const std::vector<double>& w,
                               const RandomStream& rng);

struct DppOptions {
  double eps = 1e-6;                   // kWh
  long max_iter = 10000;
  double divergence_factor = 1e6;      // residual growth over the first residual
  std::optional<std::vector<double>> tau;  // default: optimal_precision_dis
  bool keep_demands = true;
};

enum class DppStatus { converged, diverged, iteration_limit };
std::string to_string(DppStatus s);

struct DppRecord {
  long iteration = 0;
  std::vector<double> beta;
  std::vector<double> F;
  std::vector<double> avg_demand;
  double residual = 0.0;  // NaN at iteration 0
};

struct DppState {
  DppStatus status = DppStatus::iteration_limit;
  long iterations = 0;
  std::vector<double> tau;
  std::vector<double> signal;
  std::vector<double> beta;
  std::vector<double> F;
  std::vector<double> avg_demand;
  double residual = 0.0;
  std::vector<std::vector<double>> demands;  // per subregion, per consumer
  std::vector<DppRecord> history;
  C1Report c1;

  bool converged() const { return status == DppStatus::converged; }
};

/// Runs Algorithm 1 on fixed predictions.
DppState dpp_iterate(const Scenario& s, const PredictionSet& predictions, const DppOptions& options = {});

/// Draws predictions once at the chosen precision, then runs Algorithm 1.
DppState dpp_run(const Scenario& s, const std::vector<double>& w, const RandomStream& rng,
                 const DppOptions& options = {});

/// Throws ConditionC1Error (or NumericalError at the iteration limit) unless
/// the state converged.
void require_converged(const DppState& state);

}  // namespace vpp
