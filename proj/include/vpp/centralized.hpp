#pragma once

#include <vector>

#include "vpp/core_model.hpp"

namespace vpp {

/// Affine demand rule D = b1 + sum_l b2[l] (w_pre_l - mean_output[l]) shared
/// by every consumer when predictions of all subregions are pooled.
struct CentralizedPolicy {
  double b1 = 0.0;                 // kWh
  std::vector<double> b2;          // dimensionless, per subregion
  std::vector<double> tau;         // precision the policy was built for
  std::vector<double> mean_output; // prior means w_bar

  /// Demand of one consumer holding predictions `w_pre` (one per subregion).
  double demand(const std::vector<double>& w_pre) const;
};

/// Coefficients for symmetric precisions `tau` (one per subregion).
CentralizedPolicy centralized_coefficients(const Scenario& s, const std::vector<double>& tau);

/// Equilibrium precision per subregion when every consumer buys every prediction.
std::vector<double> optimal_precision_cen(const Scenario& s);

/// Average demand over all consumers for realized outputs `w`.
double average_demand_cen(const CentralizedPolicy& policy, const std::vector<double>& w);

/**
 * Expected net utility E[u D^2 / 2] of one consumer that holds precision
 * `tau_own` while the population average is `tau_avg` (both per subregion).
 * Precision cost is not included.
 */
double expected_net_utility_cen(const Scenario& s, const std::vector<double>& tau_own,
                                const std::vector<double>& tau_avg);

/// Sum of utilities minus the area under the affine price curve up to the
/// total demand.
double total_surplus(const Scenario& s, const DemandSummary& demands, double total_renewable);
double total_surplus(const Scenario& s, const std::vector<double>& demands, const std::vector<double>& w);

struct SurplusTriple {
  double complete = 0.0;     // consumers know W exactly
  double centralized = 0.0;  // pooled predictions at the chosen precision
  double none = 0.0;         // decisions on prior means only
};

/// Closed-form expected total surplus of the three information regimes,
/// with the centralized value at the equilibrium precision.
SurplusTriple expected_surplus_triple(const Scenario& s);
/// Same, with the centralized value at a forced precision profile.
SurplusTriple expected_surplus_triple(const Scenario& s, const std::vector<double>& tau);

/// Complete-information demand (t - beta0 + alpha sum w) / (u + zeta).
double complete_information_demand(const Scenario& s, const std::vector<double>& w);

}  // namespace vpp
