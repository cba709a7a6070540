#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vpp/core_model.hpp"

namespace vpp {

/// Horizon of T periods sharing one market and consumer model. Each consumer
/// must draw exactly `demand_total` over the horizon, within per-period bounds.
struct MultiPeriodScenario {
  Scenario base;
  long horizon = 0;
  double demand_lower = 0.0;  // kWh per period
  double demand_upper = 0.0;  // kWh per period
  double demand_total = 0.0;  // kWh over the horizon
  std::vector<std::vector<SubregionStats>> periods;  // [t][l]
  std::optional<double> dpp_precision;  // fixed tau for the DPP regime

  /// Base scenario with the subregion statistics of period t.
  Scenario period(std::size_t t) const;
};

MultiPeriodScenario validate_multiperiod(MultiPeriodScenario raw);

/// Per-period multipliers 1 + 0.6 sin(2 pi t / T).
std::vector<double> default_profile(long horizon);

/// Period statistics obtained by scaling each base mean by the multiplier and
/// each variance by its square.
std::vector<std::vector<SubregionStats>> profile_periods(const Scenario& base, const std::vector<double>& profile);

MultiPeriodScenario multiperiod_from_json(const nlohmann::json& j);
nlohmann::json multiperiod_to_json(const MultiPeriodScenario& mp);
MultiPeriodScenario load_multiperiod(const std::filesystem::path& path);

struct Allocation {
  std::vector<double> x;
  double mu = 0.0;  // multiplier of the total-energy equality
};

/**
 * x_t = clip(intercepts[t] + gain * mu, lo, hi) with mu chosen so that the
 * x_t sum to `total`. Bisection on mu followed by an exact solve on the
 * unclipped periods. Throws InfeasibleError when T lo <= total <= T hi fails.
 */
Allocation allocate_energy(const std::vector<double>& intercepts, double gain, double lo, double hi, double total);

/// One consumer's schedule for expected prices `prices_expected`.
std::vector<double> consumer_schedule(const std::vector<double>& prices_expected, const MultiPeriodScenario& mp);

enum class Regime { complete, dpp, none };
std::string to_string(Regime r);
Regime parse_regime(const std::string& name);

struct MultiPeriodOptions {
  double eps = 1e-6;  // kWh, on the joint F-residual of the DPP regime
  long max_iter = 10000;
};

struct MultiPeriodResult {
  Regime regime = Regime::none;
  std::vector<double> avg_demand;       // kWh, mean over all consumers
  std::vector<double> price;            // $/kWh at the realized outputs
  std::vector<double> renewable_total;  // kWh, realized
  long iterations = 0;                  // joint iterations (DPP only)
};

/**
 * Runs one information regime over the horizon. Realized outputs of period t
 * and subregion l come from rng.substream(0).substream(t L + l) for every
 * regime, so regimes run with the same stream see the same outputs; DPP
 * predictions of period t come from rng.substream(1 + t).
 */
MultiPeriodResult regime_run(const MultiPeriodScenario& mp, Regime regime, const RandomStream& rng,
                             const MultiPeriodOptions& options = {});

}  // namespace vpp
