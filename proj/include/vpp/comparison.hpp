#pragma once

#include <string>
#include <vector>

#include "vpp/core_model.hpp"

namespace vpp {

enum class MomentSource { monte_carlo, closed_form };
std::string to_string(MomentSource s);

/// Moments of the per-subregion average-demand gap D_cen - D_dis.
struct GapMoment {
  double mean_gap = 0.0;      // kWh
  double var_gap = 0.0;       // kWh^2
  double ci_halfwidth = 0.0;  // kWh, 99 % normal interval of the mean
  long trials = 0;            // 0 for closed-form entries
  MomentSource source = MomentSource::monte_carlo;
};
using GapMoments = std::vector<GapMoment>;

/// Two-sided 99 % standard-normal quantile.
inline constexpr double kZ99 = 2.5758293035489004;

/// Monte-Carlo gap moments on common renewable draws. Trial k uses
/// rng.substream(k); `threads` = 0 picks the hardware concurrency.
/// Requires trials >= 1000 and condition C1.
GapMoments gap_moments_mc(const Scenario& s, long trials, const RandomStream& rng, unsigned threads = 0);

/// Gap variance per subregion from the piecewise regime formulas.
std::vector<double> gap_variance_closed_form(const Scenario& s);
/// Gap variance per subregion from the general expression in the two
/// equilibrium precisions; agrees with the piecewise form.
std::vector<double> gap_variance_direct(const Scenario& s);
/// Closed-form variances packaged as GapMoments (mean 0, trials 0).
GapMoments gap_moments_closed_form(const Scenario& s);

/// Utility minus payment at the affine price minus aggregate precision cost.
/// Throws std::domain_error when some tau equals 1.
double total_profit(const Scenario& s, const DemandSummary& demands, double total_renewable,
                    const std::vector<double>& tau);
double total_profit(const Scenario& s, const std::vector<double>& demands, const std::vector<double>& w,
                    const std::vector<double>& tau);

/// One trial of both schemes on a common renewable draw.
struct SchemeSample {
  std::vector<double> w;            // realized outputs
  std::vector<double> gap;          // per-subregion average-demand gap
  DemandSummary centralized;        // all consumers, centralized scheme
  DemandSummary decentralized;      // all consumers, DPP fixed point
  double profit_centralized = 0.0;
  double profit_decentralized = 0.0;
};

/// Draws W first, then the prediction noise of both schemes, from `trial`.
/// Consumer demands are represented exactly by their Gaussian sufficient
/// statistics rather than simulated one by one.
SchemeSample sample_schemes(const Scenario& s, RandomStream& trial);

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

struct SurplusEstimate {
  MeanEstimate complete;
  MeanEstimate centralized;
  MeanEstimate decentralized;
  MeanEstimate none;
  long trials = 0;
};

/// Monte-Carlo total surplus of the four regimes on common draws.
SurplusEstimate surplus_mc(const Scenario& s, long trials, const RandomStream& rng, unsigned threads = 0);

struct SweepRow {
  long consumers = 0;
  double sigma_mult = 0.0;
  std::size_t sr = 0;
  double mean_gap = 0.0;
  double var_gap_mc = 0.0;
  double var_gap_cf = 0.0;
  double mean_profit_diff = 0.0;
  double var_profit_diff = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<std::string> notes;  // grid points skipped because C1 fails
};

/// Gap and centralized-minus-decentralized profit moments over a grid of
/// consumer counts and variance multipliers. Grid point g (row-major over
/// I, then multiplier) uses rng.substream(g).
SweepResult profit_sweep(const Scenario& s, const std::vector<long>& consumers,
                         const std::vector<double>& sigma_multipliers, long trials, const RandomStream& rng,
                         unsigned threads = 0);

}  // namespace vpp
