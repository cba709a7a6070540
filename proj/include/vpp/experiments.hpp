#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <vector>

#include "vpp/centralized.hpp"
#include "vpp/comparison.hpp"
#include "vpp/decentralized.hpp"
#include "vpp/market_clearing.hpp"
#include "vpp/multiperiod.hpp"

namespace vpp {

// Experiment recipes behind the CLI subcommands. Each one returns its results
// and, given an output directory, writes them as versioned CSV files.

// --- calibrate --------------------------------------------------------------

std::vector<PriceSegment> cmd_calibrate(const GeneratorFleet& fleet, const SweepRange& sweep,
                                        const std::filesystem::path& out_dir);
void write_price_curve(std::ostream& out, const std::vector<PriceSegment>& segments);

// --- converge ---------------------------------------------------------------

struct ConvergeArgs {
  std::vector<long> consumers{90, 300, 900, 3000};
  /// Subregion counts; empty keeps the scenario's own. Other counts cycle the
  /// scenario's subregion profiles.
  std::vector<long> subregions;
  double eps = 1e-6;
  long max_iter = 10000;
  std::uint64_t seed = 1;
};

struct ConvergeRun {
  long subregions = 0;
  long consumers = 0;
  DppState state;
  /// 1 + ceil(log(eps / r_1) / log rho) for a converged run.
  std::optional<long> predicted_iterations;
};

/// Realized outputs of run (L, I) come from RandomStream(seed, 0)
/// .substream(L).substream(I).substream(0), predictions from .substream(1).
std::vector<ConvergeRun> run_converge(const Scenario& s, const ConvergeArgs& args);
std::vector<ConvergeRun> cmd_converge(const Scenario& s, const ConvergeArgs& args,
                                      const std::filesystem::path& out_dir);
void write_trajectory(std::ostream& out, const DppState& state);
void write_converge_summary(std::ostream& out, const std::vector<ConvergeRun>& runs);

// --- compare ----------------------------------------------------------------

struct CompareArgs {
  long trials = 100000;
  std::vector<long> consumers{200, 400, 600, 800, 1000, 1200, 1400};
  std::vector<double> sigma_multipliers{1.0, 1.5, 2.0, 2.5, 3.0, 3.5};
  std::uint64_t seed = 1;
  unsigned threads = 0;
};

struct CompareResult {
  std::optional<GapMoments> monte_carlo;  // empty when C1 fails on the base scenario
  GapMoments closed_form;
  SweepResult sweep;
};

CompareResult run_compare(const Scenario& s, const CompareArgs& args);
CompareResult cmd_compare(const Scenario& s, const CompareArgs& args, const std::filesystem::path& out_dir);
void write_gap_moments(std::ostream& out, const CompareResult& r);
void write_sweep(std::ostream& out, const SweepResult& r);

// --- surplus ----------------------------------------------------------------

struct SurplusArgs {
  std::vector<double> sigma_multipliers{1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  long trials = 100000;
  std::uint64_t seed = 1;
  unsigned threads = 0;
};

struct SurplusRow {
  double sigma_mult = 0.0;
  SurplusTriple closed_form;
  SurplusEstimate monte_carlo;
};

std::vector<SurplusRow> run_surplus(const Scenario& s, const SurplusArgs& args);
std::vector<SurplusRow> cmd_surplus(const Scenario& s, const SurplusArgs& args, const std::filesystem::path& out_dir);
void write_surplus(std::ostream& out, const std::vector<SurplusRow>& rows);

// --- multiperiod ------------------------------------------------------------

struct MultiperiodArgs {
  std::vector<Regime> regimes{Regime::complete, Regime::dpp, Regime::none};
  std::uint64_t seed = 1;
  double eps = 1e-6;
};

struct MultiperiodSummary {
  Regime regime = Regime::none;
  double l2_to_complete = 0.0;  // NaN when the complete regime was not run
  double corr_demand_price = 0.0;
};

struct MultiperiodOutput {
  std::vector<MultiPeriodResult> runs;
  std::vector<MultiperiodSummary> summary;
};

MultiperiodOutput run_multiperiod(const MultiPeriodScenario& mp, const MultiperiodArgs& args);
MultiperiodOutput cmd_multiperiod(const MultiPeriodScenario& mp, const MultiperiodArgs& args,
                                  const std::filesystem::path& out_dir);
void write_multiperiod(std::ostream& out, const std::vector<MultiPeriodResult>& runs);
void write_multiperiod_summary(std::ostream& out, const std::vector<MultiperiodSummary>& summary);

/// Pearson correlation; NaN when either series is constant.
double correlation(const std::vector<double>& x, const std::vector<double>& y);
/// Euclidean distance between two equal-length paths.
double l2_distance(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace vpp
