#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vpp {

/// Sampling family used for the aggregated renewable output of one subregion.
/// Only the first two moments are part of the model; the family just has to
/// keep the draw nonnegative.
enum class OutputDistribution { truncated_normal, lognormal };

std::string to_string(OutputDistribution d);
OutputDistribution parse_distribution(const std::string& name);

struct SubregionStats {
  double mean_output = 0.0;  // kWh
  double var_output = 0.0;   // (kWh)^2
  OutputDistribution distribution = OutputDistribution::truncated_normal;
};

/**
 * Market, consumer and uncertainty parameters of one experiment.
 *
 * The price seen by the VPP is lambda = alpha * (total demand - total
 * renewable) + beta0, every consumer has utility -u D^2 / 2 + t D, and m
 * scales the cost of prediction precision. Every subregion holds the same
 * number of consumers.
 *
 * gamma() and zeta() are derived on every call and never stored.
 */
struct Scenario {
  double alpha = 0.0;  // $/(kWh)^2
  double beta0 = 0.0;  // $/kWh
  double u = 0.0;      // $/(kWh)^2
  double t = 0.0;      // $/kWh
  double m = 0.0;      // $ (kWh)^2
  long consumers_per_subregion = 0;
  std::vector<SubregionStats> subregions;

  std::size_t num_subregions() const { return subregions.size(); }
  double gamma() const { return static_cast<double>(consumers_per_subregion) * alpha; }
  double zeta() const {
    return static_cast<double>(consumers_per_subregion) *
           static_cast<double>(subregions.size()) * alpha;
  }
  long total_consumers() const {
    return consumers_per_subregion * static_cast<long>(subregions.size());
  }
  std::vector<double> mean_outputs() const;
  std::vector<double> var_outputs() const;
  double total_mean_output() const;
};

/// Thrown by validation routines; carries one message per violated invariant.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// Checks every invariant of the scenario and returns it unchanged when valid.
Scenario validate_scenario(Scenario raw);

/// Benchmark scenario: three subregions, I consumers each.
Scenario benchmark_scenario(long consumers_per_subregion = 300);

/// Scenario with `num_subregions` subregions cycling the benchmark profiles.
Scenario replicate_subregions(const Scenario& base, std::size_t num_subregions);

/// Scenario with every subregion variance scaled by `factor`.
Scenario scale_variances(const Scenario& base, double factor);

/**
 * Deterministic random stream identified by (master_seed, stream_id).
 *
 * Two streams built from the same pair produce the same draws. substream()
 * derives a new identity from the ids only, never from the engine state, so a
 * child stream does not depend on how many draws the parent has made.
 */
class RandomStream {
 public:
  RandomStream(std::uint64_t master_seed, std::uint64_t stream_id);

  RandomStream(const RandomStream&) = delete;
  RandomStream& operator=(const RandomStream&) = delete;
  RandomStream(RandomStream&&) = default;
  RandomStream& operator=(RandomStream&&) = default;

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  RandomStream substream(std::uint64_t key) const;

  double uniform();  // in [0, 1)
  double normal();   // standard normal
  double exponential();
  double chi_squared(double dof);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t mix_stream_id(std::uint64_t stream_id, std::uint64_t key);

/**
 * Nonnegative sampler honouring a subregion's mean and variance.
 *
 * The truncated-normal family picks the parent normal so that the moments
 * after truncation at zero equal the targets (possible while the coefficient
 * of variation is below one). The lognormal family matches moments directly.
 */
class RenewableSampler {
 public:
  explicit RenewableSampler(const SubregionStats& stats);

  double operator()(RandomStream& rng) const;

  double parent_mean() const { return parent_mean_; }
  double parent_sd() const { return parent_sd_; }

 private:
  SubregionStats stats_;
  double parent_mean_ = 0.0;
  double parent_sd_ = 0.0;
};

double sample_renewable(const SubregionStats& sr, RandomStream& rng);

/// Per-consumer utility U(D) = -u D^2 / 2 + t D.
inline double utility(const Scenario& s, double demand) {
  return -0.5 * s.u * demand * demand + s.t * demand;
}

/// Count, sum and sum of squares of a set of consumer demands; enough to
/// evaluate aggregate utility and payments.
struct DemandSummary {
  double count = 0.0;
  double sum = 0.0;
  double sum_sq = 0.0;

  static DemandSummary of(std::span<const double> demands);
  static DemandSummary uniform(double count, double demand);
  DemandSummary& operator+=(const DemandSummary& other);
};

double total_utility(const Scenario& s, const DemandSummary& d);

}  // namespace vpp
