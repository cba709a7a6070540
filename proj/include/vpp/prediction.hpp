#pragma once

#include <optional>
#include <vector>

#include "vpp/core_model.hpp"

namespace vpp {

/**
 * Variance of the additive prediction noise. The "no information" state
 * (precision 0, infinite variance) is a distinct value rather than a float.
 */
class NoiseVariance {
 public:
  static NoiseVariance none() { return NoiseVariance(); }
  static NoiseVariance of(double variance);

  bool informative() const { return value_.has_value(); }
  /// Throws std::logic_error in the no-information state.
  double value() const;

  friend bool operator==(const NoiseVariance&, const NoiseVariance&) = default;

 private:
  NoiseVariance() = default;
  explicit NoiseVariance(double v) : value_(v) {}
  std::optional<double> value_;
};

/// tau = var_w / (var_w + noise_var); 0 for the no-information state.
double precision_from_noise(double var_w, NoiseVariance noise);
/// Inverse of precision_from_noise for tau in [0, 1]; tau = 0 gives none().
NoiseVariance noise_from_precision(double var_w, double tau);

struct LinearEstimator {
  double a1 = 0.0;  // kWh
  double a2 = 0.0;  // dimensionless

  double operator()(double w_pre) const { return a1 + a2 * w_pre; }
};

/// Best linear estimator of W from W + noise. Throws std::invalid_argument
/// when both variances are zero.
LinearEstimator blue_coefficients(double var_w, NoiseVariance noise, double mean_w);

/// (m / num_buyers) / var_w * tau / (1 - tau). Throws for tau outside [0, 1).
double precision_cost(double m, double num_buyers, double var_w, double tau);

/// W + eps with eps ~ N(0, noise_var). Throws std::invalid_argument for the
/// no-information state, which has no prediction to draw.
double sample_prediction(double w_realized, NoiseVariance noise, RandomStream& rng);

/// (1 - tau) mean_w + tau w_pre.
double conditional_mean(double mean_w, double tau, double w_pre);

/// Per-subregion precision with the implied noise variance and buyer count.
struct PrecisionProfile {
  std::vector<double> tau;
  std::vector<NoiseVariance> noise;
  std::vector<double> num_buyers;

  static PrecisionProfile from_tau(const Scenario& s, const std::vector<double>& tau, double buyers_per_sr);
  std::size_t size() const { return tau.size(); }
};

}  // namespace vpp
