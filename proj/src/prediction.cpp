#include "vpp/prediction.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace vpp {

NoiseVariance NoiseVariance::of(double variance) {
  if (!(variance >= 0.0) || std::isinf(variance))
    throw std::invalid_argument("noise variance must be finite and nonnegative");
  return NoiseVariance(variance);
}

double NoiseVariance::value() const {
  if (!value_) throw std::logic_error("noise variance is unbounded in the no-information state");
  return *value_;
}

double precision_from_noise(double var_w, NoiseVariance noise) {
  if (!noise.informative()) return 0.0;
  const double v = noise.value();
  if (var_w == 0.0 && v == 0.0) throw std::invalid_argument("precision is undefined when both variances are zero");
  return var_w / (var_w + v);
}

NoiseVariance noise_from_precision(double var_w, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("tau must lie in [0, 1]");
  if (tau == 0.0) return NoiseVariance::none();
  return NoiseVariance::of(var_w * (1.0 - tau) / tau);
}

LinearEstimator blue_coefficients(double var_w, NoiseVariance noise, double mean_w) {
  if (!(var_w >= 0.0)) throw std::invalid_argument("var_w must be nonnegative");
  const double a2 = precision_from_noise(var_w, noise);
  return {(1.0 - a2) * mean_w, a2};
}

double precision_cost(double m, double num_buyers, double var_w, double tau) {
  if (!(tau >= 0.0)) throw std::invalid_argument("tau must be nonnegative");
  if (!(tau < 1.0)) throw std::domain_error("precision cost is infinite at tau = 1");
  if (tau == 0.0) return 0.0;
  return (m / num_buyers) / var_w * tau / (1.0 - tau);
}

double sample_prediction(double w_realized, NoiseVariance noise, RandomStream& rng) {
  if (!noise.informative()) throw std::invalid_argument("no prediction exists in the no-information state");
  const double v = noise.value();
  if (v == 0.0) return w_realized;
  return w_realized + std::sqrt(v) * rng.normal();
}

double conditional_mean(double mean_w, double tau, double w_pre) { return (1.0 - tau) * mean_w + tau * w_pre; }

PrecisionProfile PrecisionProfile::from_tau(const Scenario& s, const std::vector<double>& tau, double buyers_per_sr) {
  if (tau.size() != s.num_subregions())
    throw std::invalid_argument("precision profile needs one tau per subregion");
  PrecisionProfile p;
  p.tau = tau;
  for (std::size_t l = 0; l < tau.size(); ++l) {
    p.noise.push_back(noise_from_precision(s.subregions[l].var_output, tau[l]));
    p.num_buyers.push_back(buyers_per_sr);
  }
  return p;
}

}  // namespace vpp
