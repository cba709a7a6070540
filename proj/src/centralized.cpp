#include "vpp/centralized.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace vpp {

namespace {

void require_per_sr(const Scenario& s, const std::vector<double>& v, const char* what) {
  if (v.size() != s.num_subregions())
    throw std::invalid_argument(std::string(what) + " needs one entry per subregion");
}

void require_tau(const std::vector<double>& tau) {
  for (double x : tau)
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("tau must lie in [0, 1]");
}

// max(0, (var - sqrt(2 m u / n) / alpha) / (var + sqrt(2 m n / u))) with n
// consumers sharing the cost of one prediction.
double symmetric_precision(const Scenario& s, double var, double n) {
  const double num = var - std::sqrt(2.0 * s.m * s.u / n) / s.alpha;
  const double den = var + std::sqrt(2.0 * s.m * n / s.u);
  if (!(den > 0.0)) return 0.0;
  return std::max(0.0, num / den);
}

}  // namespace

double CentralizedPolicy::demand(const std::vector<double>& w_pre) const {
  if (w_pre.size() != b2.size()) throw std::invalid_argument("one prediction per subregion expected");
  double d = b1;
  for (std::size_t l = 0; l < b2.size(); ++l) d += b2[l] * (w_pre[l] - mean_output[l]);
  return d;
}

CentralizedPolicy centralized_coefficients(const Scenario& s, const std::vector<double>& tau) {
  require_per_sr(s, tau, "tau");
  require_tau(tau);
  const double zeta = s.zeta();
  CentralizedPolicy p;
  p.b1 = (s.t - s.beta0 + s.alpha * s.total_mean_output()) / (zeta + s.u);
  p.tau = tau;
  p.mean_output = s.mean_outputs();
  for (double x : tau) p.b2.push_back(s.alpha * x / (zeta * x + s.u));
  return p;
}

std::vector<double> optimal_precision_cen(const Scenario& s) {
  std::vector<double> tau;
  const auto n = static_cast<double>(s.total_consumers());
  for (const auto& sr : s.subregions) tau.push_back(symmetric_precision(s, sr.var_output, n));
  return tau;
}

double average_demand_cen(const CentralizedPolicy& policy, const std::vector<double>& w) {
  if (w.size() != policy.b2.size()) throw std::invalid_argument("one output per subregion expected");
  double d = policy.b1;
  for (std::size_t l = 0; l < w.size(); ++l) d += policy.b2[l] * (w[l] - policy.mean_output[l]);
  return d;
}

double expected_net_utility_cen(const Scenario& s, const std::vector<double>& tau_own,
                                const std::vector<double>& tau_avg) {
  require_per_sr(s, tau_own, "tau_own");
  require_per_sr(s, tau_avg, "tau_avg");
  const double zeta = s.zeta();
  const double b1 = (s.t - s.beta0 + s.alpha * s.total_mean_output()) / (zeta + s.u);
  double acc = b1 * b1;
  for (std::size_t l = 0; l < tau_own.size(); ++l) {
    const double den = zeta * tau_avg[l] + s.u;
    acc += s.alpha * s.alpha * s.subregions[l].var_output * tau_own[l] / (den * den);
  }
  return 0.5 * s.u * acc;
}

double total_surplus(const Scenario& s, const DemandSummary& demands, double total_renewable) {
  const double x = demands.sum;
  const double area = 0.5 * s.alpha * x * x - s.alpha * total_renewable * x + s.beta0 * x;
  return total_utility(s, demands) - area;
}

double total_surplus(const Scenario& s, const std::vector<double>& demands, const std::vector<double>& w) {
  for (double d : demands)
    if (!(d >= 0.0)) throw std::invalid_argument("demands must be nonnegative");
  return total_surplus(s, DemandSummary::of(demands), std::accumulate(w.begin(), w.end(), 0.0));
}

SurplusTriple expected_surplus_triple(const Scenario& s) { return expected_surplus_triple(s, optimal_precision_cen(s)); }

SurplusTriple expected_surplus_triple(const Scenario& s, const std::vector<double>& tau) {
  const auto policy = centralized_coefficients(s, tau);
  const double n = static_cast<double>(s.total_consumers());
  const double k = s.u + s.zeta();
  double var_total = 0.0;
  double pooled = 0.0;
  for (std::size_t l = 0; l < tau.size(); ++l) {
    var_total += s.subregions[l].var_output;
    pooled += policy.b2[l] * s.subregions[l].var_output;
  }
  SurplusTriple r;
  r.none = 0.5 * n * k * policy.b1 * policy.b1;
  r.complete = 0.5 * n * k * (policy.b1 * policy.b1 + (s.alpha / k) * (s.alpha / k) * var_total);
  r.centralized = r.none + 0.5 * s.alpha * n * pooled;
  return r;
}

double complete_information_demand(const Scenario& s, const std::vector<double>& w) {
  require_per_sr(s, w, "w");
  return (s.t - s.beta0 + s.alpha * std::accumulate(w.begin(), w.end(), 0.0)) / (s.u + s.zeta());
}

}  // namespace vpp
