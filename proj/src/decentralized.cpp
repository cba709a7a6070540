#include "vpp/decentralized.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "vpp/errors.hpp"
#include "vpp/prediction.hpp"

namespace vpp {

namespace {

// Neumaier summation.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double x) {
    const double t = sum + x;
    carry += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + carry; }
};

void require_per_sr(const Scenario& s, const std::vector<double>& v, const char* what) {
  if (v.size() != s.num_subregions())
    throw std::invalid_argument(std::string(what) + " needs one entry per subregion");
}

void require_tau(const std::vector<double>& tau) {
  for (double x : tau)
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("tau must lie in [0, 1]");
}

double num_consumers(const Scenario& s) { return static_cast<double>(s.consumers_per_subregion); }

}  // namespace

std::vector<double> optimal_precision_dis(const Scenario& s) {
  const double n = num_consumers(s);
  std::vector<double> tau;
  for (const auto& sr : s.subregions) {
    const double num = sr.var_output - std::sqrt(2.0 * s.m * s.u / n) / s.alpha;
    const double den = sr.var_output + std::sqrt(2.0 * s.m * n / s.u);
    tau.push_back(den > 0.0 ? std::max(0.0, num / den) : 0.0);
  }
  return tau;
}

ResponseCoefficients response_coefficients(const Scenario& s, double beta, double tau, std::size_t sr) {
  const double gamma = s.gamma();
  const double mean = s.subregions.at(sr).mean_output;
  return {(s.t - beta + s.alpha * mean) / (gamma + s.u), s.alpha * tau / (gamma * tau + s.u)};
}

double consumer_response(const Scenario& s, double beta, const std::vector<double>& tau, double w_pre,
                         std::size_t sr) {
  require_per_sr(s, tau, "tau");
  if (!(tau[sr] >= 0.0 && tau[sr] <= 1.0)) throw std::invalid_argument("tau must lie in [0, 1]");
  const auto c = response_coefficients(s, beta, tau[sr], sr);
  return c.b1 + c.b2 * (w_pre - s.subregions[sr].mean_output);
}

double consumer_response_inflexible(const Scenario& s, double beta, const std::vector<double>& tau, double w_pre,
                                    std::size_t sr, const std::vector<double>& fixed_loads) {
  const auto n_fixed = static_cast<long>(fixed_loads.size());
  if (n_fixed >= s.consumers_per_subregion)
    throw std::invalid_argument("at least one consumer of the subregion must be flexible");
  Scenario reduced = s;
  reduced.consumers_per_subregion = s.consumers_per_subregion - n_fixed;
  const double fixed = std::accumulate(fixed_loads.begin(), fixed_loads.end(), 0.0);
  return consumer_response(reduced, beta + s.alpha * fixed, tau, w_pre, sr);
}

C1Report check_c1(const Scenario& s) {
  const double gamma = s.gamma();
  const double c = gamma / (gamma + s.u);
  const auto L = static_cast<long>(s.num_subregions());
  C1Report r;
  r.spectral_radius = std::max(c, c * static_cast<double>(L - 1));
  const double lhs = static_cast<double>(L - 2) * gamma;
  r.holds = lhs < s.u;
  if (L > 2) {
    const double per_consumer = static_cast<double>(L - 2) * s.alpha;
    auto n = static_cast<long>(std::floor(s.u / per_consumer));
    while (static_cast<double>(n) * per_consumer >= s.u) --n;
    while (static_cast<double>(n + 1) * per_consumer < s.u) ++n;
    r.max_consumers = n;
  }
  return r;
}

IterationMatrix iteration_matrix(const Scenario& s) {
  const std::size_t L = s.num_subregions();
  const double gamma = s.gamma();
  IterationMatrix h;
  h.size = L;
  h.entries.assign(L * L, -gamma / (gamma + s.u));
  for (std::size_t l = 0; l < L; ++l) h.entries[l * L + l] = 0.0;
  // a single subregion has no coupling: H is the zero matrix
  h.spectral_radius = L == 1 ? 0.0 : check_c1(s).spectral_radius;
  return h;
}

std::vector<double> iteration_offset(const Scenario& s, const std::vector<double>& tau,
                                     const std::vector<double>& signal) {
  require_per_sr(s, tau, "tau");
  require_per_sr(s, signal, "signal");
  const double n = num_consumers(s);
  std::vector<double> h(tau.size());
  for (std::size_t l = 0; l < tau.size(); ++l) {
    const auto c = response_coefficients(s, s.beta0, tau[l], l);
    h[l] = n * c.b1 + n * c.b2 * (signal[l] - s.subregions[l].mean_output) - signal[l];
  }
  return h;
}

std::vector<double> fixed_point_demand(const Scenario& s, const std::vector<double>& tau,
                                       const std::vector<double>& w) {
  require_per_sr(s, tau, "tau");
  require_per_sr(s, w, "w");
  require_tau(tau);
  const auto c1 = check_c1(s);
  if (!c1.holds) {
    std::ostringstream os;
    os << "condition C1 fails (spectral radius " << c1.spectral_radius
       << "): the fixed point exists but the iteration does not reach it";
    throw ConditionC1Error(os.str());
  }
  const double gamma = s.gamma();
  const double zeta = s.zeta();
  const double b1 = (s.t - s.beta0 + s.alpha * s.total_mean_output()) / (zeta + s.u);
  double pooled = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j)
    pooled += s.alpha / (gamma * tau[j] + s.u) * (w[j] - s.subregions[j].mean_output);
  pooled *= (gamma + s.u) / (zeta + s.u);
  std::vector<double> d(w.size());
  for (std::size_t l = 0; l < w.size(); ++l) {
    const double local = s.alpha * (tau[l] - 1.0) / (gamma * tau[l] + s.u) * (w[l] - s.subregions[l].mean_output);
    d[l] = b1 + local + pooled;
  }
  return d;
}

std::vector<double> PredictionSet::signal(const Scenario& s) const {
  std::vector<double> out(s.num_subregions());
  for (std::size_t l = 0; l < out.size(); ++l) {
    const auto& v = l < values.size() ? values[l] : std::vector<double>{};
    out[l] = v.empty() ? s.subregions[l].mean_output
                       : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  }
  return out;
}

PredictionSet draw_predictions(const Scenario& s, const std::vector<double>& tau, const std::vector<double>& w,
                               const RandomStream& rng) {
  require_per_sr(s, tau, "tau");
  require_per_sr(s, w, "w");
  require_tau(tau);
  const auto n = static_cast<std::size_t>(s.consumers_per_subregion);
  PredictionSet p;
  p.values.resize(s.num_subregions());
  for (std::size_t l = 0; l < s.num_subregions(); ++l) {
    const auto noise = noise_from_precision(s.subregions[l].var_output, tau[l]);
    if (!noise.informative()) continue;
    p.values[l].reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto stream = rng.substream(l * n + i);
      p.values[l].push_back(sample_prediction(w[l], noise, stream));
    }
  }
  return p;
}

std::string to_string(DppStatus s) {
  switch (s) {
    case DppStatus::converged:
      return "converged";
    case DppStatus::diverged:
      return "diverged";
    case DppStatus::iteration_limit:
      return "iteration-limit";
  }
  return "unknown";
}

DppState dpp_iterate(const Scenario& s, const PredictionSet& predictions, const DppOptions& options) {
  if (!(options.eps > 0.0)) throw std::invalid_argument("eps must be positive");
  if (options.max_iter < 1) throw std::invalid_argument("max_iter must be at least 1");
  const std::size_t L = s.num_subregions();
  const auto n = static_cast<std::size_t>(s.consumers_per_subregion);
  const double n_d = static_cast<double>(n);

  DppState st;
  st.tau = options.tau ? *options.tau : optimal_precision_dis(s);
  require_per_sr(s, st.tau, "tau");
  require_tau(st.tau);
  for (std::size_t l = 0; l < L; ++l) {
    const std::size_t held = l < predictions.values.size() ? predictions.values[l].size() : 0;
    if (st.tau[l] > 0.0 && held != n)
      throw std::invalid_argument("every consumer of an informed subregion needs a prediction");
  }
  st.c1 = check_c1(s);
  st.signal = predictions.signal(s);
  st.demands.assign(L, std::vector<double>(n));
  st.beta.assign(L, s.beta0);
  st.F.assign(L, 0.0);
  st.avg_demand.assign(L, 0.0);

  // Consumers respond to beta and report F_il = D_il - w_il^pre / I.
  auto respond = [&](const std::vector<double>& beta, std::vector<double>& F) {
    for (std::size_t l = 0; l < L; ++l) {
      const auto c = response_coefficients(s, beta[l], st.tau[l], l);
      const double mean = s.subregions[l].mean_output;
      const bool informed = st.tau[l] > 0.0;
      // compensated sums: F grows with I and feeds the next price
      CompensatedSum f, total;
      for (std::size_t i = 0; i < n; ++i) {
        const double w_pre = informed ? predictions.values[l][i] : mean;
        const double d = c.b1 + c.b2 * (w_pre - mean);
        st.demands[l][i] = d;
        total.add(d);
        f.add(d - w_pre / n_d);
      }
      F[l] = f.value();
      st.avg_demand[l] = total.value() / n_d;
    }
  };

  auto record = [&](long k, double residual) {
    st.history.push_back({k, st.beta, st.F, st.avg_demand, residual});
  };

  respond(st.beta, st.F);
  record(0, std::numeric_limits<double>::quiet_NaN());

  std::vector<double> next(L);
  double first_residual = std::numeric_limits<double>::quiet_NaN();
  st.status = DppStatus::iteration_limit;
  for (long k = 1; k <= options.max_iter; ++k) {
    CompensatedSum sum_F;
    for (double x : st.F) sum_F.add(x);
    const double total_F = sum_F.value();
    for (std::size_t l = 0; l < L; ++l) st.beta[l] = s.beta0 + s.alpha * (total_F - st.F[l]);
    respond(st.beta, next);
    double residual = 0.0;
    for (std::size_t l = 0; l < L; ++l) residual = std::max(residual, std::abs(next[l] - st.F[l]));
    if (!std::isfinite(residual)) residual = std::numeric_limits<double>::infinity();
    st.F = next;
    st.residual = residual;
    st.iterations = k;
    record(k, residual);
    if (k == 1) first_residual = residual;
    if (residual <= options.eps) {
      st.status = DppStatus::converged;
      break;
    }
    if (residual > options.divergence_factor * first_residual) {
      st.status = DppStatus::diverged;
      break;
    }
  }
  if (!options.keep_demands) st.demands.clear();
  return st;
}

DppState dpp_run(const Scenario& s, const std::vector<double>& w, const RandomStream& rng,
                 const DppOptions& options) {
  const auto tau = options.tau ? *options.tau : optimal_precision_dis(s);
  DppOptions opts = options;
  opts.tau = tau;
  return dpp_iterate(s, draw_predictions(s, tau, w, rng), opts);
}

void require_converged(const DppState& state) {
  if (state.converged()) return;
  std::ostringstream os;
  os << "decentralized iteration " << to_string(state.status) << " after " << state.iterations
     << " iterations (residual " << state.residual << ", spectral radius " << state.c1.spectral_radius
     << ", C1 " << (state.c1.holds ? "holds" : "fails") << ")";
  if (!state.c1.holds) throw ConditionC1Error(os.str());
  throw NumericalError(os.str());
}

}  // namespace vpp
