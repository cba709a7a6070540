#include "vpp/comparison.hpp"

#include <array>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "vpp/centralized.hpp"
#include "vpp/decentralized.hpp"
#include "vpp/errors.hpp"
#include "vpp/parallel.hpp"
#include "vpp/prediction.hpp"

namespace vpp {

std::string to_string(MomentSource s) { return s == MomentSource::monte_carlo ? "monte-carlo" : "closed-form"; }

namespace {

struct Accumulator {
  double n = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    n += 1.0;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  double variance() const { return n > 1.0 ? m2 / (n - 1.0) : 0.0; }
  double std_error() const { return n > 0.0 ? std::sqrt(variance() / n) : 0.0; }
};

std::vector<double> draw_outputs(const Scenario& s, RandomStream& trial) {
  std::vector<double> w;
  w.reserve(s.num_subregions());
  for (const auto& sr : s.subregions) w.push_back(sample_renewable(sr, trial));
  return w;
}

std::vector<double> demand_gap(const Scenario& s, const CentralizedPolicy& cen, const std::vector<double>& tau_dis,
                               const std::vector<double>& w) {
  const double d_cen = average_demand_cen(cen, w);
  auto gap = fixed_point_demand(s, tau_dis, w);
  for (double& g : gap) g = d_cen - g;
  return gap;
}

void require_c1(const Scenario& s) {
  const auto c1 = check_c1(s);
  if (!c1.holds) {
    std::ostringstream os;
    os << "condition C1 fails for I=" << s.consumers_per_subregion << " (spectral radius " << c1.spectral_radius
       << ")";
    throw ConditionC1Error(os.str());
  }
}

}  // namespace

GapMoments gap_moments_mc(const Scenario& s, long trials, const RandomStream& rng, unsigned threads) {
  if (trials < 1000) throw std::invalid_argument("gap moments need at least 1000 trials");
  require_c1(s);
  const std::size_t L = s.num_subregions();
  const auto cen = centralized_coefficients(s, optimal_precision_cen(s));
  const auto tau_dis = optimal_precision_dis(s);

  std::vector<double> gaps(static_cast<std::size_t>(trials) * L);
  parallel_for(static_cast<std::size_t>(trials), threads, [&](std::size_t k) {
    auto trial = rng.substream(k);
    const auto g = demand_gap(s, cen, tau_dis, draw_outputs(s, trial));
    std::copy(g.begin(), g.end(), gaps.begin() + static_cast<std::ptrdiff_t>(k * L));
  });

  GapMoments out(L);
  for (std::size_t l = 0; l < L; ++l) {
    Accumulator acc;
    for (long k = 0; k < trials; ++k) acc.add(gaps[static_cast<std::size_t>(k) * L + l]);
    out[l] = {acc.mean, acc.variance(), kZ99 * acc.std_error(), trials, MomentSource::monte_carlo};
  }
  return out;
}

std::vector<double> gap_variance_closed_form(const Scenario& s) {
  const double alpha = s.alpha;
  const double u = s.u;
  const double m = s.m;
  const double n = static_cast<double>(s.consumers_per_subregion);
  const double L = static_cast<double>(s.num_subregions());
  const double gamma = s.gamma();
  const double zeta = s.zeta();
  const double k = zeta + u;
  const double root = std::sqrt(2.0 * m * u / (n * L));
  const double t1 = root / alpha;
  const double t2 = std::sqrt(2.0 * m * u / n) / alpha;

  auto cross = [&](double v) {
    if (v == 0.0) return 0.0;
    if (v < t1) {
      const double c = (gamma + u) / k * alpha / u;
      return c * c * v;
    }
    if (v < t2) {
      const double a = alpha * gamma * v + u * root;
      return a * a / (k * k * u * u * v);
    }
    const double a = gamma + u / std::sqrt(L);
    return a * a / (k * k) * 2.0 * m / (n * u * v);
  };
  auto own = [&](double v) {
    if (v == 0.0) return 0.0;
    if (v < t1) {
      const double c = (gamma - zeta) / k * alpha / u;
      return c * c * v;
    }
    if (v < t2) {
      const double a = alpha * (gamma - zeta - u) * v + u * root;
      return a * a / (k * k * u * u * v);
    }
    const double a = gamma - zeta + u * (std::sqrt(1.0 / L) - 1.0);
    return a * a / (k * k) * 2.0 * m / (n * u * v);
  };

  std::vector<double> out(s.num_subregions(), 0.0);
  for (std::size_t l = 0; l < out.size(); ++l) {
    for (std::size_t j = 0; j < out.size(); ++j) {
      const double v = s.subregions[j].var_output;
      out[l] += j == l ? own(v) : cross(v);
    }
  }
  return out;
}

std::vector<double> gap_variance_direct(const Scenario& s) {
  const auto tc = optimal_precision_cen(s);
  const auto td = optimal_precision_dis(s);
  const double alpha = s.alpha;
  const double u = s.u;
  const double gamma = s.gamma();
  const double zeta = s.zeta();
  std::vector<double> out(s.num_subregions(), 0.0);
  for (std::size_t l = 0; l < out.size(); ++l) {
    for (std::size_t j = 0; j < out.size(); ++j) {
      const double v = s.subregions[j].var_output;
      const double cen = alpha * tc[j] / (zeta * tc[j] + u);
      const double pooled = (gamma + u) / (zeta + u) * alpha / (gamma * td[j] + u);
      double coef = pooled - cen;
      if (j == l) coef += alpha * (td[j] - 1.0) / (gamma * td[j] + u);
      out[l] += coef * coef * v;
    }
  }
  return out;
}

GapMoments gap_moments_closed_form(const Scenario& s) {
  GapMoments out;
  for (double v : gap_variance_closed_form(s)) out.push_back({0.0, v, 0.0, 0, MomentSource::closed_form});
  return out;
}

double total_profit(const Scenario& s, const DemandSummary& demands, double total_renewable,
                    const std::vector<double>& tau) {
  if (tau.size() != s.num_subregions()) throw std::invalid_argument("tau needs one entry per subregion");
  double cost = 0.0;
  for (std::size_t l = 0; l < tau.size(); ++l) cost += precision_cost(s.m, 1.0, s.subregions[l].var_output, tau[l]);
  const double lambda = s.alpha * (demands.sum - total_renewable) + s.beta0;
  return total_utility(s, demands) - lambda * demands.sum - cost;
}

double total_profit(const Scenario& s, const std::vector<double>& demands, const std::vector<double>& w,
                    const std::vector<double>& tau) {
  return total_profit(s, DemandSummary::of(demands), std::accumulate(w.begin(), w.end(), 0.0), tau);
}

namespace {

// Sum and centred sum of squares of n i.i.d. N(0, var) draws.
struct NoiseStats {
  double sum = 0.0;
  double centred_sq = 0.0;
};

NoiseStats draw_noise_stats(double n, double var, RandomStream& rng) {
  const double z = rng.normal();
  const double chi = n > 1.0 ? rng.chi_squared(n - 1.0) : 0.0;
  return {std::sqrt(n * var) * z, var * chi};
}

struct SchemeSetup {
  CentralizedPolicy cen;
  std::vector<double> tau_cen;
  std::vector<double> tau_dis;
  std::vector<double> noise_cen;  // noise variance per subregion, 0 when uninformed
  std::vector<double> noise_dis;
};

SchemeSetup make_setup(const Scenario& s) {
  SchemeSetup st;
  st.tau_cen = optimal_precision_cen(s);
  st.tau_dis = optimal_precision_dis(s);
  st.cen = centralized_coefficients(s, st.tau_cen);
  for (std::size_t l = 0; l < s.num_subregions(); ++l) {
    const double v = s.subregions[l].var_output;
    const auto nc = noise_from_precision(v, st.tau_cen[l]);
    const auto nd = noise_from_precision(v, st.tau_dis[l]);
    st.noise_cen.push_back(nc.informative() ? nc.value() : 0.0);
    st.noise_dis.push_back(nd.informative() ? nd.value() : 0.0);
  }
  return st;
}

SchemeSample sample_with(const Scenario& s, const SchemeSetup& st, RandomStream& trial) {
  const std::size_t L = s.num_subregions();
  const double n_sr = static_cast<double>(s.consumers_per_subregion);
  const double n_all = static_cast<double>(s.total_consumers());

  SchemeSample out;
  out.w = draw_outputs(s, trial);
  out.gap = demand_gap(s, st.cen, st.tau_dis, out.w);
  const double w_total = std::accumulate(out.w.begin(), out.w.end(), 0.0);

  // Centralized: D_i = c + delta_i with delta_i = sum_l b2_l eps_il.
  double delta_var = 0.0;
  for (std::size_t l = 0; l < L; ++l) delta_var += st.cen.b2[l] * st.cen.b2[l] * st.noise_cen[l];
  const auto dn = draw_noise_stats(n_all, delta_var, trial);
  const double c = average_demand_cen(st.cen, out.w);
  out.centralized.count = n_all;
  out.centralized.sum = n_all * c + dn.sum;
  out.centralized.sum_sq = n_all * c * c + 2.0 * c * dn.sum + dn.sum * dn.sum / n_all + dn.centred_sq;

  // Decentralized: D_il = Dbar_l + b2_l (eps_il - mean eps_l), Dbar_l at the
  // prediction average.
  std::vector<double> signal(L);
  std::vector<double> spread(L);
  for (std::size_t l = 0; l < L; ++l) {
    const auto ns = draw_noise_stats(n_sr, st.noise_dis[l], trial);
    const bool informed = st.tau_dis[l] > 0.0;
    signal[l] = informed ? out.w[l] + ns.sum / n_sr : s.subregions[l].mean_output;
    spread[l] = informed ? ns.centred_sq : 0.0;
  }
  const auto dbar = fixed_point_demand(s, st.tau_dis, signal);
  out.decentralized.count = n_all;
  for (std::size_t l = 0; l < L; ++l) {
    const double b2 = response_coefficients(s, s.beta0, st.tau_dis[l], l).b2;
    out.decentralized.sum += n_sr * dbar[l];
    out.decentralized.sum_sq += n_sr * dbar[l] * dbar[l] + b2 * b2 * spread[l];
  }

  out.profit_centralized = total_profit(s, out.centralized, w_total, st.tau_cen);
  out.profit_decentralized = total_profit(s, out.decentralized, w_total, st.tau_dis);
  return out;
}

}  // namespace

SchemeSample sample_schemes(const Scenario& s, RandomStream& trial) { return sample_with(s, make_setup(s), trial); }

SurplusEstimate surplus_mc(const Scenario& s, long trials, const RandomStream& rng, unsigned threads) {
  if (trials < 2) throw std::invalid_argument("surplus estimate needs at least 2 trials");
  require_c1(s);
  const auto setup = make_setup(s);
  const double n_all = static_cast<double>(s.total_consumers());
  std::vector<std::array<double, 4>> ts(static_cast<std::size_t>(trials));
  parallel_for(ts.size(), threads, [&](std::size_t k) {
    auto trial = rng.substream(k);
    const auto smp = sample_with(s, setup, trial);
    const double w_total = std::accumulate(smp.w.begin(), smp.w.end(), 0.0);
    const double d0 = complete_information_demand(s, smp.w);
    ts[k] = {total_surplus(s, DemandSummary::uniform(n_all, d0), w_total),
             total_surplus(s, smp.centralized, w_total), total_surplus(s, smp.decentralized, w_total),
             total_surplus(s, DemandSummary::uniform(n_all, setup.cen.b1), w_total)};
  });
  std::array<Accumulator, 4> acc;
  for (const auto& row : ts)
    for (std::size_t r = 0; r < 4; ++r) acc[r].add(row[r]);
  auto est = [](const Accumulator& a) { return MeanEstimate{a.mean, a.std_error()}; };
  return {est(acc[0]), est(acc[1]), est(acc[2]), est(acc[3]), trials};
}

SweepResult profit_sweep(const Scenario& s, const std::vector<long>& consumers,
                         const std::vector<double>& sigma_multipliers, long trials, const RandomStream& rng,
                         unsigned threads) {
  if (trials < 1000) throw std::invalid_argument("profit sweep needs at least 1000 trials per grid point");
  SweepResult out;
  const std::size_t L = s.num_subregions();
  std::uint64_t g = 0;
  for (long n : consumers) {
    for (double mult : sigma_multipliers) {
      const auto point_rng = rng.substream(g++);
      Scenario sc = s;
      sc.consumers_per_subregion = n;
      sc = validate_scenario(scale_variances(sc, mult));
      const auto c1 = check_c1(sc);
      if (!c1.holds) {
        std::ostringstream os;
        os << "skipped I=" << n << " sigma_mult=" << mult << ": condition C1 fails (spectral radius "
           << c1.spectral_radius << ")";
        out.notes.push_back(os.str());
        continue;
      }
      const auto setup = make_setup(sc);
      std::vector<double> gaps(static_cast<std::size_t>(trials) * L);
      std::vector<double> diff(static_cast<std::size_t>(trials));
      parallel_for(diff.size(), threads, [&](std::size_t k) {
        auto trial = point_rng.substream(k);
        const auto smp = sample_with(sc, setup, trial);
        std::copy(smp.gap.begin(), smp.gap.end(), gaps.begin() + static_cast<std::ptrdiff_t>(k * L));
        diff[k] = smp.profit_centralized - smp.profit_decentralized;
      });
      Accumulator pd;
      for (double d : diff) pd.add(d);
      const auto cf = gap_variance_closed_form(sc);
      for (std::size_t l = 0; l < L; ++l) {
        Accumulator acc;
        for (std::size_t k = 0; k < diff.size(); ++k) acc.add(gaps[k * L + l]);
        out.rows.push_back({n, mult, l, acc.mean, acc.variance(), cf[l], pd.mean, pd.variance()});
      }
    }
  }
  return out;
}

}  // namespace vpp
