#include "vpp/multiperiod.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "vpp/decentralized.hpp"
#include "vpp/errors.hpp"
#include "vpp/io.hpp"

namespace vpp {

using nlohmann::json;

Scenario MultiPeriodScenario::period(std::size_t t) const {
  Scenario s = base;
  s.subregions = periods.at(t);
  return s;
}

MultiPeriodScenario validate_multiperiod(MultiPeriodScenario raw) {
  raw.base = validate_scenario(std::move(raw.base));
  std::vector<std::string> bad;
  const double T = static_cast<double>(raw.horizon);
  if (raw.horizon < 1) bad.emplace_back("horizon must be at least 1");
  if (!(raw.demand_lower >= 0.0)) bad.emplace_back("demand_lower must be nonnegative");
  if (!(raw.demand_upper >= raw.demand_lower)) bad.emplace_back("demand_upper must not be below demand_lower");
  if (raw.horizon >= 1 && !(T * raw.demand_lower <= raw.demand_total && raw.demand_total <= T * raw.demand_upper))
    bad.emplace_back("demand_total must lie in [horizon * demand_lower, horizon * demand_upper]");
  if (raw.dpp_precision && !(*raw.dpp_precision >= 0.0 && *raw.dpp_precision <= 1.0))
    bad.emplace_back("dpp_precision must lie in [0, 1]");
  if (static_cast<long>(raw.periods.size()) != raw.horizon) bad.emplace_back("periods must have one entry per period");
  for (std::size_t t = 0; t < raw.periods.size(); ++t) {
    if (raw.periods[t].size() != raw.base.num_subregions()) {
      bad.push_back("periods[" + std::to_string(t) + "] needs one entry per subregion");
      continue;
    }
    try {
      validate_scenario(raw.period(t));
    } catch (const ValidationError& e) {
      for (const auto& v : e.violations()) bad.push_back("periods[" + std::to_string(t) + "]: " + v);
    }
  }
  if (!bad.empty()) throw ValidationError(std::move(bad));
  return raw;
}

std::vector<double> default_profile(long horizon) {
  std::vector<double> p;
  for (long t = 0; t < horizon; ++t)
    p.push_back(1.0 + 0.6 * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(horizon)));
  return p;
}

std::vector<std::vector<SubregionStats>> profile_periods(const Scenario& base, const std::vector<double>& profile) {
  std::vector<std::vector<SubregionStats>> out;
  for (double k : profile) {
    auto srs = base.subregions;
    for (auto& sr : srs) {
      sr.mean_output *= k;
      sr.var_output *= k * k;
    }
    out.push_back(std::move(srs));
  }
  return out;
}

namespace {

double number(const json& j, const char* key) {
  if (!j.contains(key)) throw InputError(std::string("multiperiod: missing key '") + key + "'");
  if (!j.at(key).is_number()) throw InputError(std::string("multiperiod: '") + key + "' must be a number");
  return j.at(key).get<double>();
}

}  // namespace

MultiPeriodScenario multiperiod_from_json(const json& j) {
  require_known_keys(j,
                     {"scenario", "horizon", "demand_lower", "demand_upper", "demand_total", "dpp_precision",
                      "periods", "profile"},
                     "multiperiod");
  if (!j.contains("scenario")) throw InputError("multiperiod: missing key 'scenario'");
  MultiPeriodScenario mp;
  mp.base = scenario_from_json(j.at("scenario"));
  const double horizon = number(j, "horizon");
  if (horizon != std::floor(horizon)) throw InputError("multiperiod: 'horizon' must be an integer");
  mp.horizon = static_cast<long>(horizon);
  mp.demand_lower = number(j, "demand_lower");
  mp.demand_upper = number(j, "demand_upper");
  mp.demand_total = number(j, "demand_total");
  if (j.contains("dpp_precision") && !j.at("dpp_precision").is_null()) mp.dpp_precision = number(j, "dpp_precision");
  if (j.contains("periods") && j.contains("profile"))
    throw InputError("multiperiod: give either 'periods' or 'profile', not both");
  if (j.contains("periods")) {
    const auto& ps = j.at("periods");
    if (!ps.is_array()) throw InputError("multiperiod: 'periods' must be an array");
    for (std::size_t t = 0; t < ps.size(); ++t) {
      // Reuse the scenario parser for the per-subregion objects.
      json sc = scenario_to_json(mp.base);
      sc["subregions"] = ps[t];
      sc["num_subregions"] = ps[t].is_array() ? ps[t].size() : 0;
      try {
        mp.periods.push_back(scenario_from_json(sc).subregions);
      } catch (const ValidationError& e) {
        throw InputError("multiperiod: periods[" + std::to_string(t) + "]: " + e.what());
      }
    }
  } else {
    std::vector<double> profile;
    if (j.contains("profile")) {
      if (!j.at("profile").is_array()) throw InputError("multiperiod: 'profile' must be an array");
      for (const auto& v : j.at("profile")) {
        if (!v.is_number()) throw InputError("multiperiod: 'profile' must hold numbers");
        profile.push_back(v.get<double>());
      }
    } else {
      profile = default_profile(mp.horizon);
    }
    mp.periods = profile_periods(mp.base, profile);
  }
  return validate_multiperiod(std::move(mp));
}

json multiperiod_to_json(const MultiPeriodScenario& mp) {
  json j;
  j["scenario"] = scenario_to_json(mp.base);
  j["horizon"] = mp.horizon;
  j["demand_lower"] = mp.demand_lower;
  j["demand_upper"] = mp.demand_upper;
  j["demand_total"] = mp.demand_total;
  if (mp.dpp_precision) j["dpp_precision"] = *mp.dpp_precision;
  json periods = json::array();
  for (const auto& srs : mp.periods) {
    Scenario s = mp.base;
    s.subregions = srs;
    periods.push_back(scenario_to_json(s).at("subregions"));
  }
  j["periods"] = periods;
  return j;
}

MultiPeriodScenario load_multiperiod(const std::filesystem::path& path) {
  return multiperiod_from_json(read_json_file(path));
}

Allocation allocate_energy(const std::vector<double>& intercepts, double gain, double lo, double hi, double total) {
  const auto T = intercepts.size();
  if (T == 0) throw std::invalid_argument("allocation needs at least one period");
  if (!(gain > 0.0)) throw std::invalid_argument("gain must be positive");
  const double Td = static_cast<double>(T);
  const double slack = 1e-12 * std::max(1.0, std::abs(total));
  if (!(lo <= hi) || total < Td * lo - slack || total > Td * hi + slack) {
    std::ostringstream os;
    os << "total energy " << total << " kWh cannot be met with " << T << " periods in [" << lo << ", " << hi << "]";
    throw InfeasibleError(os.str());
  }
  const auto [amin, amax] = std::minmax_element(intercepts.begin(), intercepts.end());
  auto fill = [&](double mu, std::vector<double>& x) {
    double sum = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      x[t] = std::clamp(intercepts[t] + gain * mu, lo, hi);
      sum += x[t];
    }
    return sum - total;
  };

  Allocation a;
  a.x.assign(T, lo);
  double mu_lo = (lo - *amax) / gain;
  double mu_hi = (hi - *amin) / gain;
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (mu_lo + mu_hi);
    const double r = fill(mid, a.x);
    a.mu = mid;
    if (std::abs(r) <= 1e-10) break;
    if (r < 0.0)
      mu_lo = mid;
    else
      mu_hi = mid;
    if (mu_hi - mu_lo <= 1e-15 * std::max(1.0, std::abs(mid))) break;
  }

  // Exact solve with the clip pattern found by bisection.
  double fixed = 0.0;
  double free_sum = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < T; ++t) {
    if (a.x[t] > lo && a.x[t] < hi) {
      free_sum += intercepts[t];
      ++n_free;
    } else {
      fixed += a.x[t];
    }
  }
  if (n_free > 0) {
    const double mu = (total - fixed - free_sum) / (gain * static_cast<double>(n_free));
    std::vector<double> x(T);
    bool same_pattern = true;
    for (std::size_t t = 0; t < T; ++t) {
      const double v = intercepts[t] + gain * mu;
      const bool was_free = a.x[t] > lo && a.x[t] < hi;
      if (was_free) {
        same_pattern = same_pattern && v >= lo && v <= hi;
        x[t] = std::clamp(v, lo, hi);
      } else {
        x[t] = a.x[t];
      }
    }
    if (same_pattern) {
      a.x = std::move(x);
      a.mu = mu;
    }
  }
  return a;
}

std::vector<double> consumer_schedule(const std::vector<double>& prices_expected, const MultiPeriodScenario& mp) {
  if (static_cast<long>(prices_expected.size()) != mp.horizon)
    throw std::invalid_argument("one expected price per period required");
  std::vector<double> a;
  for (double p : prices_expected) a.push_back((mp.base.t - p) / mp.base.u);
  return allocate_energy(a, 1.0 / mp.base.u, mp.demand_lower, mp.demand_upper, mp.demand_total).x;
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::complete:
      return "complete";
    case Regime::dpp:
      return "dpp";
    case Regime::none:
      return "none";
  }
  return "unknown";
}

Regime parse_regime(const std::string& name) {
  if (name == "complete") return Regime::complete;
  if (name == "dpp") return Regime::dpp;
  if (name == "none") return Regime::none;
  throw std::invalid_argument("unknown regime '" + name + "' (expected complete, dpp or none)");
}

namespace {

std::vector<std::vector<double>> draw_horizon(const MultiPeriodScenario& mp, const RandomStream& rng) {
  const auto outputs = rng.substream(0);
  const std::size_t L = mp.base.num_subregions();
  std::vector<std::vector<double>> w(mp.periods.size(), std::vector<double>(L));
  for (std::size_t t = 0; t < mp.periods.size(); ++t) {
    for (std::size_t l = 0; l < L; ++l) {
      auto stream = outputs.substream(t * L + l);
      w[t][l] = sample_renewable(mp.periods[t][l], stream);
    }
  }
  return w;
}

// Symmetric equilibrium clip((t - beta0 + alpha sum w + mu) / (u + zeta)).
std::vector<double> symmetric_path(const MultiPeriodScenario& mp, const std::vector<double>& w_total) {
  const auto& s = mp.base;
  const double k = s.u + s.zeta();
  std::vector<double> a;
  for (double w : w_total) a.push_back((s.t - s.beta0 + s.alpha * w) / k);
  return allocate_energy(a, 1.0 / k, mp.demand_lower, mp.demand_upper, mp.demand_total).x;
}

}  // namespace

MultiPeriodResult regime_run(const MultiPeriodScenario& mp, Regime regime, const RandomStream& rng,
                             const MultiPeriodOptions& options) {
  const auto& s = mp.base;
  const std::size_t T = mp.periods.size();
  const std::size_t L = s.num_subregions();
  const auto n = static_cast<std::size_t>(s.consumers_per_subregion);
  const double n_d = static_cast<double>(n);
  const double n_all = static_cast<double>(s.total_consumers());

  const auto w = draw_horizon(mp, rng);
  MultiPeriodResult res;
  res.regime = regime;
  for (const auto& wt : w) res.renewable_total.push_back(std::accumulate(wt.begin(), wt.end(), 0.0));

  if (regime == Regime::complete) {
    res.avg_demand = symmetric_path(mp, res.renewable_total);
  } else if (regime == Regime::none) {
    std::vector<double> expected;
    for (const auto& srs : mp.periods) {
      double total = 0.0;
      for (const auto& sr : srs) total += sr.mean_output;
      expected.push_back(total);
    }
    res.avg_demand = symmetric_path(mp, expected);
  } else {
    const auto c1 = check_c1(s);
    if (!c1.holds) {
      std::ostringstream os;
      os << "condition C1 fails (spectral radius " << c1.spectral_radius << "); the DPP regime cannot settle";
      throw ConditionC1Error(os.str());
    }
    // Per period: precision, predictions (prior mean where uninformed), slopes.
    std::vector<std::vector<double>> tau(T);
    std::vector<PredictionSet> pred(T);
    std::vector<std::vector<double>> b2(T, std::vector<double>(L));
    for (std::size_t t = 0; t < T; ++t) {
      const auto sc = mp.period(t);
      tau[t] = mp.dpp_precision ? std::vector<double>(L, *mp.dpp_precision) : optimal_precision_dis(sc);
      pred[t] = draw_predictions(sc, tau[t], w[t], rng.substream(1 + t));
      for (std::size_t l = 0; l < L; ++l) {
        if (pred[t].values[l].empty()) pred[t].values[l].assign(n, mp.periods[t][l].mean_output);
        b2[t][l] = response_coefficients(sc, s.beta0, tau[t][l], l).b2;
      }
    }

    const double gamma = s.gamma();
    const double gain = 1.0 / (gamma + s.u);
    std::vector<std::vector<double>> beta(T, std::vector<double>(L, s.beta0));
    std::vector<std::vector<double>> F(T, std::vector<double>(L, 0.0));
    std::vector<std::vector<double>> demand_sum(T, std::vector<double>(L, 0.0));
    std::vector<double> a(T);

    // Every consumer schedules against the current beta; the VPP collects
    // F_lt = sum_i (D_ilt - w_ilt^pre / I).
    auto respond = [&](std::vector<std::vector<double>>& out) {
      for (auto& row : out) std::fill(row.begin(), row.end(), 0.0);
      for (auto& row : demand_sum) std::fill(row.begin(), row.end(), 0.0);
      for (std::size_t l = 0; l < L; ++l) {
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t t = 0; t < T; ++t) {
            const double mean = mp.periods[t][l].mean_output;
            const double b1 = (s.t - beta[t][l] + s.alpha * mean) * gain;
            a[t] = b1 + b2[t][l] * (pred[t].values[l][i] - mean);
          }
          const auto x = allocate_energy(a, gain, mp.demand_lower, mp.demand_upper, mp.demand_total).x;
          for (std::size_t t = 0; t < T; ++t) {
            out[t][l] += x[t] - pred[t].values[l][i] / n_d;
            demand_sum[t][l] += x[t];
          }
        }
      }
    };

    respond(F);
    auto next = F;
    double first = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;
    for (long k = 1; k <= options.max_iter; ++k) {
      for (std::size_t t = 0; t < T; ++t) {
        const double total = std::accumulate(F[t].begin(), F[t].end(), 0.0);
        for (std::size_t l = 0; l < L; ++l) beta[t][l] = s.beta0 + s.alpha * (total - F[t][l]);
      }
      respond(next);
      double r = 0.0;
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t l = 0; l < L; ++l) r = std::max(r, std::abs(next[t][l] - F[t][l]));
      std::swap(F, next);
      res.iterations = k;
      if (k == 1) first = r;
      if (r <= options.eps) {
        converged = true;
        break;
      }
      if (!std::isfinite(r) || r > 1e6 * first) break;
    }
    if (!converged) {
      std::ostringstream os;
      os << "DPP regime did not converge within " << res.iterations << " joint iterations";
      throw NumericalError(os.str());
    }
    for (std::size_t t = 0; t < T; ++t)
      res.avg_demand.push_back(std::accumulate(demand_sum[t].begin(), demand_sum[t].end(), 0.0) / n_all);
  }

  for (std::size_t t = 0; t < T; ++t)
    res.price.push_back(s.alpha * (n_all * res.avg_demand[t] - res.renewable_total[t]) + s.beta0);
  return res;
}

}  // namespace vpp
