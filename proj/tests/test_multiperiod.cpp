#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "doctest.h"
#include "vpp/errors.hpp"
#include "vpp/experiments.hpp"
#include "vpp/io.hpp"
#include "vpp/multiperiod.hpp"

using namespace vpp;

namespace {

MultiPeriodScenario small_horizon(long consumers, long horizon, std::optional<double> tau) {
  MultiPeriodScenario mp;
  mp.base = benchmark_scenario(consumers);
  mp.horizon = horizon;
  mp.demand_lower = 2.0;
  mp.demand_upper = 5.0;
  mp.demand_total = 3.8 * static_cast<double>(horizon);
  mp.periods = profile_periods(mp.base, default_profile(horizon));
  mp.dpp_precision = tau;
  return validate_multiperiod(mp);
}

// Objective sum_t (U(x_t) - p_t x_t) for one consumer.
double schedule_value(const Scenario& s, const std::vector<double>& prices, const std::vector<double>& x) {
  double v = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) v += utility(s, x[t]) - prices[t] * x[t];
  return v;
}

// Every lower/upper/free pattern; the free periods share one multiplier.
std::vector<double> brute_force_allocation(const std::vector<double>& a, double gain, double lo, double hi,
                                           double total) {
  const std::size_t T = a.size();
  std::size_t patterns = 1;
  for (std::size_t t = 0; t < T; ++t) patterns *= 3;
  for (std::size_t p = 0; p < patterns; ++p) {
    std::vector<int> state(T);
    std::size_t code = p;
    for (auto& st : state) {
      st = static_cast<int>(code % 3);
      code /= 3;
    }
    double fixed = 0.0, free_sum = 0.0;
    std::size_t n_free = 0;
    for (std::size_t t = 0; t < T; ++t) {
      if (state[t] == 0) fixed += lo;
      if (state[t] == 1) fixed += hi;
      if (state[t] == 2) {
        free_sum += a[t];
        ++n_free;
      }
    }
    double mu = 0.0;
    if (n_free == 0) {
      if (std::abs(fixed - total) > 1e-12) continue;
      // any multiplier that keeps every clip active will do
      double mu_lo = -std::numeric_limits<double>::infinity(), mu_hi = std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t < T; ++t) {
        if (state[t] == 0) mu_hi = std::min(mu_hi, (lo - a[t]) / gain);
        if (state[t] == 1) mu_lo = std::max(mu_lo, (hi - a[t]) / gain);
      }
      if (mu_lo > mu_hi) continue;
      mu = std::isfinite(mu_lo) ? mu_lo : mu_hi;
    } else {
      mu = (total - fixed - free_sum) / (gain * static_cast<double>(n_free));
    }
    std::vector<double> x(T);
    bool ok = true;
    for (std::size_t t = 0; t < T && ok; ++t) {
      const double v = a[t] + gain * mu;
      if (state[t] == 0) ok = v <= lo + 1e-12;
      if (state[t] == 1) ok = v >= hi - 1e-12;
      if (state[t] == 2) ok = v >= lo && v <= hi;
      x[t] = state[t] == 0 ? lo : state[t] == 1 ? hi : v;
    }
    if (ok) return x;
  }
  return {};
}

}  // namespace

TEST_SUITE("multiperiod") {
  TEST_CASE("two-period schedule matches a grid search") {
    MultiPeriodScenario mp = small_horizon(300, 2, std::nullopt);
    mp.demand_total = 7.0;
    const std::vector<double> prices{10.0, 20.0};
    const auto x = consumer_schedule(prices, mp);
    CHECK(x[0] == doctest::Approx(4.125).epsilon(1e-12));
    CHECK(x[1] == doctest::Approx(2.875).epsilon(1e-12));
    double best = -std::numeric_limits<double>::infinity(), arg = 0.0;
    for (double x1 = 2.0; x1 <= 5.0 + 1e-12; x1 += 1e-4) {
      const double x2 = 7.0 - x1;
      if (x2 < 2.0 || x2 > 5.0) continue;
      const double v = schedule_value(mp.base, prices, {x1, x2});
      if (v > best) {
        best = v;
        arg = x1;
      }
    }
    CHECK(std::abs(arg - x[0]) <= 1e-4);
  }

  TEST_CASE("equal prices give a uniform schedule") {
    const auto mp = small_horizon(300, 6, std::nullopt);
    const auto x = consumer_schedule(std::vector<double>(6, 1.7), mp);
    for (double v : x) CHECK(v == doctest::Approx(3.8).epsilon(1e-12));
  }

  TEST_CASE("a cheap period hits the upper bound and the rest absorb the difference") {
    const std::vector<double> a{9.0, 3.0, 3.2, 2.9};
    const auto r = allocate_energy(a, 0.125, 2.0, 5.0, 14.0);
    CHECK(r.x[0] == 5.0);
    const auto bf = brute_force_allocation(a, 0.125, 2.0, 5.0, 14.0);
    REQUIRE(bf.size() == 4);
    for (std::size_t t = 0; t < 4; ++t) CHECK(r.x[t] == doctest::Approx(bf[t]).epsilon(1e-12));
  }

  TEST_CASE("random allocations agree with the clip-pattern brute force") {
    std::mt19937_64 eng(5);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int k = 0; k < 300; ++k) {
      const std::size_t T = 1 + static_cast<std::size_t>(6 * U(eng));
      std::vector<double> a(T);
      for (auto& v : a) v = -2.0 + 10.0 * U(eng);
      const double gain = 0.05 + U(eng);
      const double lo = U(eng), hi = lo + 0.5 + 4.0 * U(eng);
      const double total = static_cast<double>(T) * (lo + (hi - lo) * U(eng));
      const auto r = allocate_energy(a, gain, lo, hi, total);
      CHECK(std::accumulate(r.x.begin(), r.x.end(), 0.0) == doctest::Approx(total).epsilon(1e-12));
      const auto bf = brute_force_allocation(a, gain, lo, hi, total);
      REQUIRE(bf.size() == T);
      for (std::size_t t = 0; t < T; ++t) CHECK(std::abs(r.x[t] - bf[t]) <= 1e-9);
    }
  }

  TEST_CASE("multiplier grows with the energy requirement") {
    const std::vector<double> a{4.0, 3.0, 2.5, 3.5, 4.4};
    double last = -std::numeric_limits<double>::infinity();
    for (double total = 11.0; total <= 24.0; total += 0.5) {
      const auto r = allocate_energy(a, 0.125, 2.0, 5.0, total);
      CHECK(r.mu >= last);
      last = r.mu;
    }
  }

  TEST_CASE("infeasible requirements are rejected") {
    CHECK_THROWS_AS(allocate_energy({1.0, 2.0}, 0.125, 2.0, 5.0, 11.0), InfeasibleError);
    CHECK_THROWS_AS(allocate_energy({1.0, 2.0}, 0.125, 2.0, 5.0, 3.0), InfeasibleError);
    CHECK_NOTHROW(allocate_energy({1.0, 2.0}, 0.125, 2.0, 5.0, 10.0));
    CHECK_THROWS(allocate_energy({}, 0.125, 2.0, 5.0, 0.0));
  }

  TEST_CASE("flat profile without prediction gives a flat schedule") {
    auto mp = small_horizon(300, 8, std::nullopt);
    mp.periods = profile_periods(mp.base, std::vector<double>(8, 1.0));
    const auto r = regime_run(mp, Regime::none, RandomStream(1, 4));
    for (double d : r.avg_demand) CHECK(d == doctest::Approx(3.8).epsilon(1e-12));
  }

  TEST_CASE("noiseless DPP reproduces the complete-information schedule") {
    const auto mp = small_horizon(40, 6, 1.0);
    const auto rng = RandomStream(7, 4);
    const auto full = regime_run(mp, Regime::complete, rng);
    const auto dpp = regime_run(mp, Regime::dpp, rng, {1e-10, 10000});
    CHECK(full.renewable_total == dpp.renewable_total);
    for (std::size_t t = 0; t < 6; ++t) CHECK(dpp.avg_demand[t] == doctest::Approx(full.avg_demand[t]).epsilon(1e-8));
  }

  TEST_CASE("every regime meets the per-consumer constraints on average") {
    const auto mp = small_horizon(30, 12, std::nullopt);
    for (auto regime : {Regime::complete, Regime::dpp, Regime::none}) {
      const auto r = regime_run(mp, regime, RandomStream(3, 3));
      CHECK(std::accumulate(r.avg_demand.begin(), r.avg_demand.end(), 0.0) == doctest::Approx(mp.demand_total));
      for (double d : r.avg_demand) {
        CHECK(d >= mp.demand_lower - 1e-12);
        CHECK(d <= mp.demand_upper + 1e-12);
      }
      for (std::size_t t = 0; t < 12; ++t)
        CHECK(r.price[t] == doctest::Approx(mp.base.alpha * (90.0 * r.avg_demand[t] - r.renewable_total[t]) +
                                            mp.base.beta0));
    }
  }

  TEST_CASE("prediction pulls the schedule toward complete information") {
    const auto mp = load_multiperiod(std::string(VPPSIM_DATA) + "/multiperiod.json");
    const auto out = run_multiperiod(mp, {});
    REQUIRE(out.summary.size() == 3);
    const auto& dpp = out.summary[1];
    const auto& none = out.summary[2];
    CHECK(dpp.regime == Regime::dpp);
    CHECK(dpp.l2_to_complete < none.l2_to_complete);
    CHECK(out.summary[0].l2_to_complete == 0.0);
  }

  TEST_CASE("DPP regime refuses an unstable market") {
    const auto mp = small_horizon(3000, 2, std::nullopt);
    CHECK_THROWS_AS(regime_run(mp, Regime::dpp, RandomStream(1, 1)), ConditionC1Error);
  }

  TEST_CASE("summary statistics") {
    CHECK(correlation({1, 2, 3}, {2, 4, 6}) == doctest::Approx(1.0));
    CHECK(correlation({1, 2, 3}, {3, 2, 1}) == doctest::Approx(-1.0));
    CHECK(std::isnan(correlation({1, 1, 1}, {1, 2, 3})));
    CHECK(l2_distance({0, 3}, {4, 0}) == doctest::Approx(5.0));
  }

  TEST_CASE("regime names") {
    CHECK(parse_regime("dpp") == Regime::dpp);
    CHECK(to_string(Regime::complete) == "complete");
    CHECK_THROWS_AS(parse_regime("dp"), std::invalid_argument);
  }

  TEST_CASE("JSON documents") {
    const auto mp = small_horizon(300, 4, 0.5);
    const auto back = multiperiod_from_json(multiperiod_to_json(mp));
    CHECK(back.horizon == 4);
    CHECK(back.dpp_precision == 0.5);
    CHECK(back.periods[1][2].mean_output == mp.periods[1][2].mean_output);

    auto j = multiperiod_to_json(mp);
    j["demand_total"] = 100.0;
    CHECK_THROWS_AS(multiperiod_from_json(j), ValidationError);
    auto k = multiperiod_to_json(mp);
    k["profile"] = {1.0, 1.0, 1.0, 1.0};
    CHECK_THROWS_AS(multiperiod_from_json(k), InputError);
    auto u = multiperiod_to_json(mp);
    u["weather"] = 1;
    CHECK_THROWS_AS(multiperiod_from_json(u), InputError);
    auto p = multiperiod_to_json(mp);
    p.erase("periods");
    p["profile"] = {1.0, 0.5};
    CHECK_THROWS_AS(multiperiod_from_json(p), ValidationError);
  }

  TEST_CASE("default profile") {
    const auto p = default_profile(24);
    CHECK(p.size() == 24);
    CHECK(p[0] == doctest::Approx(1.0));
    CHECK(p[6] == doctest::Approx(1.6));
    CHECK(p[18] == doctest::Approx(0.4));
  }
}
