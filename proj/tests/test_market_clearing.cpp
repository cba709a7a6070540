#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "vpp/diagnostics.hpp"
#include "vpp/market_clearing.hpp"

using namespace vpp;

namespace {

GeneratorFleet fleet_of(std::vector<Generator> gens) {
  GeneratorFleet f;
  f.generators = std::move(gens);
  return validate_fleet(f);
}

GeneratorFleet two_generator_fleet() {
  return fleet_of({{"g1", 1.0, 0.0, 0.0, 3.0}, {"g2", 2.0, 0.0, 0.0, 100.0}});
}

struct BruteForce {
  std::vector<double> g;
  double lambda = 0.0;
};

// Enumerates every lower/upper/interior pattern and keeps the one that
// satisfies the KKT conditions. Needs at least one interior generator.
std::optional<BruteForce> brute_force_dispatch(const GeneratorFleet& f, double q) {
  const std::size_t n = f.generators.size();
  std::size_t patterns = 1;
  for (std::size_t i = 0; i < n; ++i) patterns *= 3;
  for (std::size_t p = 0; p < patterns; ++p) {
    std::vector<int> state(n);
    std::size_t code = p;
    for (std::size_t i = 0; i < n; ++i) {
      state[i] = static_cast<int>(code % 3);
      code /= 3;
    }
    double fixed = 0.0, inv = 0.0, off = 0.0;
    bool any_free = false;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& g = f.generators[i];
      if (state[i] == 0) fixed += g.g_min;
      if (state[i] == 1) fixed += g.g_max;
      if (state[i] == 2) {
        any_free = true;
        inv += 1.0 / (2.0 * g.cost_quad);
        off += g.cost_lin / (2.0 * g.cost_quad);
      }
    }
    if (!any_free) continue;
    const double lambda = (q - fixed + off) / inv;
    BruteForce bf{std::vector<double>(n), lambda};
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      const auto& g = f.generators[i];
      const double mc_min = 2.0 * g.cost_quad * g.g_min + g.cost_lin;
      const double mc_max = 2.0 * g.cost_quad * g.g_max + g.cost_lin;
      if (state[i] == 0) {
        bf.g[i] = g.g_min;
        ok = lambda <= mc_min + 1e-12;
      } else if (state[i] == 1) {
        bf.g[i] = g.g_max;
        ok = lambda >= mc_max - 1e-12;
      } else {
        bf.g[i] = (lambda - g.cost_lin) / (2.0 * g.cost_quad);
        ok = bf.g[i] >= g.g_min - 1e-12 && bf.g[i] <= g.g_max + 1e-12;
      }
    }
    if (ok) return bf;
  }
  return std::nullopt;
}

GeneratorFleet random_fleet(std::mt19937_64& eng, std::size_t n) {
  std::uniform_real_distribution<double> c(0.2, 3.0), d(0.0, 10.0), lo(0.0, 2.0), span(1.0, 8.0);
  std::vector<Generator> gens;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = lo(eng);
    gens.push_back({"g" + std::to_string(i), c(eng), d(eng), a, a + span(eng)});
  }
  return fleet_of(gens);
}

}  // namespace

TEST_SUITE("market_clearing") {
  TEST_CASE("single generator: lambda = 2cg + d") {
    const auto f = fleet_of({{"g", 1.0, 0.0, 0.0, 100.0}});
    const auto r = solve_dispatch(f, 10.0, 0.0);
    CHECK(r.outputs[0] == doctest::Approx(10.0));
    CHECK(r.price == doctest::Approx(20.0));
    CHECK(std::abs(r.balance_residual()) <= 1e-12);
    CHECK(r.binding_set.empty());
  }

  TEST_CASE("two identical generators split evenly") {
    const auto f = fleet_of({{"a", 1.0, 0.0, 0.0, 100.0}, {"b", 1.0, 0.0, 0.0, 100.0}});
    const auto r = solve_dispatch(f, 10.0, 0.0);
    CHECK(r.outputs[0] == doctest::Approx(5.0));
    CHECK(r.outputs[1] == doctest::Approx(5.0));
    CHECK(r.price == doctest::Approx(10.0));
  }

  TEST_CASE("capped generator matches the brute-force active set") {
    const auto f = two_generator_fleet();
    const auto r = solve_dispatch(f, 10.0, 0.0);
    const auto bf = brute_force_dispatch(f, 10.0);
    REQUIRE(bf);
    CHECK(bf->g[0] == doctest::Approx(3.0));
    CHECK(bf->g[1] == doctest::Approx(7.0));
    CHECK(bf->lambda == doctest::Approx(28.0));
    CHECK(r.outputs[0] == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(r.outputs[1] == doctest::Approx(7.0).epsilon(1e-14));
    CHECK(r.price == doctest::Approx(28.0).epsilon(1e-14));
    REQUIRE(r.binding_set.size() == 1);
    CHECK(r.binding_set[0] == BoundConstraint{0, BoundConstraint::Side::upper});
    CHECK(to_string(r.binding_set[0]) == "g1:max");
  }

  TEST_CASE("renewables and fixed demands shift the net demand") {
    auto f = two_generator_fleet();
    f.fixed_demands = {4.0};
    const auto r = solve_dispatch(f, 10.0, 4.0);
    CHECK(r.net_demand == doctest::Approx(10.0));
    CHECK(r.price == doctest::Approx(28.0));
  }

  TEST_CASE("random fleets agree with brute force and share marginal cost") {
    std::mt19937_64 eng(2024);
    for (int trial = 0; trial < 200; ++trial) {
      const auto f = random_fleet(eng, 1 + trial % 5);
      std::uniform_real_distribution<double> share(0.02, 0.98);
      const double q = f.min_output() + share(eng) * (f.max_output() - f.min_output());
      const auto r = solve_dispatch(f, q, 0.0);
      CHECK(std::abs(r.balance_residual()) <= 1e-9);
      for (std::size_t i = 0; i < r.outputs.size(); ++i) {
        const auto& g = f.generators[i];
        CHECK(r.outputs[i] >= g.g_min);
        CHECK(r.outputs[i] <= g.g_max);
        if (r.outputs[i] > g.g_min + 1e-9 && r.outputs[i] < g.g_max - 1e-9)
          CHECK(2.0 * g.cost_quad * r.outputs[i] + g.cost_lin == doctest::Approx(r.price).epsilon(1e-9));
      }
      const auto bf = brute_force_dispatch(f, q);
      if (bf) {
        CHECK(r.price == doctest::Approx(bf->lambda).epsilon(1e-9));
        for (std::size_t i = 0; i < r.outputs.size(); ++i)
          CHECK(r.outputs[i] == doctest::Approx(bf->g[i]).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("net demand outside the fleet range is infeasible") {
    const auto f = two_generator_fleet();
    CHECK_THROWS_AS(solve_dispatch(f, 103.5, 0.0), InfeasibleError);
    CHECK_THROWS_AS(solve_dispatch(f, -1.0, 0.0), InfeasibleError);
    CHECK_NOTHROW(solve_dispatch(f, 103.0, 0.0));
  }

  TEST_CASE("a non-unique balance multiplier is reported") {
    // Between the two cost curves no generator is marginal: lambda in [6, 10].
    const auto f = fleet_of({{"a", 1.0, 0.0, 0.0, 3.0}, {"b", 1.0, 10.0, 0.0, 3.0}});
    CHECK_THROWS_AS(solve_dispatch(f, 3.0, 0.0), DegenerateDualError);
    CHECK(solve_dispatch(f, 2.0, 0.0).price == doctest::Approx(4.0));
    CHECK(solve_dispatch(f, 4.0, 0.0).price == doctest::Approx(12.0));
  }

  TEST_CASE("range ends use the one-sided multiplier") {
    const auto f = two_generator_fleet();
    const auto lo = solve_dispatch(f, 0.0, 0.0);
    CHECK(lo.price == doctest::Approx(0.0));
    const auto hi = solve_dispatch(f, 103.0, 0.0);
    CHECK(hi.price == doctest::Approx(400.0));
  }

  TEST_CASE("linear-cost generators share the residual at their cost") {
    const auto f = fleet_of({{"a", 0.0, 5.0, 0.0, 4.0}, {"b", 0.0, 5.0, 0.0, 12.0}, {"c", 1.0, 0.0, 0.0, 2.0}});
    const auto r = solve_dispatch(f, 6.0, 0.0);
    CHECK(r.price == doctest::Approx(5.0));
    CHECK(r.outputs[2] == doctest::Approx(2.0));
    CHECK(r.outputs[0] == doctest::Approx(1.0));
    CHECK(r.outputs[1] == doctest::Approx(3.0));
  }

  TEST_CASE("line limits are checked after dispatch") {
    auto f = two_generator_fleet();
    f.lines.push_back({"l1", {1.0, 0.0}, {}, 0.0, 2.5});
    f = validate_fleet(f);
    const auto r = solve_dispatch(f, 10.0, 0.0);
    REQUIRE(r.line_violations.size() == 1);
    CHECK(r.line_violations[0].flow == doctest::Approx(3.0));
    CHECK(solve_dispatch(f, 2.0, 0.0).line_violations.empty());
  }

  TEST_CASE("fleet validation and JSON") {
    auto j = fleet_to_json(two_generator_fleet());
    const auto back = fleet_from_json(j);
    CHECK(back.generators.size() == 2);
    CHECK(back.generators[1].cost_quad == 2.0);
    j["generators"][0]["g_min"] = 5.0;
    CHECK_THROWS_AS(fleet_from_json(j), ValidationError);
    auto k = fleet_to_json(two_generator_fleet());
    k["generators"][0]["ramp"] = 1.0;
    CHECK_THROWS(fleet_from_json(k));
  }

  TEST_CASE("calibration of one unconstrained generator gives one segment") {
    const auto f = fleet_of({{"g", 1.5, 2.0, 0.0, 1000.0}});
    const auto segs = calibrate_price_curve(f, {0.0, 50.0, 1.0});
    REQUIRE(segs.size() == 1);
    CHECK(segs[0].slope == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(segs[0].intercept == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(segs[0].q_lo == 0.0);
    CHECK(segs[0].q_hi == 50.0);
  }

  TEST_CASE("two-generator calibration recovers the KKT pieces") {
    // g1 = 2q/3 while both are interior, so g1 hits its cap at q = 4.5.
    const auto segs = calibrate_price_curve(two_generator_fleet(), {0.0, 20.0, 0.5});
    REQUIRE(segs.size() == 2);
    CHECK(segs[0].slope == doctest::Approx(4.0 / 3.0).epsilon(1e-8));
    CHECK(std::abs(segs[0].intercept) <= 1e-8);
    CHECK(segs[0].q_hi == doctest::Approx(4.5).epsilon(1e-8));
    CHECK(segs[1].q_lo == doctest::Approx(4.5).epsilon(1e-8));
    CHECK(segs[1].slope == doctest::Approx(4.0).epsilon(1e-8));
    CHECK(segs[1].intercept == doctest::Approx(-12.0).epsilon(1e-8));
    CHECK(segs[1].q_hi == 20.0);
  }

  TEST_CASE("breakpoints between sweep points are found by bisection") {
    const auto segs = calibrate_price_curve(two_generator_fleet(), {0.0, 20.0, 3.0});
    REQUIRE(segs.size() == 2);
    CHECK(segs[0].q_hi == doctest::Approx(4.5).epsilon(1e-8));
  }

  TEST_CASE("slopes rise when every generator enters at zero price") {
    std::mt19937_64 eng(19);
    std::uniform_real_distribution<double> c(0.2, 3.0), cap(1.0, 8.0);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<Generator> gens;
      for (int i = 0; i < 2 + trial % 4; ++i) gens.push_back({"g" + std::to_string(i), c(eng), 0.0, 0.0, cap(eng)});
      const auto f = fleet_of(gens);
      const auto segs = calibrate_price_curve(f, {0.0, f.max_output(), f.max_output() / 41.0});
      for (std::size_t i = 1; i < segs.size(); ++i) CHECK(segs[i].slope >= segs[i - 1].slope - 1e-9);
    }
  }

  TEST_CASE("a late-entering generator flattens the curve") {
    // below price 10 only the first unit runs (slope 2); above it both share (slope 1)
    const auto f = fleet_of({{"a", 1.0, 0.0, 0.0, 10.0}, {"b", 1.0, 10.0, 0.0, 10.0}});
    const auto segs = calibrate_price_curve(f, {0.0, 12.0, 1.0});
    REQUIRE(segs.size() == 2);
    CHECK(segs[0].slope == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(segs[0].q_hi == doctest::Approx(5.0).epsilon(1e-8));
    CHECK(segs[1].slope == doctest::Approx(1.0).epsilon(1e-9));
  }

  TEST_CASE("calibrated segments reproduce dispatch prices; price nondecreasing") {
    std::mt19937_64 eng(7);
    for (int trial = 0; trial < 20; ++trial) {
      const auto f = random_fleet(eng, 2 + trial % 4);
      const double lo = f.min_output(), hi = f.max_output();
      const auto segs = calibrate_price_curve(f, {lo, hi, (hi - lo) / 37.0});
      REQUIRE(!segs.empty());
      for (std::size_t i = 1; i < segs.size(); ++i) {
        CHECK(segs[i].q_lo == doctest::Approx(segs[i - 1].q_hi));
        // the price may step up where no unit is interior, never down
        CHECK(segs[i].price(segs[i].q_lo) >= segs[i - 1].price(segs[i - 1].q_hi) - 1e-9);
      }
      for (const auto& seg : segs) CHECK(seg.slope >= -1e-12);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (int p = 0; p < 50; ++p) {
        const auto& s = segs[static_cast<std::size_t>(p) % segs.size()];
        if (s.q_hi - s.q_lo < 1e-6) continue;
        const double q = s.q_lo + (0.01 + 0.98 * u(eng)) * (s.q_hi - s.q_lo);
        const double lambda = solve_dispatch(f, q, 0.0).price;
        CHECK(std::abs(s.price(q) - lambda) <= 1e-9 * std::max(1.0, std::abs(lambda)));
      }
    }
  }

  TEST_CASE("infeasible sweep points propagate") {
    CHECK_THROWS_AS(calibrate_price_curve(two_generator_fleet(), {0.0, 200.0, 1.0}), InfeasibleError);
  }

  TEST_CASE("affine price and its warning") {
    auto s = benchmark_scenario();
    std::vector<std::string> warnings;
    auto previous = set_warning_handler([&](const std::string& m) { warnings.push_back(m); });
    CHECK(price(s, 1200.0, 1200.0) == doctest::Approx(0.03));
    CHECK(price(s, 7000.0, 1200.0) == doctest::Approx(17.43));
    CHECK(warnings.empty());
    CHECK(price(s, 1200.0 - 0.03 / 0.003, 1200.0) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(warnings.size() == 1);
    set_warning_handler(previous);
  }

  TEST_CASE("calibrated segment feeds a scenario") {
    const auto segs = calibrate_price_curve(two_generator_fleet(), {0.0, 20.0, 0.5});
    const auto s = with_price_segment(benchmark_scenario(), segs[1]);
    CHECK(s.alpha == doctest::Approx(4.0));
    CHECK(s.beta0 == doctest::Approx(-12.0));
  }
}
