#include "vpp/market_clearing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "vpp/diagnostics.hpp"
#include "vpp/io.hpp"

namespace vpp {

using nlohmann::json;

double GeneratorFleet::total_fixed_demand() const {
  return std::accumulate(fixed_demands.begin(), fixed_demands.end(), 0.0);
}

double GeneratorFleet::min_output() const {
  double s = 0.0;
  for (const auto& g : generators) s += g.g_min;
  return s;
}

double GeneratorFleet::max_output() const {
  double s = 0.0;
  for (const auto& g : generators) s += g.g_max;
  return s;
}

GeneratorFleet validate_fleet(GeneratorFleet fleet) {
  std::vector<std::string> bad;
  if (fleet.generators.empty()) bad.emplace_back("fleet needs at least one generator");
  for (std::size_t n = 0; n < fleet.generators.size(); ++n) {
    const auto& g = fleet.generators[n];
    const std::string p = "generators[" + std::to_string(n) + "].";
    if (!(g.cost_quad >= 0.0)) bad.push_back(p + "cost_quad must be nonnegative");
    if (!(g.cost_lin >= 0.0)) bad.push_back(p + "cost_lin must be nonnegative");
    if (!std::isfinite(g.g_min) || !std::isfinite(g.g_max) || !(g.g_min <= g.g_max))
      bad.push_back(p + "g_min must not exceed g_max");
  }
  for (std::size_t s = 0; s < fleet.lines.size(); ++s) {
    const auto& line = fleet.lines[s];
    const std::string p = "lines[" + std::to_string(s) + "].";
    if (!(line.capacity > 0.0)) bad.push_back(p + "capacity must be positive");
    if (line.generator_factors.size() != fleet.generators.size())
      bad.push_back(p + "generator_factors needs one entry per generator");
    if (line.fixed_demand_factors.size() != fleet.fixed_demands.size())
      bad.push_back(p + "fixed_demand_factors needs one entry per fixed demand");
  }
  if (!bad.empty()) throw ValidationError(std::move(bad));
  return fleet;
}

namespace {

double num(const json& obj, const char* key, const std::string& where, bool required = true,
           double fallback = 0.0) {
  if (!obj.contains(key)) {
    if (required) throw InputError(where + ": missing key '" + key + "'");
    return fallback;
  }
  if (!obj.at(key).is_number()) throw InputError(where + ": '" + key + "' must be a number");
  return obj.at(key).get<double>();
}

std::vector<double> num_array(const json& obj, const char* key, const std::string& where) {
  std::vector<double> out;
  if (!obj.contains(key)) return out;
  const auto& a = obj.at(key);
  if (!a.is_array()) throw InputError(where + ": '" + key + "' must be an array");
  for (const auto& v : a) {
    if (!v.is_number()) throw InputError(where + ": '" + key + "' must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

GeneratorFleet fleet_from_json(const json& j) {
  require_known_keys(j, {"generators", "lines", "fixed_demands"}, "fleet");
  GeneratorFleet fleet;
  if (!j.contains("generators") || !j.at("generators").is_array())
    throw InputError("fleet: 'generators' must be an array");
  const auto& gens = j.at("generators");
  for (std::size_t n = 0; n < gens.size(); ++n) {
    const std::string w = "fleet.generators[" + std::to_string(n) + "]";
    require_known_keys(gens[n], {"name", "cost_quad", "cost_lin", "g_min", "g_max"}, w);
    Generator g;
    g.name = gens[n].value("name", "g" + std::to_string(n + 1));
    g.cost_quad = num(gens[n], "cost_quad", w);
    g.cost_lin = num(gens[n], "cost_lin", w);
    g.g_min = num(gens[n], "g_min", w);
    g.g_max = num(gens[n], "g_max", w);
    fleet.generators.push_back(g);
  }
  fleet.fixed_demands = num_array(j, "fixed_demands", "fleet");
  if (j.contains("lines")) {
    if (!j.at("lines").is_array()) throw InputError("fleet: 'lines' must be an array");
    const auto& lines = j.at("lines");
    for (std::size_t s = 0; s < lines.size(); ++s) {
      const std::string w = "fleet.lines[" + std::to_string(s) + "]";
      require_known_keys(lines[s],
                         {"name", "capacity", "generator_factors", "fixed_demand_factors", "vpp_factor"}, w);
      Line line;
      line.name = lines[s].value("name", "line" + std::to_string(s + 1));
      line.capacity = num(lines[s], "capacity", w);
      line.generator_factors = num_array(lines[s], "generator_factors", w);
      line.fixed_demand_factors = num_array(lines[s], "fixed_demand_factors", w);
      line.vpp_factor = num(lines[s], "vpp_factor", w, false, 0.0);
      fleet.lines.push_back(line);
    }
  }
  return validate_fleet(std::move(fleet));
}

json fleet_to_json(const GeneratorFleet& fleet) {
  json j;
  json gens = json::array();
  for (const auto& g : fleet.generators)
    gens.push_back({{"name", g.name},
                    {"cost_quad", g.cost_quad},
                    {"cost_lin", g.cost_lin},
                    {"g_min", g.g_min},
                    {"g_max", g.g_max}});
  j["generators"] = gens;
  j["fixed_demands"] = fleet.fixed_demands;
  json lines = json::array();
  for (const auto& l : fleet.lines)
    lines.push_back({{"name", l.name},
                     {"capacity", l.capacity},
                     {"generator_factors", l.generator_factors},
                     {"fixed_demand_factors", l.fixed_demand_factors},
                     {"vpp_factor", l.vpp_factor}});
  j["lines"] = lines;
  return j;
}

GeneratorFleet load_fleet(const std::filesystem::path& path) { return fleet_from_json(read_json_file(path)); }

std::string to_string(const BoundConstraint& b) {
  return "g" + std::to_string(b.generator + 1) + (b.side == BoundConstraint::Side::lower ? ":min" : ":max");
}

double DispatchResult::balance_residual() const {
  return std::accumulate(outputs.begin(), outputs.end(), 0.0) - net_demand;
}

// ---------------------------------------------------------------------------
// Water-filling

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Aggregate supply of the fleet as a function of the marginal price. Each
// generator with c_n > 0 contributes clamp((p - d_n) / 2c_n, g_min, g_max);
// a generator with c_n = 0 jumps from g_min to g_max at p = d_n.
class SupplyCurve {
 public:
  explicit SupplyCurve(const GeneratorFleet& fleet) : gens_(fleet.generators) {
    for (const auto& g : gens_) {
      if (g.cost_quad > 0.0) {
        kinks_.push_back(2.0 * g.cost_quad * g.g_min + g.cost_lin);
        kinks_.push_back(2.0 * g.cost_quad * g.g_max + g.cost_lin);
      } else {
        kinks_.push_back(g.cost_lin);
      }
    }
    std::sort(kinks_.begin(), kinks_.end());
    kinks_.erase(std::unique(kinks_.begin(), kinks_.end()), kinks_.end());
  }

  // Supply limits at price p: [lower, upper] differ only where a c_n = 0
  // generator is marginal.
  std::pair<double, double> at(double p) const {
    double lo = 0.0;
    double hi = 0.0;
    for (const auto& g : gens_) {
      if (g.cost_quad > 0.0) {
        // compare against the kinks themselves so the ends are hit exactly
        const double x = p <= 2.0 * g.cost_quad * g.g_min + g.cost_lin   ? g.g_min
                         : p >= 2.0 * g.cost_quad * g.g_max + g.cost_lin ? g.g_max
                                                                          : (p - g.cost_lin) / (2.0 * g.cost_quad);
        lo += x;
        hi += x;
      } else if (p < g.cost_lin) {
        lo += g.g_min;
        hi += g.g_min;
      } else if (p > g.cost_lin) {
        lo += g.g_max;
        hi += g.g_max;
      } else {
        lo += g.g_min;
        hi += g.g_max;
      }
    }
    return {lo, hi};
  }

  // Sum of 1 / 2c_n over generators strictly inside their range on (a, b).
  double slope_between(double a, double b) const {
    const double mid = std::isinf(a) ? b - 1.0 : (std::isinf(b) ? a + 1.0 : 0.5 * (a + b));
    double s = 0.0;
    for (const auto& g : gens_) {
      if (!(g.cost_quad > 0.0)) continue;
      const double lo = 2.0 * g.cost_quad * g.g_min + g.cost_lin;
      const double hi = 2.0 * g.cost_quad * g.g_max + g.cost_lin;
      if (mid > lo && mid < hi) s += 1.0 / (2.0 * g.cost_quad);
    }
    return s;
  }

  // inf { p : upper(p) >= q }
  double lowest_price(double q, double total_min) const {
    if (q <= total_min) return -kInf;
    double prev = -kInf;
    double prev_upper = total_min;
    for (double k : kinks_) {
      const auto [lo, hi] = at(k);
      if (hi >= q) {
        if (!std::isinf(prev) && q <= lo) {
          const double slope = slope_between(prev, k);
          if (slope > 0.0) return std::min(k, prev + (q - prev_upper) / slope);
        }
        return k;
      }
      prev = k;
      prev_upper = hi;
    }
    return kInf;
  }

  // sup { p : lower(p) <= q }
  double highest_price(double q, double total_max) const {
    if (q >= total_max) return kInf;
    double next = kInf;
    for (auto it = kinks_.rbegin(); it != kinks_.rend(); ++it) {
      const double k = *it;
      const auto [lo, hi] = at(k);
      if (lo <= q) {
        if (!std::isinf(next) && q >= hi) {
          const double slope = slope_between(k, next);
          if (slope > 0.0) return std::max(k, k + (q - hi) / slope);
        }
        return k;
      }
      next = k;
    }
    return -kInf;
  }

 private:
  std::vector<Generator> gens_;
  std::vector<double> kinks_;
};

}  // namespace

DispatchResult solve_dispatch(const GeneratorFleet& fleet, double vpp_demand, double renewable_total) {
  const double q = vpp_demand + fleet.total_fixed_demand() - renewable_total;
  const double total_min = fleet.min_output();
  const double total_max = fleet.max_output();
  const double feas_tol = 1e-12 * std::max(1.0, std::max(std::abs(total_min), std::abs(total_max)));
  if (q < total_min - feas_tol || q > total_max + feas_tol) {
    std::ostringstream os;
    os << "net demand " << q << " kWh is outside the fleet range [" << total_min << ", " << total_max << "]";
    throw InfeasibleError(os.str());
  }
  const double qc = std::clamp(q, total_min, total_max);

  const SupplyCurve supply(fleet);
  const double p_lo = supply.lowest_price(qc, total_min);
  const double p_hi = supply.highest_price(qc, total_max);
  double p = 0.0;
  if (std::isinf(p_lo) && std::isinf(p_hi)) {
    throw DegenerateDualError("balance multiplier is unbounded: the fleet has a single operating point");
  } else if (std::isinf(p_lo)) {
    p = p_hi;
  } else if (std::isinf(p_hi)) {
    p = p_lo;
  } else {
    if (p_hi - p_lo > 1e-10 * std::max(1.0, std::abs(p_lo))) {
      std::ostringstream os;
      os << "balance multiplier is not unique at net demand " << q << ": any value in [" << p_lo << ", "
         << p_hi << "] is optimal";
      throw DegenerateDualError(os.str());
    }
    p = 0.5 * (p_lo + p_hi);
  }

  DispatchResult res;
  res.price = p;
  res.net_demand = q;
  res.outputs.resize(fleet.generators.size());
  double assigned = 0.0;
  std::vector<std::size_t> marginal_flat;
  for (std::size_t n = 0; n < fleet.generators.size(); ++n) {
    const auto& g = fleet.generators[n];
    if (g.cost_quad > 0.0) {
      res.outputs[n] = std::clamp((p - g.cost_lin) / (2.0 * g.cost_quad), g.g_min, g.g_max);
    } else if (p < g.cost_lin) {
      res.outputs[n] = g.g_min;
    } else if (p > g.cost_lin) {
      res.outputs[n] = g.g_max;
    } else {
      res.outputs[n] = g.g_min;
      marginal_flat.push_back(n);
    }
    assigned += res.outputs[n];
  }
  if (!marginal_flat.empty()) {
    // Linear-cost units at the margin share the residual in proportion to range.
    double room = 0.0;
    for (auto n : marginal_flat) room += fleet.generators[n].g_max - fleet.generators[n].g_min;
    const double residual = std::clamp(qc - assigned, 0.0, room);
    for (auto n : marginal_flat) {
      const auto& g = fleet.generators[n];
      const double share = room > 0.0 ? (g.g_max - g.g_min) / room : 0.0;
      res.outputs[n] = g.g_min + share * residual;
    }
  }

  for (std::size_t n = 0; n < fleet.generators.size(); ++n) {
    const auto& g = fleet.generators[n];
    bool at_min = false;
    bool at_max = false;
    if (g.cost_quad > 0.0) {
      at_min = p < 2.0 * g.cost_quad * g.g_min + g.cost_lin;
      at_max = p >= 2.0 * g.cost_quad * g.g_max + g.cost_lin;
    } else if (p < g.cost_lin) {
      at_min = true;
    } else if (p > g.cost_lin) {
      at_max = true;
    } else {
      at_max = res.outputs[n] >= g.g_max - 1e-12 * std::max(1.0, std::abs(g.g_max));
    }
    if (at_max)
      res.binding_set.push_back({n, BoundConstraint::Side::upper});
    else if (at_min)
      res.binding_set.push_back({n, BoundConstraint::Side::lower});
  }

  for (std::size_t s = 0; s < fleet.lines.size(); ++s) {
    const auto& line = fleet.lines[s];
    double flow = line.vpp_factor * (renewable_total - vpp_demand);
    for (std::size_t n = 0; n < res.outputs.size(); ++n) flow += line.generator_factors[n] * res.outputs[n];
    for (std::size_t j = 0; j < fleet.fixed_demands.size(); ++j)
      flow -= line.fixed_demand_factors[j] * fleet.fixed_demands[j];
    if (std::abs(flow) > line.capacity * (1.0 + 1e-12)) res.line_violations.push_back({s, flow, line.capacity});
  }
  return res;
}

// ---------------------------------------------------------------------------
// Calibration

namespace {

struct Probe {
  double q;
  double price;
  std::vector<BoundConstraint> binding;
};

Probe probe(const GeneratorFleet& fleet, double q) {
  auto r = solve_dispatch(fleet, q, 0.0);
  return {q, r.price, std::move(r.binding_set)};
}

}  // namespace

std::vector<PriceSegment> calibrate_price_curve(const GeneratorFleet& fleet, const SweepRange& sweep) {
  if (!(sweep.step > 0.0) || !(sweep.q_max >= sweep.q_min))
    throw std::invalid_argument("sweep needs q_max >= q_min and a positive step");
  const auto span = sweep.q_max - sweep.q_min;
  const auto n_steps = static_cast<long>(std::ceil(span / sweep.step - 1e-9));
  std::vector<Probe> grid;
  for (long k = 0; k <= n_steps; ++k) {
    const double q = k == n_steps ? sweep.q_max : sweep.q_min + static_cast<double>(k) * sweep.step;
    grid.push_back(probe(fleet, q));
    if (n_steps == 0) break;
  }

  // Breakpoints: first point carrying a new binding set.
  struct Piece {
    double lo;
    double hi;
    std::vector<BoundConstraint> binding;
  };
  std::vector<Piece> pieces;
  pieces.push_back({grid.front().q, grid.front().q, grid.front().binding});
  for (std::size_t k = 1; k < grid.size(); ++k) {
    double left = pieces.back().hi;
    while (grid[k].binding != pieces.back().binding) {
      double a = left;
      double b = grid[k].q;
      std::vector<BoundConstraint> b_set = grid[k].binding;
      while (b - a > kBreakpointTolerance) {
        const double mid = 0.5 * (a + b);
        auto pm = probe(fleet, mid);
        if (pm.binding == pieces.back().binding) {
          a = mid;
        } else {
          b = mid;
          b_set = std::move(pm.binding);
        }
      }
      pieces.back().hi = b;
      pieces.push_back({b, b, b_set});
      left = b;
    }
    pieces.back().hi = grid[k].q;
  }

  // Pieces narrower than the bisection width only arise at the range ends.
  std::vector<Piece> kept;
  for (const auto& p : pieces) {
    if (p.hi - p.lo < 2.0 * kBreakpointTolerance && (pieces.size() > 1)) {
      if (!kept.empty()) kept.back().hi = p.hi;
      continue;
    }
    if (!kept.empty() && p.lo > kept.back().hi) kept.back().hi = p.lo;
    kept.push_back(p);
  }
  if (kept.empty()) kept.push_back(pieces.front());

  std::vector<PriceSegment> segments;
  for (const auto& p : kept) {
    PriceSegment seg;
    seg.q_lo = p.lo;
    seg.q_hi = p.hi;
    if (p.hi > p.lo) {
      const double x1 = p.lo + 0.25 * (p.hi - p.lo);
      const double x2 = p.lo + 0.75 * (p.hi - p.lo);
      const double y1 = probe(fleet, x1).price;
      const double y2 = probe(fleet, x2).price;
      seg.slope = (y2 - y1) / (x2 - x1);
      seg.intercept = y1 - seg.slope * x1;
    } else {
      seg.slope = 0.0;
      seg.intercept = probe(fleet, p.lo).price;
    }
    segments.push_back(seg);
  }

  // Pin breakpoints at the intersection of adjacent pieces when it lies in
  // the bisection bracket.
  for (std::size_t i = 0; i + 1 < segments.size(); ++i) {
    auto& a = segments[i];
    auto& b = segments[i + 1];
    if (a.slope == b.slope) continue;
    const double x = (b.intercept - a.intercept) / (a.slope - b.slope);
    if (std::abs(x - b.q_lo) <= 2.0 * kBreakpointTolerance) {
      a.q_hi = x;
      b.q_lo = x;
    }
  }

  for (const auto& g : grid) {
    for (const auto& seg : segments) {
      if (g.q <= seg.q_lo + kBreakpointTolerance || g.q >= seg.q_hi - kBreakpointTolerance) continue;
      const double err = std::abs(seg.price(g.q) - g.price);
      if (err > 1e-9 * std::max(1.0, std::abs(g.price))) {
        std::ostringstream os;
        os << "price curve is not affine on [" << seg.q_lo << ", " << seg.q_hi << "]: residual " << err
           << " at q=" << g.q;
        throw NumericalError(os.str());
      }
    }
  }
  return segments;
}

double price(const Scenario& scenario, double total_demand, double total_renewable) {
  const double p = scenario.alpha * (total_demand - total_renewable) + scenario.beta0;
  if (!(p > 0.0)) {
    std::ostringstream os;
    os << "price " << p << " $/kWh is not positive (demand " << total_demand << ", renewable "
       << total_renewable << ")";
    warn(os.str());
  }
  return p;
}

Scenario with_price_segment(Scenario scenario, const PriceSegment& segment) {
  scenario.alpha = segment.slope;
  scenario.beta0 = segment.intercept;
  return validate_scenario(std::move(scenario));
}

}  // namespace vpp
