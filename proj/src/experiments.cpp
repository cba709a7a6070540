#include "vpp/experiments.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>

#include "vpp/csv.hpp"
#include "vpp/io.hpp"

namespace vpp {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class Fn>
void write_file(const fs::path& dir, const std::string& name, Fn&& fn) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory " + dir.string() + ": " + ec.message());
  const auto path = dir / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  fn(out);
  out.flush();
  if (!out) throw InputError("failed writing " + path.string());
}

}  // namespace

double correlation(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 2) return kNaN;
  const double mx = std::accumulate(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return kNaN;
  return sxy / std::sqrt(sxx * syy);
}

double l2_distance(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("paths differ in length");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(s);
}

// --- calibrate --------------------------------------------------------------

void write_price_curve(std::ostream& out, const std::vector<PriceSegment>& segments) {
  CsvWriter csv(out, "price_curve", {"segment_index", "slope", "intercept", "q_lo", "q_hi"});
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    csv.row({static_cast<long>(i), s.slope, s.intercept, s.q_lo, s.q_hi});
  }
}

std::vector<PriceSegment> cmd_calibrate(const GeneratorFleet& fleet, const SweepRange& sweep,
                                        const fs::path& out_dir) {
  auto segments = calibrate_price_curve(fleet, sweep);
  write_file(out_dir, "price_curve.csv", [&](std::ostream& o) { write_price_curve(o, segments); });
  return segments;
}

// --- converge ---------------------------------------------------------------

std::vector<ConvergeRun> run_converge(const Scenario& s, const ConvergeArgs& args) {
  std::vector<long> ls = args.subregions;
  if (ls.empty()) ls.push_back(static_cast<long>(s.num_subregions()));
  const RandomStream root(args.seed, 0);
  std::vector<ConvergeRun> runs;
  for (long L : ls) {
    if (L < 1) throw std::invalid_argument("subregion counts must be positive");
    for (long n : args.consumers) {
      Scenario sc = replicate_subregions(s, static_cast<std::size_t>(L));
      sc.consumers_per_subregion = n;
      sc = validate_scenario(std::move(sc));
      const auto run_rng = root.substream(static_cast<std::uint64_t>(L)).substream(static_cast<std::uint64_t>(n));
      auto w_rng = run_rng.substream(0);
      std::vector<double> w;
      for (const auto& sr : sc.subregions) w.push_back(sample_renewable(sr, w_rng));
      DppOptions opts;
      opts.eps = args.eps;
      opts.max_iter = args.max_iter;
      opts.keep_demands = false;
      ConvergeRun run{L, n, dpp_run(sc, w, run_rng.substream(1), opts), std::nullopt};
      const auto& st = run.state;
      if (st.converged()) {
        const double r1 = st.history.size() > 1 ? st.history[1].residual : 0.0;
        const double rho = st.c1.spectral_radius;
        if (r1 <= args.eps || !(rho > 0.0))
          run.predicted_iterations = 1;
        else
          run.predicted_iterations = 1 + static_cast<long>(std::ceil(std::log(args.eps / r1) / std::log(rho)));
      }
      runs.push_back(std::move(run));
    }
  }
  return runs;
}

void write_trajectory(std::ostream& out, const DppState& state) {
  CsvWriter csv(out, "trajectory", {"iter", "sr", "beta", "F", "avg_demand", "residual"});
  for (const auto& rec : state.history)
    for (std::size_t l = 0; l < rec.F.size(); ++l)
      csv.row({rec.iteration, static_cast<long>(l), rec.beta[l], rec.F[l], rec.avg_demand[l], rec.residual});
}

void write_converge_summary(std::ostream& out, const std::vector<ConvergeRun>& runs) {
  CsvWriter csv(out, "converge_summary",
                {"L", "I", "c1_holds", "spectral_radius", "converged", "status", "iters", "predicted_iters",
                 "final_residual"});
  for (const auto& r : runs) {
    const auto& st = r.state;
    csv.row({r.subregions, r.consumers, st.c1.holds, st.c1.spectral_radius, st.converged(), to_string(st.status),
             st.iterations, r.predicted_iterations ? CsvCell{*r.predicted_iterations} : CsvCell{kNaN},
             st.residual});
  }
}

std::vector<ConvergeRun> cmd_converge(const Scenario& s, const ConvergeArgs& args, const fs::path& out_dir) {
  auto runs = run_converge(s, args);
  for (const auto& r : runs) {
    const auto name = "trajectory_L" + std::to_string(r.subregions) + "_I" + std::to_string(r.consumers) + ".csv";
    write_file(out_dir, name, [&](std::ostream& o) { write_trajectory(o, r.state); });
  }
  write_file(out_dir, "converge_summary.csv", [&](std::ostream& o) { write_converge_summary(o, runs); });
  return runs;
}

// --- compare ----------------------------------------------------------------

CompareResult run_compare(const Scenario& s, const CompareArgs& args) {
  CompareResult r;
  r.closed_form = gap_moments_closed_form(s);
  if (check_c1(s).holds) r.monte_carlo = gap_moments_mc(s, args.trials, RandomStream(args.seed, 1), args.threads);
  r.sweep = profit_sweep(s, args.consumers, args.sigma_multipliers, args.trials, RandomStream(args.seed, 2),
                         args.threads);
  return r;
}

void write_gap_moments(std::ostream& out, const CompareResult& r) {
  CsvWriter csv(out, "gap_moments", {"sr", "source", "mean_gap", "var_gap", "ci_halfwidth", "trials"});
  auto emit = [&](const GapMoments& g) {
    for (std::size_t l = 0; l < g.size(); ++l)
      csv.row({static_cast<long>(l), to_string(g[l].source), g[l].mean_gap, g[l].var_gap, g[l].ci_halfwidth,
               g[l].trials});
  };
  if (r.monte_carlo)
    emit(*r.monte_carlo);
  else
    csv.note("Monte-Carlo moments skipped: condition C1 fails on the base scenario");
  emit(r.closed_form);
}

void write_sweep(std::ostream& out, const SweepResult& r) {
  CsvWriter csv(out, "compare_sweep",
                {"I", "sigma_mult", "sr", "mean_gap", "var_gap_mc", "var_gap_cf", "mean_profit_diff",
                 "var_profit_diff"});
  for (const auto& row : r.rows)
    csv.row({row.consumers, row.sigma_mult, static_cast<long>(row.sr), row.mean_gap, row.var_gap_mc, row.var_gap_cf,
             row.mean_profit_diff, row.var_profit_diff});
  for (const auto& n : r.notes) csv.note(n);
}

CompareResult cmd_compare(const Scenario& s, const CompareArgs& args, const fs::path& out_dir) {
  auto r = run_compare(s, args);
  write_file(out_dir, "gap_moments.csv", [&](std::ostream& o) { write_gap_moments(o, r); });
  write_file(out_dir, "compare_sweep.csv", [&](std::ostream& o) { write_sweep(o, r.sweep); });
  return r;
}

// --- surplus ----------------------------------------------------------------

std::vector<SurplusRow> run_surplus(const Scenario& s, const SurplusArgs& args) {
  std::vector<SurplusRow> rows;
  const RandomStream root(args.seed, 3);
  for (std::size_t k = 0; k < args.sigma_multipliers.size(); ++k) {
    const double mult = args.sigma_multipliers[k];
    const auto sc = validate_scenario(scale_variances(s, mult));
    rows.push_back({mult, expected_surplus_triple(sc), surplus_mc(sc, args.trials, root.substream(k), args.threads)});
  }
  return rows;
}

void write_surplus(std::ostream& out, const std::vector<SurplusRow>& rows) {
  CsvWriter csv(out, "surplus",
                {"sigma_mult", "complete", "centralized", "none", "dpp_mc", "dpp_mc_stderr", "gap_centralized",
                 "gap_dpp", "gap_none"});
  for (const auto& r : rows) {
    const auto& cf = r.closed_form;
    const double dpp = r.monte_carlo.decentralized.mean;
    csv.row({r.sigma_mult, cf.complete, cf.centralized, cf.none, dpp, r.monte_carlo.decentralized.std_error,
             cf.complete - cf.centralized, cf.complete - dpp, cf.complete - cf.none});
  }
}

std::vector<SurplusRow> cmd_surplus(const Scenario& s, const SurplusArgs& args, const fs::path& out_dir) {
  auto rows = run_surplus(s, args);
  write_file(out_dir, "surplus.csv", [&](std::ostream& o) { write_surplus(o, rows); });
  return rows;
}

// --- multiperiod ------------------------------------------------------------

MultiperiodOutput run_multiperiod(const MultiPeriodScenario& mp, const MultiperiodArgs& args) {
  MultiperiodOutput out;
  const RandomStream rng(args.seed, 4);
  MultiPeriodOptions opts;
  opts.eps = args.eps;
  for (Regime r : args.regimes) out.runs.push_back(regime_run(mp, r, rng, opts));
  const MultiPeriodResult* complete = nullptr;
  for (const auto& r : out.runs)
    if (r.regime == Regime::complete) complete = &r;
  for (const auto& r : out.runs)
    out.summary.push_back({r.regime, complete ? l2_distance(r.avg_demand, complete->avg_demand) : kNaN,
                           correlation(r.avg_demand, r.price)});
  return out;
}

void write_multiperiod(std::ostream& out, const std::vector<MultiPeriodResult>& runs) {
  CsvWriter csv(out, "multiperiod", {"period", "regime", "avg_demand", "price"});
  for (const auto& r : runs)
    for (std::size_t t = 0; t < r.avg_demand.size(); ++t)
      csv.row({static_cast<long>(t), to_string(r.regime), r.avg_demand[t], r.price[t]});
}

void write_multiperiod_summary(std::ostream& out, const std::vector<MultiperiodSummary>& summary) {
  CsvWriter csv(out, "multiperiod_summary", {"regime", "l2_to_complete", "corr_demand_price"});
  for (const auto& s : summary) csv.row({to_string(s.regime), s.l2_to_complete, s.corr_demand_price});
}

MultiperiodOutput cmd_multiperiod(const MultiPeriodScenario& mp, const MultiperiodArgs& args,
                                  const fs::path& out_dir) {
  auto out = run_multiperiod(mp, args);
  write_file(out_dir, "multiperiod.csv", [&](std::ostream& o) { write_multiperiod(o, out.runs); });
  write_file(out_dir, "multiperiod_summary.csv", [&](std::ostream& o) { write_multiperiod_summary(o, out.summary); });
  return out;
}

}  // namespace vpp
