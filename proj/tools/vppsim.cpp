#include <charconv>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vpp/errors.hpp"
#include "vpp/experiments.hpp"
#include "vpp/io.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kNumerical = 1;
constexpr int kUsage = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  if (!cur.empty() || !out.empty()) out.push_back(cur);
  return out;
}

template <class T>
std::vector<T> parse_list(const std::string& text, const char* flag) {
  std::vector<T> out;
  for (const auto& item : split(text)) {
    T v{};
    const auto r = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || r.ec != std::errc() || r.ptr != item.data() + item.size())
      throw UsageError(std::string("invalid value '") + item + "' in " + flag);
    out.push_back(v);
  }
  return out;
}

nlohmann::json load_document(const std::string& path, const std::vector<std::string>& overrides) {
  auto doc = vpp::read_json_file(path);
  vpp::apply_overrides(doc, overrides);
  return doc;
}

struct Common {
  std::string scenario;
  std::string out = "out";
  std::uint64_t seed = 1;
  std::vector<std::string> overrides;
  unsigned threads = 0;
};

void add_common(CLI::App* cmd, Common& c, bool scenario_required = true) {
  auto* opt = cmd->add_option("--scenario", c.scenario, "Scenario JSON file");
  if (scenario_required) opt->required();
  cmd->add_option("--out", c.out, "Output directory")->capture_default_str();
  cmd->add_option("--seed", c.seed, "Master seed")->capture_default_str();
  cmd->add_option("--set", c.overrides, "Override a scenario field, key=value (repeatable)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Virtual power plant prediction-economy simulator"};
  app.require_subcommand(1);

  Common common;
  std::string fleet_path;
  vpp::SweepRange sweep{0.0, 20.0, 0.5};
  auto* calibrate = app.add_subcommand("calibrate", "Calibrate the piecewise-affine price curve of a fleet");
  calibrate->add_option("--fleet", fleet_path, "Generator fleet JSON file")->required();
  calibrate->add_option("--out", common.out, "Output directory")->capture_default_str();
  calibrate->add_option("--set", common.overrides, "Override a fleet field, key=value (repeatable)");
  calibrate->add_option("--q-min", sweep.q_min, "Sweep start, kWh")->capture_default_str();
  calibrate->add_option("--q-max", sweep.q_max, "Sweep end, kWh")->capture_default_str();
  calibrate->add_option("--step", sweep.step, "Sweep step, kWh")->capture_default_str();

  vpp::ConvergeArgs conv;
  std::string conv_consumers = "90,300,900,3000";
  std::string conv_subregions;
  auto* converge = app.add_subcommand("converge", "Run the decentralized iteration for several consumer counts");
  add_common(converge, common);
  converge->add_option("--consumers", conv_consumers, "Consumers per subregion, comma separated")
      ->capture_default_str();
  converge->add_option("--subregions", conv_subregions, "Subregion counts, comma separated (default: scenario's)");
  converge->add_option("--eps", conv.eps, "Stopping tolerance, kWh")->capture_default_str();
  converge->add_option("--max-iter", conv.max_iter, "Iteration limit")->capture_default_str();

  vpp::CompareArgs cmp;
  std::string cmp_consumers = "200,400,600,800,1000,1200,1400";
  std::string cmp_mults = "1,1.5,2,2.5,3,3.5";
  auto* compare = app.add_subcommand("compare", "Gap and profit moments of centralized vs decentralized schemes");
  add_common(compare, common);
  compare->add_option("--trials", cmp.trials, "Monte-Carlo trials per grid point")->capture_default_str();
  compare->add_option("--consumers", cmp_consumers, "Sweep of consumers per subregion (empty for none)")
      ->capture_default_str();
  compare->add_option("--sigma-mults", cmp_mults, "Sweep of variance multipliers")->capture_default_str();
  compare->add_option("--threads", common.threads, "Worker threads (0: all cores)")->capture_default_str();

  vpp::SurplusArgs sur;
  std::string sur_mults = "1,2,3,4,5,6";
  auto* surplus = app.add_subcommand("surplus", "Expected total surplus of the information regimes");
  add_common(surplus, common);
  surplus->add_option("--sigma-mults", sur_mults, "Variance multipliers")->capture_default_str();
  surplus->add_option("--trials", sur.trials, "Monte-Carlo draws per multiplier")->capture_default_str();
  surplus->add_option("--threads", common.threads, "Worker threads (0: all cores)")->capture_default_str();

  vpp::MultiperiodArgs mpa;
  std::string regime = "all";
  auto* multiperiod = app.add_subcommand("multiperiod", "Multi-period schedules under the information regimes");
  add_common(multiperiod, common);
  multiperiod->add_option("--regime", regime, "complete, dpp, none or all")->capture_default_str();
  multiperiod->add_option("--eps", mpa.eps, "Joint stopping tolerance, kWh")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*calibrate) {
      const auto fleet = vpp::fleet_from_json(load_document(fleet_path, common.overrides));
      const auto segments = vpp::cmd_calibrate(fleet, sweep, common.out);
      std::cout << segments.size() << " segment(s) written to " << common.out << "/price_curve.csv\n";
    } else if (*converge) {
      const auto s = vpp::scenario_from_json(load_document(common.scenario, common.overrides));
      conv.consumers = parse_list<long>(conv_consumers, "--consumers");
      conv.subregions = parse_list<long>(conv_subregions, "--subregions");
      conv.seed = common.seed;
      const auto runs = vpp::cmd_converge(s, conv, common.out);
      for (const auto& r : runs)
        std::cout << "L=" << r.subregions << " I=" << r.consumers << " " << to_string(r.state.status) << " after "
                  << r.state.iterations << " iterations (rho=" << r.state.c1.spectral_radius << ")\n";
    } else if (*compare) {
      const auto s = vpp::scenario_from_json(load_document(common.scenario, common.overrides));
      cmp.consumers = parse_list<long>(cmp_consumers, "--consumers");
      cmp.sigma_multipliers = parse_list<double>(cmp_mults, "--sigma-mults");
      cmp.seed = common.seed;
      cmp.threads = common.threads;
      const auto r = vpp::cmd_compare(s, cmp, common.out);
      std::cout << r.sweep.rows.size() << " sweep row(s), " << r.sweep.notes.size() << " skipped grid point(s)\n";
    } else if (*surplus) {
      const auto s = vpp::scenario_from_json(load_document(common.scenario, common.overrides));
      sur.sigma_multipliers = parse_list<double>(sur_mults, "--sigma-mults");
      sur.seed = common.seed;
      sur.threads = common.threads;
      const auto rows = vpp::cmd_surplus(s, sur, common.out);
      std::cout << rows.size() << " surplus row(s) written\n";
    } else if (*multiperiod) {
      const auto mp = vpp::multiperiod_from_json(load_document(common.scenario, common.overrides));
      if (regime != "all") {
        try {
          mpa.regimes = {vpp::parse_regime(regime)};
        } catch (const std::invalid_argument& e) {
          throw UsageError(e.what());
        }
      }
      mpa.seed = common.seed;
      const auto out = vpp::cmd_multiperiod(mp, mpa, common.out);
      for (const auto& s : out.summary)
        std::cout << to_string(s.regime) << ": L2 to complete " << s.l2_to_complete << ", corr(demand, price) "
                  << s.corr_demand_price << "\n";
    }
  } catch (const vpp::NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const vpp::InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  }
  return kOk;
}
