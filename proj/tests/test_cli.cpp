#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

const std::string kCli = VPPSIM_CLI;
const std::string kData = VPPSIM_DATA;

int run(const std::string& args) {
  const std::string cmd = "\"" + kCli + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("vppsim_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Data rows: lines that are neither comments nor the header.
std::vector<std::string> data_rows(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> rows;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    rows.push_back(line);
  }
  return rows;
}

std::vector<std::string> fields(const std::string& row) {
  std::vector<std::string> out;
  std::stringstream ss(row);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(f);
  if (!row.empty() && row.back() == ',') out.emplace_back();
  return out;
}

std::string scenario() { return "--scenario \"" + kData + "/benchmark.json\""; }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("calibrate writes one segment per affine piece") {
    const auto dir = fresh_dir("calibrate");
    CHECK(run("calibrate --fleet \"" + kData + "/single_generator_fleet.json\" --out \"" + dir.string() + "\"") == 0);
    CHECK(data_rows(dir / "price_curve.csv").size() == 1);
    CHECK(run("calibrate --fleet \"" + kData + "/two_generator_fleet.json\" --out \"" + dir.string() + "\"") == 0);
    const auto rows = data_rows(dir / "price_curve.csv");
    REQUIRE(rows.size() == 2);
    CHECK(std::stod(fields(rows[0])[4]) == doctest::Approx(4.5).epsilon(1e-8));
    CHECK(slurp(dir / "price_curve.csv").rfind("# schema: vppsim.price_curve/v1\n", 0) == 0);
    fs::remove_all(dir);
  }

  TEST_CASE("exit codes") {
    const auto dir = fresh_dir("codes");
    const std::string out = " --out \"" + dir.string() + "\"";
    CHECK(run("calibrate --fleet /nonexistent/fleet.json" + out) == 2);
    CHECK(run("calibrate --fleet \"" + kData + "/two_generator_fleet.json\" --q-max 500" + out) == 1);
    CHECK(run("") == 2);
    CHECK(run("frobnicate") == 2);
    CHECK(run("converge" + out) == 2);
    CHECK(run("converge " + scenario() + " --consumers 90,x" + out) == 2);
    CHECK(run("converge " + scenario() + " --set nonexistent=1" + out) == 2);
    CHECK(run("converge " + scenario() + " --set alpha=-1" + out) == 2);
    CHECK(run("multiperiod --scenario \"" + kData + "/multiperiod.json\" --regime dp" + out) == 2);
    CHECK(run("compare " + scenario() + " --trials 10 --consumers 300 --sigma-mults 1" + out) == 2);
    CHECK(run("--help") == 0);
    fs::remove_all(dir);
  }

  TEST_CASE("converge reports convergence per consumer count") {
    const auto dir = fresh_dir("converge");
    REQUIRE(run("converge " + scenario() + " --out \"" + dir.string() + "\"") == 0);
    const auto rows = data_rows(dir / "converge_summary.csv");
    REQUIRE(rows.size() == 4);
    const std::vector<std::string> expected{"true", "true", "true", "false"};
    for (std::size_t k = 0; k < 4; ++k) CHECK(fields(rows[k])[4] == expected[k]);
    for (long n : {90, 300, 900, 3000}) CHECK(fs::exists(dir / ("trajectory_L3_I" + std::to_string(n) + ".csv")));
    fs::remove_all(dir);
  }

  TEST_CASE("smaller eps needs at least as many iterations") {
    const auto dir = fresh_dir("eps");
    long last = 0;
    for (const char* eps : {"1e-3", "1e-6", "1e-9"}) {
      REQUIRE(run("converge " + scenario() + " --consumers 300 --eps " + eps + " --out \"" + dir.string() + "\"") ==
              0);
      const auto rows = data_rows(dir / "converge_summary.csv");
      REQUIRE(rows.size() == 1);
      const long iters = std::stol(fields(rows[0])[6]);
      CHECK(iters >= last);
      last = iters;
    }
    fs::remove_all(dir);
  }

  TEST_CASE("compare is byte-identical for a fixed seed") {
    const auto a = fresh_dir("cmp_a"), b = fresh_dir("cmp_b");
    const std::string args = "compare " + scenario() + " --trials 2000 --consumers 200,400 --sigma-mults 1,2 --seed 9";
    REQUIRE(run(args + " --threads 1 --out \"" + a.string() + "\"") == 0);
    REQUIRE(run(args + " --threads 3 --out \"" + b.string() + "\"") == 0);
    CHECK(slurp(a / "compare_sweep.csv") == slurp(b / "compare_sweep.csv"));
    CHECK(slurp(a / "gap_moments.csv") == slurp(b / "gap_moments.csv"));
    CHECK(data_rows(a / "compare_sweep.csv").size() == 12);
    fs::remove_all(a);
    fs::remove_all(b);
  }

  TEST_CASE("different seeds agree within confidence intervals") {
    const auto a = fresh_dir("seed_a"), b = fresh_dir("seed_b");
    const std::string args = "compare " + scenario() + " --trials 20000 --consumers \"\"";
    REQUIRE(run(args + " --seed 1 --out \"" + a.string() + "\"") == 0);
    REQUIRE(run(args + " --seed 2 --out \"" + b.string() + "\"") == 0);
    const auto ra = data_rows(a / "gap_moments.csv"), rb = data_rows(b / "gap_moments.csv");
    REQUIRE(ra.size() == rb.size());
    for (std::size_t k = 0; k < ra.size(); ++k) {
      const auto fa = fields(ra[k]), fb = fields(rb[k]);
      if (fa[1] != "monte-carlo") continue;
      const double diff = std::abs(std::stod(fa[2]) - std::stod(fb[2]));
      CHECK(diff <= std::stod(fa[4]) + std::stod(fb[4]));
    }
    fs::remove_all(a);
    fs::remove_all(b);
  }

  TEST_CASE("empty sweep writes a header-only table") {
    const auto dir = fresh_dir("empty");
    REQUIRE(run("compare " + scenario() + " --trials 1000 --consumers \"\" --out \"" + dir.string() + "\"") == 0);
    CHECK(data_rows(dir / "compare_sweep.csv").empty());
    CHECK(slurp(dir / "compare_sweep.csv").find("mean_profit_diff") != std::string::npos);
    fs::remove_all(dir);
  }

  TEST_CASE("surplus with one multiplier writes one row") {
    const auto dir = fresh_dir("surplus");
    REQUIRE(run("surplus " + scenario() + " --sigma-mults 2 --trials 2000 --out \"" + dir.string() + "\"") == 0);
    const auto rows = data_rows(dir / "surplus.csv");
    REQUIRE(rows.size() == 1);
    const auto f = fields(rows[0]);
    CHECK(std::stod(f[0]) == 2.0);
    const double gap_cen = std::stod(f[6]), gap_none = std::stod(f[8]);
    CHECK(gap_cen >= 0.0);
    CHECK(gap_none >= gap_cen);
    fs::remove_all(dir);
  }

  TEST_CASE("overrides reach the scenario") {
    const auto a = fresh_dir("ovr_a");
    REQUIRE(run("converge " + scenario() + " --consumers 300 --set u=16 --out \"" +
                a.string() + "\"") == 0);
    const auto rows = data_rows(a / "converge_summary.csv");
    REQUIRE(rows.size() == 1);
    // rho = 2 gamma / (gamma + u) with gamma = 0.9, u = 16
    CHECK(std::stod(fields(rows[0])[3]) == doctest::Approx(1.8 / 16.9).epsilon(1e-12));
    fs::remove_all(a);
  }

  TEST_CASE("multiperiod writes both tables") {
    const auto dir = fresh_dir("mp");
    REQUIRE(run("multiperiod --scenario \"" + kData + "/multiperiod.json\" --regime none --out \"" + dir.string() +
                "\"") == 0);
    CHECK(data_rows(dir / "multiperiod.csv").size() == 24);
    CHECK(data_rows(dir / "multiperiod_summary.csv").size() == 1);
    fs::remove_all(dir);
  }
}
