#include "vpp/core_model.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace vpp {

std::string to_string(OutputDistribution d) {
  switch (d) {
    case OutputDistribution::truncated_normal:
      return "truncated-normal";
    case OutputDistribution::lognormal:
      return "lognormal";
  }
  return "unknown";
}

OutputDistribution parse_distribution(const std::string& name) {
  if (name == "truncated-normal") return OutputDistribution::truncated_normal;
  if (name == "lognormal") return OutputDistribution::lognormal;
  throw std::invalid_argument("unknown distribution '" + name +
                              "' (expected truncated-normal or lognormal)");
}

std::vector<double> Scenario::mean_outputs() const {
  std::vector<double> out;
  out.reserve(subregions.size());
  for (const auto& sr : subregions) out.push_back(sr.mean_output);
  return out;
}

std::vector<double> Scenario::var_outputs() const {
  std::vector<double> out;
  out.reserve(subregions.size());
  for (const auto& sr : subregions) out.push_back(sr.var_output);
  return out;
}

double Scenario::total_mean_output() const {
  double total = 0.0;
  for (const auto& sr : subregions) total += sr.mean_output;
  return total;
}

namespace {

std::string join(const std::vector<std::string>& items) {
  std::ostringstream os;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) os << "; ";
    os << items[i];
  }
  return os.str();
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> violations)
    : std::invalid_argument(join(violations)), violations_(std::move(violations)) {}

Scenario validate_scenario(Scenario raw) {
  std::vector<std::string> bad;
  auto finite = [&](double v, const char* name) {
    if (!std::isfinite(v)) {
      bad.push_back(std::string(name) + " must be finite");
      return false;
    }
    return true;
  };
  if (finite(raw.alpha, "alpha") && !(raw.alpha > 0.0)) bad.emplace_back("alpha must be positive");
  finite(raw.beta0, "beta0");
  if (finite(raw.u, "u") && !(raw.u > 0.0)) bad.emplace_back("u must be positive");
  if (finite(raw.t, "t") && !(raw.t > 0.0)) bad.emplace_back("t must be positive");
  if (finite(raw.m, "m") && !(raw.m >= 0.0)) bad.emplace_back("m must be nonnegative");
  if (raw.consumers_per_subregion < 1)
    bad.emplace_back("consumers_per_subregion must be at least 1");
  if (raw.subregions.empty()) bad.emplace_back("subregions must not be empty");
  for (std::size_t l = 0; l < raw.subregions.size(); ++l) {
    const auto& sr = raw.subregions[l];
    const std::string prefix = "subregions[" + std::to_string(l) + "].";
    if (!std::isfinite(sr.mean_output) || !(sr.mean_output > 0.0))
      bad.push_back(prefix + "mean_output must be positive");
    if (!std::isfinite(sr.var_output) || !(sr.var_output >= 0.0))
      bad.push_back(prefix + "var_output must be nonnegative");
  }
  if (!bad.empty()) throw ValidationError(std::move(bad));
  return raw;
}

Scenario benchmark_scenario(long consumers_per_subregion) {
  Scenario s;
  s.alpha = 0.003;
  s.beta0 = 0.03;
  s.u = 8.0;
  s.t = 80.0;
  s.m = 5.0;
  s.consumers_per_subregion = consumers_per_subregion;
  s.subregions = {{300.0, 400.0, OutputDistribution::truncated_normal},
                  {500.0, 3000.0, OutputDistribution::truncated_normal},
                  {400.0, 1600.0, OutputDistribution::truncated_normal}};
  return s;
}

Scenario replicate_subregions(const Scenario& base, std::size_t num_subregions) {
  if (base.subregions.empty()) throw std::invalid_argument("base scenario has no subregions");
  Scenario s = base;
  s.subregions.clear();
  for (std::size_t l = 0; l < num_subregions; ++l)
    s.subregions.push_back(base.subregions[l % base.subregions.size()]);
  return s;
}

Scenario scale_variances(const Scenario& base, double factor) {
  Scenario s = base;
  for (auto& sr : s.subregions) sr.var_output *= factor;
  return s;
}

// ---------------------------------------------------------------------------
// RandomStream

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::mt19937_64 seeded_engine(std::uint64_t master, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

std::uint64_t mix_stream_id(std::uint64_t stream_id, std::uint64_t key) {
  return splitmix64(stream_id ^ splitmix64(key + 0x632BE59BD9B4E019ull));
}

RandomStream::RandomStream(std::uint64_t master_seed, std::uint64_t stream_id)
    : master_seed_(master_seed), stream_id_(stream_id), engine_(seeded_engine(master_seed, stream_id)) {}

RandomStream RandomStream::substream(std::uint64_t key) const {
  return RandomStream(master_seed_, mix_stream_id(stream_id_, key));
}

double RandomStream::uniform() { return std::generate_canonical<double, 53>(engine_); }

double RandomStream::normal() { return normal_(engine_); }

double RandomStream::exponential() {
  // 1 - U lies in (0, 1]
  return -std::log1p(-uniform());
}

double RandomStream::chi_squared(double dof) {
  if (dof <= 0.0) return 0.0;
  std::gamma_distribution<double> g(0.5 * dof, 2.0);
  return g(engine_);
}

// ---------------------------------------------------------------------------
// Renewable sampling

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr double kInvSqrt2 = 0.70710678118654752440;

// Inverse Mills ratio phi(a) / (1 - Phi(a)).
double inverse_mills(double a) {
  const double tail = 0.5 * std::erfc(a * kInvSqrt2);
  if (tail > 1e-300) return kInvSqrt2Pi * std::exp(-0.5 * a * a) / tail;
  // asymptotic expansion for very large a
  const double a2 = a * a;
  return a * (1.0 + 1.0 / a2 - 2.0 / (a2 * a2));
}

// Squared coefficient of variation of N(mu, s) truncated to [0, inf) as a
// function of the standardized cut a = -mu / s.
double truncated_cv2(double a) {
  const double lam = inverse_mills(a);
  const double mean = lam - a;
  const double var = 1.0 + a * lam - lam * lam;
  return var / (mean * mean);
}

// Standard normal conditioned on Z >= a.
double sample_normal_tail(double a, RandomStream& rng) {
  if (a < 0.5) {
    for (;;) {
      const double z = rng.normal();
      if (z >= a) return z;
    }
  }
  // exponential proposal with optimal rate
  const double rate = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    const double z = a + rng.exponential() / rate;
    const double accept = std::exp(-0.5 * (z - rate) * (z - rate));
    if (rng.uniform() <= accept) return z;
  }
}

}  // namespace

RenewableSampler::RenewableSampler(const SubregionStats& stats) : stats_(stats) {
  if (!(stats.mean_output > 0.0) || !(stats.var_output >= 0.0))
    throw std::invalid_argument("renewable sampler needs mean_output > 0 and var_output >= 0");
  if (stats.var_output == 0.0) {
    parent_mean_ = stats.mean_output;
    return;
  }
  if (stats.distribution == OutputDistribution::lognormal) {
    const double s2 = std::log1p(stats.var_output / (stats.mean_output * stats.mean_output));
    parent_sd_ = std::sqrt(s2);
    parent_mean_ = std::log(stats.mean_output) - 0.5 * s2;
    return;
  }
  const double target = stats.var_output / (stats.mean_output * stats.mean_output);
  if (!(target < 1.0))
    throw std::invalid_argument(
        "truncated-normal output cannot reach a coefficient of variation >= 1; use lognormal");
  // truncated_cv2 increases from 0 (a -> -inf) to 1 (a -> +inf) and behaves
  // like 1/a^2 far from the cut
  double lo = std::min(-60.0, -2.0 / std::sqrt(target));
  double hi = 60.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (truncated_cv2(mid) < target)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-14) break;
  }
  const double a = 0.5 * (lo + hi);
  const double scale = stats.mean_output / (inverse_mills(a) - a);
  parent_sd_ = scale;
  parent_mean_ = -a * scale;
}

double RenewableSampler::operator()(RandomStream& rng) const {
  if (stats_.var_output == 0.0) return stats_.mean_output;
  if (stats_.distribution == OutputDistribution::lognormal)
    return std::exp(parent_mean_ + parent_sd_ * rng.normal());
  const double cut = -parent_mean_ / parent_sd_;
  return parent_mean_ + parent_sd_ * sample_normal_tail(cut, rng);
}

double sample_renewable(const SubregionStats& sr, RandomStream& rng) {
  return RenewableSampler(sr)(rng);
}

// ---------------------------------------------------------------------------

DemandSummary DemandSummary::of(std::span<const double> demands) {
  DemandSummary d;
  d.count = static_cast<double>(demands.size());
  for (double x : demands) {
    d.sum += x;
    d.sum_sq += x * x;
  }
  return d;
}

DemandSummary DemandSummary::uniform(double count, double demand) {
  return {count, count * demand, count * demand * demand};
}

DemandSummary& DemandSummary::operator+=(const DemandSummary& other) {
  count += other.count;
  sum += other.sum;
  sum_sq += other.sum_sq;
  return *this;
}

double total_utility(const Scenario& s, const DemandSummary& d) {
  return -0.5 * s.u * d.sum_sq + s.t * d.sum;
}

}  // namespace vpp
