#include "did/dgp.hpp"

#include <cmath>
#include <random>

#include "did/error.hpp"

namespace did {

namespace {

double at(const std::vector<double>& v, int t) {
  return t >= 0 && static_cast<std::size_t>(t) < v.size() ? v[t] : 0.0;
}

double effect_of(const DgpConfig& c, int g, int e) { return c.effect ? c.effect(g, e) : 0.0; }

void check_config(const DgpConfig& c) {
  if (c.T < 2) throw Error(ErrorCode::InvalidArgument, "DGP needs T >= 2");
  if (c.n_units == 0) throw Error(ErrorCode::InvalidArgument, "DGP needs n_units > 0");
  if (c.group_shares.empty()) throw Error(ErrorCode::InvalidShares, "no group shares given");
  double total = 0.0;
  for (const auto& [g, s] : c.group_shares) {
    if (g != kNever && (g < 2 || g > c.T))
      throw Error(ErrorCode::InvalidShares, "group " + std::to_string(g) + " outside 2..T");
    if (!(s >= 0.0)) throw Error(ErrorCode::InvalidShares, "negative group share");
    total += s;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw Error(ErrorCode::InvalidShares, "group shares sum to " + std::to_string(total));
  if (!(std::abs(c.rho) < 1.0)) throw Error(ErrorCode::InvalidArgument, "|rho| must be < 1");
  if (!(std::abs(c.treat_noise_corr) <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "treat_noise_corr must lie in [-1,1]");
  if (c.with_stratum && !(c.stratum_share > 0.0 && c.stratum_share < 1.0))
    throw Error(ErrorCode::InvalidArgument, "stratum_share must lie in (0,1)");
  if (c.units_per_cluster == 0) throw Error(ErrorCode::InvalidArgument, "units_per_cluster must be > 0");
}

}  // namespace

std::uint64_t replication_seed(std::uint64_t base, std::uint64_t rep) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (rep + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::map<int, double> true_event_study(const DgpConfig& c) {
  const double shift = c.with_stratum ? c.stratum_effect_shift * c.stratum_share : 0.0;
  std::map<int, double> out;
  for (int e = 1; e <= c.T - 1; ++e) {
    double num = 0.0, den = 0.0;
    for (const auto& [g, s] : c.group_shares) {
      if (g == kNever || g + e - 1 > c.T || s <= 0.0) continue;
      num += s * (effect_of(c, g, e) + shift);
      den += s;
    }
    if (den > 0.0) out[e] = num / den;
  }
  return out;
}

double true_att_simple(const DgpConfig& c) {
  const double shift = c.with_stratum ? c.stratum_effect_shift * c.stratum_share : 0.0;
  double num = 0.0, den = 0.0;
  for (const auto& [g, s] : c.group_shares) {
    if (g == kNever || s <= 0.0) continue;
    for (int t = g; t <= c.T; ++t) {
      num += s * (effect_of(c, g, t - g + 1) + shift);
      den += s;
    }
  }
  return den > 0.0 ? num / den : 0.0;
}

Simulation simulate(const DgpConfig& c) {
  check_config(c);
  const int T = c.T;
  const std::size_t n = c.n_units;
  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<std::pair<int, double>> cumulative;
  double acc = 0.0;
  for (const auto& [g, s] : c.group_shares) {
    acc += s;
    cumulative.emplace_back(g, acc);
  }

  const std::size_t n_clusters = (n + c.units_per_cluster - 1) / c.units_per_cluster;
  std::vector<double> cluster_shock(n_clusters * T, 0.0);
  if (c.cluster_shock_sd > 0.0)
    for (auto& v : cluster_shock) v = c.cluster_shock_sd * normal(rng);

  PanelSpec spec;
  spec.n_periods = T;
  spec.outcome.resize(n * T);
  spec.first_treat.resize(n);
  if (c.with_stratum) spec.stratum.resize(n);
  if (c.units_per_cluster > 1) spec.cluster.resize(n);

  const double stat_sd = c.noise_sd / std::sqrt(1.0 - c.rho * c.rho);
  const double kappa = c.treat_noise_corr;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = unif(rng);
    int g = cumulative.back().first;
    for (const auto& [gk, ck] : cumulative)
      if (u < ck) {
        g = gk;
        break;
      }
    spec.first_treat[i] = g;
    const int stratum = c.with_stratum ? (unif(rng) < c.stratum_share ? 1 : 0) : 0;
    if (c.with_stratum) spec.stratum[i] = stratum;
    const std::size_t cl = i / c.units_per_cluster;
    if (c.units_per_cluster > 1) spec.cluster[i] = static_cast<int>(cl);

    const double level = c.level_mean + c.level_sd * normal(rng);
    const auto offsets = c.group_trend_offsets.find(g);
    double cum = 0.0;
    double eps = 0.0;
    for (int t = 1; t <= T; ++t) {
      const double innov = normal(rng);
      eps = t == 1 ? stat_sd * innov : c.rho * eps + c.noise_sd * innov;
      if (t >= 2) {
        cum += at(c.common_trend, t);
        if (offsets != c.group_trend_offsets.end()) cum += at(offsets->second, t);
        if (stratum == 1) cum += at(c.stratum_trend_offset, t);
      }
      double y = level + cum + eps + cluster_shock[cl * T + (t - 1)];
      if (g != kNever && t >= g) {
        const double z = normal(rng);
        const double eta = c.treat_noise_sd * (kappa * innov + std::sqrt(1.0 - kappa * kappa) * z);
        y += effect_of(c, g, t - g + 1) + stratum * c.stratum_effect_shift + eta;
      }
      if (c.anticipation && g != kNever && t == g - 1) y += c.anticipation_effect;
      spec.outcome[i * T + (t - 1)] = y;
    }
  }

  Simulation sim{PanelDataset(std::move(spec)), {}, {}, {}, 0.0, c.scenario, {}};
  const double shift = c.with_stratum ? c.stratum_effect_shift * c.stratum_share : 0.0;
  for (const auto& [g, s] : c.group_shares) {
    if (g == kNever) continue;
    for (int t = g; t <= T; ++t) {
      const double base = effect_of(c, g, t - g + 1);
      sim.truth[{g, t}] = base + shift;
      if (c.with_stratum) {
        sim.truth_by_stratum[0][{g, t}] = base;
        sim.truth_by_stratum[1][{g, t}] = base + c.stratum_effect_shift;
      }
    }
  }
  sim.true_event = true_event_study(c);
  sim.true_att_simple = true_att_simple(c);
  if (c.anticipation) sim.notes.push_back("anticipation effect at t = g-1 violates no-anticipation");
  for (const auto& [g, off] : c.group_trend_offsets)
    for (double v : off)
      if (v != 0.0) {
        sim.notes.push_back("group " + group_label(g) + " has untreated-trend deviations");
        break;
      }
  return sim;
}

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"null",      "dynamic",           "pitfall",
                                              "early-nonparallel", "broken-ny", "strata-trends"};
  return names;
}

DgpConfig scenario_config(std::string_view name, std::size_t n_units, std::uint64_t seed) {
  DgpConfig c;
  c.scenario = std::string(name);
  c.n_units = n_units;
  c.seed = seed;
  c.rho = 0.5;
  c.noise_sd = 1.0;
  if (name == "null") {
    c.T = 4;
    c.group_shares = {{3, 1.0 / 3.0}, {4, 1.0 / 3.0}, {kNever, 1.0 / 3.0}};
    c.common_trend = {0, 0, 0.5, 1.0, 0.5};
  } else if (name == "dynamic") {
    c.T = 5;
    c.group_shares = {{3, 0.25}, {4, 0.25}, {5, 0.25}, {kNever, 0.25}};
    c.common_trend = {0, 0, 0.3, 0.6, 0.2, 0.4};
    c.effect = [](int, int e) { return static_cast<double>(e); };
  } else if (name == "pitfall") {
    c.T = 6;
    c.group_shares = {{2, 0.4}, {4, 0.3}, {6, 0.3}};
    c.common_trend = {0, 0, 0.2, 0.2, 0.2, 0.2, 0.2};
    c.effect = [](int g, int e) {
      if (g == 2) return 4.0 * e - 1.0 * e * e;
      return 0.5 * e;
    };
  } else if (name == "early-nonparallel") {
    c.T = 5;
    c.group_shares = {{4, 1.0 / 3.0}, {5, 1.0 / 3.0}, {kNever, 1.0 / 3.0}};
    c.common_trend = {0, 0, 0.3, 0.3, 0.3, 0.3};
    c.group_trend_offsets = {{4, {0, 0, 0.25, -0.25, 0, 0}}, {5, {0, 0, -0.2, 0.3, 0, 0}}};
    c.effect = [](int, int e) { return static_cast<double>(e); };
  } else if (name == "broken-ny") {
    c.T = 4;
    c.group_shares = {{3, 1.0 / 3.0}, {4, 1.0 / 3.0}, {kNever, 1.0 / 3.0}};
    c.common_trend = {0, 0, 0.5, 1.0, 0.5};
    c.group_trend_offsets = {{4, {0, 0, 0, 0.25, 0}}};
    c.effect = [](int, int e) { return static_cast<double>(e); };
  } else if (name == "strata-trends") {
    c.T = 5;
    c.group_shares = {{3, 0.25}, {4, 0.25}, {5, 0.25}, {kNever, 0.25}};
    c.common_trend = {0, 0, 0.3, 0.3, 0.3, 0.3};
    c.with_stratum = true;
    c.stratum_share = 0.5;
    c.stratum_trend_offset = {0, 0, 0.2, 0.2, 0.2, 0.2};
    c.effect = [](int, int e) { return static_cast<double>(e); };
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown scenario '" + std::string(name) + "'");
  }
  return c;
}

}  // namespace did
