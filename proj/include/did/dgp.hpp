#pragma once

// Synthetic staggered-adoption panels with a known ATT(g,t) surface.
//
//   Y_it(0) = a_i + sum_{s=2..t} (lambda_s + offset_{g_i,s} + c_i * stratum_offset_s) + eps_it
//   Y_it(1) = Y_it(0) + effect(g_i, t - g_i + 1) + c_i * stratum_effect_shift + eta_it
//
// eps is AR(1) with stationary start; eta is optionally correlated with the
// innovation of eps.

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "did/panel.hpp"

namespace did {

struct DgpConfig {
  std::string scenario = "custom";
  std::size_t n_units = 1000;
  int T = 4;
  std::map<int, double> group_shares;  // keys: g in 2..T or kNever
  double level_mean = 0.0;
  double level_sd = 1.0;
  // common_trend[t] for t = 2..T (index 0 and 1 unused); empty means zero.
  std::vector<double> common_trend;
  // group -> per-period deviation from the common trend, indexed like common_trend.
  std::map<int, std::vector<double>> group_trend_offsets;
  double stratum_share = 0.0;  // 0 disables the stratum column
  bool with_stratum = false;
  std::vector<double> stratum_trend_offset;  // indexed like common_trend
  double stratum_effect_shift = 0.0;
  std::function<double(int g, int e)> effect;  // empty: zero effect
  double noise_sd = 1.0;
  double rho = 0.0;
  double treat_noise_sd = 0.0;
  double treat_noise_corr = 0.0;
  bool anticipation = false;
  double anticipation_effect = 0.0;  // added at t = g-1 when anticipation is on
  std::size_t units_per_cluster = 1;
  double cluster_shock_sd = 0.0;
  std::uint64_t seed = 0;
};

struct Simulation {
  PanelDataset panel;
  // Population ATT(g,t), t >= g, averaged over the stratum distribution.
  std::map<std::pair<int, int>, double> truth;
  // Population ATT(g,t) within stratum c (empty without a stratum).
  std::map<int, std::map<std::pair<int, int>, double>> truth_by_stratum;
  std::map<int, double> true_event;  // e >= 1, population-share weights
  double true_att_simple = 0.0;
  std::string scenario;
  std::vector<std::string> notes;
};

Simulation simulate(const DgpConfig& config);

// Presets: null, dynamic, pitfall, early-nonparallel, broken-ny, strata-trends.
DgpConfig scenario_config(std::string_view name, std::size_t n_units, std::uint64_t seed);
const std::vector<std::string>& scenario_names();

// Population event-study truth for a config (no sampling).
std::map<int, double> true_event_study(const DgpConfig& config);
double true_att_simple(const DgpConfig& config);

// Per-replication seed derived from a base seed.
std::uint64_t replication_seed(std::uint64_t base, std::uint64_t rep);

}  // namespace did
