#pragma once

// Two-way fixed-effects OLS baselines (static and event-time dummies) with
// cluster-robust sandwich covariance. Reported as a descriptive baseline.

#include <climits>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "did/panel.hpp"

namespace did {

enum class FixedEffects { Unit, Group };
enum class VcovType { Cluster, Hc0 };

struct TwfeOptions {
  FixedEffects fe = FixedEffects::Unit;
  bool interact_stratum = false;
  bool drop_collinear = false;
  VcovType vcov = VcovType::Cluster;
  bool cluster_by_observation = false;
  double tol = 1e-10;
  int max_iter = 10000;
};

inline constexpr int kStaticTerm = INT_MIN;

struct TwfeFit {
  std::vector<std::string> names;
  std::vector<int> event_time;   // kStaticTerm for D and D:stratum
  std::vector<bool> interacted;  // stratum interaction terms
  Eigen::VectorXd coef;
  Eigen::MatrixXd vcov;
  std::set<int> omitted;
  std::vector<std::string> dropped;  // collinear columns removed (drop_collinear)
  Eigen::MatrixXd residuals;         // n x T
  int iterations = 0;
  std::size_t n_clusters = 0;
  std::string label = "descriptive baseline";

  int index(std::string_view name) const;
  double coefficient(std::string_view name) const;
  double se(std::string_view name) const;
  double se(std::size_t k) const;
};

TwfeFit twfe_static(const PanelDataset& ds, const TwfeOptions& options = {});

// Default omitted set: {0}, plus -leads when the panel has no never-treated group.
std::set<int> default_omitted(const PanelDataset& ds, int leads);

// Leads and lags spanned by the realized groups, capped at T-2 and T-1.
std::pair<int, int> default_window(const PanelDataset& ds);

// Event-time dummies 1{t - g + 1 = e} for e in [-leads, lags] minus omit.
TwfeFit twfe_dynamic(const PanelDataset& ds, int leads, int lags,
                     std::optional<std::set<int>> omit = std::nullopt,
                     const TwfeOptions& options = {});

struct WaldTest {
  double stat = 0.0;
  int df = 0;
  double p_value = 1.0;
};

WaldTest wald_test(const TwfeFit& fit, const std::vector<std::size_t>& terms);
// Joint test of all non-interacted e < 0 coefficients.
WaldTest pre_period_test(const TwfeFit& fit);

}  // namespace did
