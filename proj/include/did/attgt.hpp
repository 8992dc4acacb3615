#pragma once

// Plug-in group-time ATT estimators with per-unit influence columns.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "did/panel.hpp"

namespace did {

enum class Method { Never, NotYet, NotYetAll };

std::string_view method_name(Method m);
Method parse_method(std::string_view name);

// Long-difference methods compare against base period g-1; NotYetAll pre
// cells are local one-period differences.
inline bool long_difference(Method m) { return m != Method::NotYetAll; }

// Restricts the treated and comparison means to a stratum. Leaving
// comparison_stratum empty pools the comparison set across strata.
struct StratumScope {
  std::optional<int> treated;
  std::optional<int> comparison;
};

struct GroupTimeResult {
  int g = 0;
  int t = 0;
  int e = 0;  // t - g + 1
  double estimate = 0.0;
  // phi_i with the convention mean_i(w_i phi_i) = 0; Var(estimate) ~ sum_c(sum w phi)^2 / n^2.
  std::vector<double> influence;
  std::string comparison;
  Method method = Method::Never;
  std::optional<int> stratum;
  bool local_difference = false;
  std::vector<std::string> warnings;
};

struct AttGtSet {
  Method method = Method::Never;
  std::string estimator;  // "never", "nyt", "nyt-all", "gmm-not-yet", ...
  std::optional<int> stratum;
  bool strata_specific = false;
  std::vector<GroupTimeResult> results;  // sorted by (g, t)
  Eigen::MatrixXd covariance;            // V/n
  std::size_t n_units = 0;
  std::size_t n_clusters = 0;
  std::vector<std::string> warnings;

  double se(std::size_t k) const;
  // Index of cell (g, t) or -1.
  int find(int g, int t) const;
};

GroupTimeResult att_never(const PanelDataset& ds, int g, int t, const StratumScope& scope = {});
GroupTimeResult att_ny(const PanelDataset& ds, int g, int t, const StratumScope& scope = {});
GroupTimeResult att_ny_plus(const PanelDataset& ds, int g, int t, const StratumScope& scope = {});
GroupTimeResult att_ny_plus_pre(const PanelDataset& ds, int g, int t,
                                const StratumScope& scope = {});

// Dispatches to the estimator for (method, t < g or t >= g).
GroupTimeResult att_cell(const PanelDataset& ds, Method method, int g, int t,
                         const StratumScope& scope = {});

const std::vector<double>& influence(const GroupTimeResult& result);

AttGtSet att_set(const PanelDataset& ds, Method method, bool include_pre,
                 const StratumScope& scope = {});

// Standard error of a single influence column under the dataset's clustering.
double influence_se(const PanelDataset& ds, const std::vector<double>& phi);

}  // namespace did
