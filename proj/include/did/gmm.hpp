#pragma once

// Linear moment systems implied by a parallel-trends assumption, two-step
// efficient GMM in closed form, and the overidentification test.
//
// Every moment is affine in the parameters:
//   g_j(W_i; alpha) = a_j(W_i) - ind_j(W_i) * coef_j' alpha
// where ind_j is a 0/1 unit indicator and coef_j a constant sparse row.
//
// Parameters: mu_g (pre-period level of group g), alpha_{g,t}(1) (treated
// level, t >= g), lambda_t (common untreated trend), and shares of every
// category except the last one in canonical order, whose share is implied.
// ATT(g,t) = alpha_{g,t}(1) - mu_g - sum_{s=g..t} lambda_s under both PTAs.

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "did/attgt.hpp"
#include "did/panel.hpp"

namespace did {

enum class Pta { AllGroups, NotYet };

std::string_view pta_name(Pta pta);
Pta parse_pta(std::string_view name);

struct GmmParam {
  enum class Kind { PreMean, Treated, Trend, Share };
  Kind kind = Kind::PreMean;
  int g = 0;  // kNever for the never-treated share
  int t = 0;
  std::string name;
};

struct GmmMoment {
  std::string name;
  std::string kind;  // "pre-level", "treated-level", "share", "trend"
  int g = 0;         // 0 when the moment is not group-specific
  int t = 0;
  int s = 0;  // not-treated-at period (NOT_YET trend moments)
  std::string comparison;
  std::vector<double> value;  // a_j(W_i)
  std::vector<double> mask;   // ind_j(W_i)
  std::vector<std::pair<std::size_t, double>> coef;
};

struct GmmModel {
  Pta pta = Pta::NotYet;
  std::vector<GmmParam> params;
  std::vector<GmmMoment> moments;
  std::vector<std::string> removed;  // redundant or implied moments, in removal order
  std::vector<std::pair<int, int>> cells;
  std::vector<std::pair<int, int>> unidentified;
  std::vector<std::string> warnings;
  std::size_t n_units = 0;

  std::size_t m() const noexcept { return moments.size(); }
  std::size_t p() const noexcept { return params.size(); }
  int df() const noexcept { return static_cast<int>(m()) - static_cast<int>(p()); }
  int param_index(std::string_view name) const;
};

struct GmmBuildOptions {
  bool allow_big = false;
  double redundancy_tol = 1e-9;
};

GmmModel build_moments(const PanelDataset& ds, Pta pta, const GmmBuildOptions& options = {});

struct GmmOptions {
  double ridge = 0.0;
  // Cluster-aggregate Sigma-hat when the panel carries cluster ids.
  bool cluster = true;
};

struct GmmFit {
  GmmModel model;
  Eigen::VectorXd alpha_first;
  Eigen::VectorXd alpha_hat;
  Eigen::MatrixXd Sigma_hat;  // at the first-step estimate, ridge included
  Eigen::MatrixXd Psi_hat;    // -mean of ind_j coef_j
  Eigen::MatrixXd vcov_alpha;
  Eigen::VectorXd gbar;       // mean moment at alpha_hat
  Eigen::MatrixXd influence;  // n x p
  Eigen::MatrixXd A;          // cells x p
  double J = 0.0;
  int df = 0;
  double p_value = 1.0;
  double condition_number = 1.0;
  double ridge = 0.0;
  bool clustered = false;
  std::size_t n_units = 0;
  std::size_t n_clusters = 0;
};

GmmFit estimate_gmm(const GmmModel& model, const PanelDataset& ds, const GmmOptions& options = {});

Eigen::MatrixXd selection_matrix(const GmmModel& model);
AttGtSet att_from_gmm(const GmmFit& fit);

struct JTest {
  double J = 0.0;
  int df = 0;
  double p_value = 1.0;
};

JTest j_test(const GmmFit& fit);

}  // namespace did
