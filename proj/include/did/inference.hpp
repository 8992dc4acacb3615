#pragma once

// Cluster-aggregated influence covariance and the multiplier bootstrap.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "did/panel.hpp"

namespace did {

struct EventStudyCurve;

using InfluenceColumns = std::vector<std::span<const double>>;

// n_clusters x k matrix: row c holds sum_{i in c} w_i phi_i.
Eigen::MatrixXd cluster_sums(const PanelDataset& ds, const InfluenceColumns& columns);
// (1/n^2) sum_c s_c s_c'.
Eigen::MatrixXd influence_covariance(const PanelDataset& ds, const InfluenceColumns& columns);

enum class WeightLaw { Mammen, Rademacher };

std::string_view weight_law_name(WeightLaw law);
WeightLaw parse_weight_law(std::string_view name);

struct BootstrapOptions {
  std::size_t draws = 1000;
  double alpha = 0.05;
  WeightLaw law = WeightLaw::Mammen;
  std::uint64_t seed = 0;
  // 0: DID_THREADS from the environment, else 1.
  unsigned threads = 0;
};

struct BootstrapResult {
  // draws(b, j) = (1/n) sum_c xi_{bc} s_{cj}
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> draws;
  std::vector<double> se;
  std::vector<bool> degenerate;
  double critical_value_sup_t = 0.0;
  double alpha = 0.05;
  WeightLaw law = WeightLaw::Mammen;
  std::uint64_t seed = 0;
  std::size_t B = 0;

  bool any_degenerate() const;
};

// influence is n x k (phi, unweighted). Empty clusters: every unit alone.
BootstrapResult multiplier_bootstrap(const Eigen::MatrixXd& influence,
                                     std::span<const double> weights,
                                     std::span<const int> clusters,
                                     const BootstrapOptions& options);
BootstrapResult multiplier_bootstrap(const PanelDataset& ds, const InfluenceColumns& columns,
                                     const BootstrapOptions& options);

struct Bands {
  std::vector<std::pair<double, double>> pointwise;
  std::vector<std::pair<double, double>> simultaneous;
  double critical_value = 0.0;
};

// Simultaneous half-width uses max(sup-t critical value, z_{1-alpha/2}).
Bands bands(std::span<const double> estimates, const BootstrapResult& boot);

// Bootstraps the non-reference points of a curve and fills se, intervals and
// the critical value.
void attach_bands(EventStudyCurve& curve, const PanelDataset& ds,
                  const BootstrapOptions& options);

double normal_quantile(double p);
// Hyndman-Fan type 7 (linear interpolation between order statistics).
double quantile_type7(std::vector<double> values, double p);
unsigned resolve_threads(unsigned requested);

}  // namespace did
