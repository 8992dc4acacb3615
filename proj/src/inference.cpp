#include "did/inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>
#include <string>
#include <thread>

#include <boost/math/distributions/normal.hpp>

#include "did/aggregate.hpp"
#include "did/error.hpp"
#include "did/kernels.hpp"

namespace did {

Eigen::MatrixXd cluster_sums(const PanelDataset& ds, const InfluenceColumns& columns) {
  const std::size_t n = ds.n_units();
  const auto w = ds.weights();
  const auto cl = ds.clusters();
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ds.n_clusters()),
                                            static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j].size() != n) throw Error(ErrorCode::InvalidArgument, "influence length != n");
    for (std::size_t i = 0; i < n; ++i) s(cl[i], static_cast<Eigen::Index>(j)) += w[i] * columns[j][i];
  }
  return s;
}

Eigen::MatrixXd influence_covariance(const PanelDataset& ds, const InfluenceColumns& columns) {
  const Eigen::MatrixXd s = cluster_sums(ds, columns);
  const double n = static_cast<double>(ds.n_units());
  return (s.transpose() * s) / (n * n);
}

std::string_view weight_law_name(WeightLaw law) {
  return law == WeightLaw::Mammen ? "mammen" : "rademacher";
}

WeightLaw parse_weight_law(std::string_view name) {
  if (name == "mammen") return WeightLaw::Mammen;
  if (name == "rademacher") return WeightLaw::Rademacher;
  throw Error(ErrorCode::InvalidArgument, "unknown weight law '" + std::string(name) + "'");
}

bool BootstrapResult::any_degenerate() const {
  return std::find(degenerate.begin(), degenerate.end(), true) != degenerate.end();
}

double normal_quantile(double p) {
  static const boost::math::normal_distribution<double> std_normal;
  return boost::math::quantile(std_normal, p);
}

double quantile_type7(std::vector<double> values, double p) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("DID_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return 1;
}

namespace {

constexpr double kSqrt5 = 2.23606797749978969641;

struct MultiplierLaw {
  WeightLaw law;
  double operator()(std::mt19937_64& rng) const {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    if (law == WeightLaw::Rademacher) return u < 0.5 ? -1.0 : 1.0;
    constexpr double p_low = (kSqrt5 + 1.0) / (2.0 * kSqrt5);
    return u < p_low ? (1.0 - kSqrt5) / 2.0 : (1.0 + kSqrt5) / 2.0;
  }
};

std::mt19937_64 draw_stream(std::uint64_t seed, std::size_t b) {
  const auto b64 = static_cast<std::uint64_t>(b);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(b64), static_cast<std::uint32_t>(b64 >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

BootstrapResult multiplier_bootstrap(const Eigen::MatrixXd& influence,
                                     std::span<const double> weights,
                                     std::span<const int> clusters,
                                     const BootstrapOptions& options) {
  if (options.draws < 200)
    throw Error(ErrorCode::InvalidArgument, "bootstrap needs at least 200 draws");
  if (!(options.alpha > 0.0 && options.alpha < 1.0))
    throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0,1)");
  const auto n = static_cast<std::size_t>(influence.rows());
  const auto k = static_cast<std::size_t>(influence.cols());
  if (weights.size() != n) throw Error(ErrorCode::InvalidArgument, "weights length != n");
  if (!clusters.empty() && clusters.size() != n)
    throw Error(ErrorCode::InvalidArgument, "clusters length != n");

  // Cluster sums, one contiguous column per coordinate.
  std::size_t n_clusters = n;
  Eigen::MatrixXd sums;
  if (clusters.empty()) {
    sums = influence;
    for (std::size_t i = 0; i < n; ++i) sums.row(static_cast<Eigen::Index>(i)) *= weights[i];
  } else {
    n_clusters = static_cast<std::size_t>(*std::max_element(clusters.begin(), clusters.end())) + 1;
    sums = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_clusters), static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < n; ++i)
      sums.row(clusters[i]) += weights[i] * influence.row(static_cast<Eigen::Index>(i));
  }

  BootstrapResult out;
  out.B = options.draws;
  out.alpha = options.alpha;
  out.law = options.law;
  out.seed = options.seed;
  out.draws.resize(static_cast<Eigen::Index>(out.B), static_cast<Eigen::Index>(k));

  const double inv_n = 1.0 / static_cast<double>(n);
  const MultiplierLaw law{options.law};
  auto run = [&](std::size_t b0, std::size_t b1) {
    std::vector<double> xi(n_clusters);
    for (std::size_t b = b0; b < b1; ++b) {
      auto rng = draw_stream(options.seed, b);
      for (auto& x : xi) x = law(rng);
      for (std::size_t j = 0; j < k; ++j)
        out.draws(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(j)) =
            kernels::dot({sums.col(static_cast<Eigen::Index>(j)).data(), n_clusters}, xi) * inv_n;
    }
  };
  const unsigned threads =
      std::min<unsigned>(resolve_threads(options.threads), static_cast<unsigned>(out.B));
  if (threads <= 1) {
    run(0, out.B);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (out.B + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t b0 = t * chunk, b1 = std::min(out.B, b0 + chunk);
      if (b0 < b1) pool.emplace_back(run, b0, b1);
    }
    for (auto& th : pool) th.join();
  }

  const double iqr_scale = normal_quantile(0.75) - normal_quantile(0.25);
  out.se.resize(k);
  out.degenerate.resize(k);
  double max_se = 0.0;
  std::vector<double> col(out.B);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t b = 0; b < out.B; ++b)
      col[b] = out.draws(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(j));
    out.se[j] = (quantile_type7(col, 0.75) - quantile_type7(col, 0.25)) / iqr_scale;
    max_se = std::max(max_se, out.se[j]);
  }
  std::vector<double> inv_se(k, 0.0);
  bool any = false;
  for (std::size_t j = 0; j < k; ++j) {
    out.degenerate[j] = !(out.se[j] > 1e-12 * max_se) || out.se[j] == 0.0;
    if (!out.degenerate[j]) {
      inv_se[j] = 1.0 / out.se[j];
      any = true;
    }
  }
  if (!any) {
    out.critical_value_sup_t = normal_quantile(1.0 - options.alpha / 2.0);
    return out;
  }
  std::vector<double> tmax(out.B);
  for (std::size_t b = 0; b < out.B; ++b)
    tmax[b] = kernels::max_abs_scaled({out.draws.row(static_cast<Eigen::Index>(b)).data(), k}, inv_se);
  out.critical_value_sup_t = quantile_type7(std::move(tmax), 1.0 - options.alpha);
  return out;
}

BootstrapResult multiplier_bootstrap(const PanelDataset& ds, const InfluenceColumns& columns,
                                     const BootstrapOptions& options) {
  Eigen::MatrixXd phi(static_cast<Eigen::Index>(ds.n_units()),
                      static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j].size() != ds.n_units())
      throw Error(ErrorCode::InvalidArgument, "influence length != n");
    for (std::size_t i = 0; i < ds.n_units(); ++i)
      phi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = columns[j][i];
  }
  return multiplier_bootstrap(phi, ds.weights(),
                              ds.unit_clusters() ? std::span<const int>{} : ds.clusters(), options);
}

Bands bands(std::span<const double> estimates, const BootstrapResult& boot) {
  if (estimates.size() != boot.se.size())
    throw Error(ErrorCode::InvalidArgument, "estimate count does not match bootstrap columns");
  Bands out;
  const double z = normal_quantile(1.0 - boot.alpha / 2.0);
  out.critical_value = std::max(boot.critical_value_sup_t, z);
  for (std::size_t j = 0; j < estimates.size(); ++j) {
    const double se = boot.se[j];
    out.pointwise.emplace_back(estimates[j] - z * se, estimates[j] + z * se);
    out.simultaneous.emplace_back(estimates[j] - out.critical_value * se,
                                  estimates[j] + out.critical_value * se);
  }
  return out;
}

void attach_bands(EventStudyCurve& curve, const PanelDataset& ds,
                  const BootstrapOptions& options) {
  InfluenceColumns cols;
  std::vector<double> est;
  std::vector<EventPoint*> live;
  for (auto& p : curve.points) {
    if (p.reference) continue;
    cols.emplace_back(p.influence);
    est.push_back(p.estimate);
    live.push_back(&p);
  }
  curve.alpha = options.alpha;
  if (live.empty()) return;
  const auto boot = multiplier_bootstrap(ds, cols, options);
  const auto b = bands(est, boot);
  for (std::size_t j = 0; j < live.size(); ++j) {
    live[j]->se = boot.se[j];
    live[j]->degenerate = boot.degenerate[j];
    live[j]->pointwise_ci = b.pointwise[j];
    live[j]->simultaneous_band = b.simultaneous[j];
  }
  for (auto& p : curve.points)
    if (p.reference) p.pointwise_ci = p.simultaneous_band = {0.0, 0.0};
  curve.critical_value_sup_t = boot.critical_value_sup_t;
  curve.bands_filled = true;
  if (boot.any_degenerate())
    curve.warnings.push_back("degenerate (zero-variance) points excluded from the sup-t maximum");
}

}  // namespace did
