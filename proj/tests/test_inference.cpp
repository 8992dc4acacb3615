#include <cmath>
#include <random>

#include "doctest.h"

#include "did/aggregate.hpp"
#include "did/error.hpp"
#include "did/inference.hpp"
#include "fixtures.hpp"

using namespace did;

namespace {

Eigen::MatrixXd iid_columns(std::size_t n, int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd m(n, k);
  for (std::size_t i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) m(i, j) = z(rng);
  for (int j = 0; j < k; ++j) m.col(j).array() -= m.col(j).mean();
  return m;
}

}  // namespace

TEST_SUITE("inference") {

TEST_CASE("quantiles") {
  CHECK(quantile_type7({1, 2, 3, 4}, 0.5) == doctest::Approx(2.5));
  CHECK(quantile_type7({4, 1, 3, 2}, 0.25) == doctest::Approx(1.75));
  CHECK(quantile_type7({7}, 0.9) == 7.0);
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(normal_quantile(0.95) == doctest::Approx(1.6448536269514722).epsilon(1e-12));
}

TEST_CASE("cluster sums and covariance") {
  auto s = test::toy4_spec();
  s.cluster = {1, 1, 2, 2, 3, 3};
  s.weight = {1, 2, 1, 2, 1, 2};
  const PanelDataset ds(s);
  const std::vector<double> phi{1, -1, 2, 0, -0.5, 0.25};
  const InfluenceColumns cols{phi};
  const auto S = cluster_sums(ds, cols);
  REQUIRE(S.rows() == 3);
  const auto w = ds.weights();
  CHECK(S(0, 0) == doctest::Approx(w[0] * 1 - w[1] * 1));
  CHECK(S(1, 0) == doctest::Approx(w[2] * 2));
  const auto V = influence_covariance(ds, cols);
  CHECK(V(0, 0) == doctest::Approx(S.col(0).squaredNorm() / 36.0));
}

TEST_CASE("bootstrap se tracks the analytic se") {
  const std::size_t n = 2000;
  const auto m = iid_columns(n, 3, 1);
  const std::vector<double> w(n, 1.0);
  BootstrapOptions o;
  o.draws = 2000;
  o.seed = 5;
  for (WeightLaw law : {WeightLaw::Mammen, WeightLaw::Rademacher}) {
    o.law = law;
    const auto boot = multiplier_bootstrap(m, w, {}, o);
    for (int j = 0; j < 3; ++j) {
      const double analytic = std::sqrt(m.col(j).squaredNorm()) / n;
      CHECK(boot.se[j] == doctest::Approx(analytic).epsilon(0.1));
    }
    CHECK(!boot.any_degenerate());
  }
}

TEST_CASE("sup-t critical values") {
  const std::size_t n = 3000;
  const std::vector<double> w(n, 1.0);
  BootstrapOptions o;
  o.draws = 4000;
  o.alpha = 0.10;
  o.seed = 11;
  const auto one = multiplier_bootstrap(iid_columns(n, 1, 2), w, {}, o);
  CHECK(one.critical_value_sup_t >= 1.60);
  CHECK(one.critical_value_sup_t <= 1.69);
  const auto twenty = multiplier_bootstrap(iid_columns(n, 20, 3), w, {}, o);
  CHECK(twenty.critical_value_sup_t >= 2.6);
  CHECK(twenty.critical_value_sup_t <= 3.2);
}

TEST_CASE("degenerate columns") {
  const std::size_t n = 500;
  Eigen::MatrixXd m = iid_columns(n, 2, 4);
  m.col(1).setZero();
  const std::vector<double> w(n, 1.0);
  BootstrapOptions o;
  o.draws = 500;
  o.alpha = 0.10;
  const auto boot = multiplier_bootstrap(m, w, {}, o);
  CHECK(!boot.degenerate[0]);
  CHECK(boot.degenerate[1]);
  const std::vector<double> est{1.0, 2.0};
  const auto b = bands(est, boot);
  CHECK(b.simultaneous[1].first == 2.0);
  CHECK(b.simultaneous[1].second == 2.0);

  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(n, 2);
  const auto all = multiplier_bootstrap(zero, w, {}, o);
  CHECK(all.critical_value_sup_t == doctest::Approx(normal_quantile(0.95)));
}

TEST_CASE("seed and thread determinism") {
  const std::size_t n = 800;
  const auto m = iid_columns(n, 4, 6);
  std::vector<double> w(n, 1.0);
  std::vector<int> cl(n);
  for (std::size_t i = 0; i < n; ++i) cl[i] = static_cast<int>(i / 4);
  BootstrapOptions o;
  o.draws = 300;
  o.seed = 99;
  o.threads = 1;
  const auto a = multiplier_bootstrap(m, w, cl, o);
  o.threads = 4;
  const auto b = multiplier_bootstrap(m, w, cl, o);
  CHECK(a.draws == b.draws);
  CHECK(a.critical_value_sup_t == b.critical_value_sup_t);
  o.seed = 100;
  const auto c = multiplier_bootstrap(m, w, cl, o);
  CHECK(a.draws != c.draws);
}

TEST_CASE("bands on an event study") {
  std::mt19937_64 rng(12);
  test::RandomPanelOptions ro;
  ro.n = 300;
  ro.T = 5;
  const auto ds = test::random_panel(rng, ro);
  auto curve = event_study(att_set(ds, Method::NotYet, true), ds);
  BootstrapOptions o;
  o.draws = 1000;
  o.alpha = 0.10;
  o.seed = 3;
  attach_bands(curve, ds, o);
  CHECK(curve.bands_filled);
  CHECK(curve.alpha == 0.10);
  CHECK(std::isfinite(curve.critical_value_sup_t));
  for (const auto& p : curve.points) {
    if (p.reference) continue;
    CHECK(p.simultaneous_band.first <= p.pointwise_ci.first);
    CHECK(p.simultaneous_band.second >= p.pointwise_ci.second);
    CHECK(p.pointwise_ci.first < p.estimate);
  }
}

TEST_CASE("invalid options") {
  CHECK_THROWS_AS(parse_weight_law("gaussian"), Error);
  const std::vector<double> w(10, 1.0);
  BootstrapOptions o;
  o.draws = 0;
  CHECK_THROWS_AS(multiplier_bootstrap(iid_columns(10, 1, 1), w, {}, o), Error);
}

TEST_CASE("thread resolution") {
  CHECK(resolve_threads(3) == 3);
  CHECK(resolve_threads(0) >= 1);
}

}
