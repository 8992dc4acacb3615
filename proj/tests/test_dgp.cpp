#include <cmath>

#include "doctest.h"

#include "did/aggregate.hpp"
#include "did/dgp.hpp"
#include "did/error.hpp"
#include "did/mc.hpp"

using namespace did;

TEST_SUITE("dgp") {

TEST_CASE("presets exist and simulate") {
  for (const auto& name : scenario_names()) {
    CAPTURE(name);
    const auto sim = simulate(scenario_config(name, 300, 1));
    CHECK(sim.panel.n_units() == 300);
    CHECK(!sim.truth.empty());
    CHECK(sim.scenario == name);
  }
  CHECK_THROWS_AS(scenario_config("nope", 10, 1), Error);
}

TEST_CASE("determinism per seed") {
  const auto a = simulate(scenario_config("dynamic", 200, 7));
  const auto b = simulate(scenario_config("dynamic", 200, 7));
  const auto c = simulate(scenario_config("dynamic", 200, 8));
  bool same = true, differ = false;
  for (std::size_t i = 0; i < 200; ++i)
    for (int t = 1; t <= a.panel.n_periods(); ++t) {
      same = same && a.panel.y(i, t) == b.panel.y(i, t);
      differ = differ || a.panel.y(i, t) != c.panel.y(i, t);
    }
  CHECK(same);
  CHECK(differ);
  CHECK(replication_seed(1, 0) != replication_seed(1, 1));
  CHECK(replication_seed(1, 0) != replication_seed(2, 0));
}

TEST_CASE("linear dynamics truth") {
  const auto cfg = scenario_config("dynamic", 100, 1);
  const auto ev = true_event_study(cfg);
  for (const auto& [e, v] : ev) CHECK(v == doctest::Approx(static_cast<double>(e)));
  // shares 1/4 each for g=3,4,5: cells e=1,2,3 for g3; 1,2 for g4; 1 for g5, all averaged with share weights
  const double expect = (1 + 2 + 3 + 1 + 2 + 1) / 6.0;
  CHECK(true_att_simple(cfg) == doctest::Approx(expect));
}

TEST_CASE("invalid shares") {
  DgpConfig c;
  c.group_shares = {{3, 0.5}, {kNever, 0.6}};
  try {
    simulate(c);
    FAIL("expected InvalidShares");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidShares);
  }
  c.group_shares = {{1, 0.5}, {kNever, 0.5}};
  CHECK_THROWS_AS(simulate(c), Error);
}

TEST_CASE("strata and clusters") {
  const auto sim = simulate(scenario_config("strata-trends", 400, 3));
  CHECK(sim.panel.has_stratum());
  CHECK(sim.truth_by_stratum.size() == 2);
  DgpConfig c = scenario_config("null", 400, 3);
  c.units_per_cluster = 4;
  c.cluster_shock_sd = 0.5;
  const auto cl = simulate(c);
  CHECK(cl.panel.n_clusters() == 100);
}

}

TEST_SUITE("mc") {

TEST_CASE("running stats") {
  RunningStats s;
  for (double x : {1.0, 2.0, 3.0, 4.0}) s.add(x);
  CHECK(s.mean() == doctest::Approx(2.5));
  CHECK(s.variance() == doctest::Approx(5.0 / 3.0));
  CHECK(s.mc_se() == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
}

TEST_CASE("null scenario means agree across estimators") {
  McOptions o;
  o.scenario = "null";
  o.n_units = 500;
  o.reps = 100;
  o.seed = 4;
  const auto rep = monte_carlo(o);
  CHECK(!rep.stats.empty());
  for (const auto& s : rep.stats) {
    CAPTURE(s.estimator);
    CAPTURE(s.target);
    CHECK(std::abs(s.mean - s.truth) < 4 * s.mc_se);
  }
  REQUIRE(rep.j_tests.size() == 2);
  for (const auto& j : rep.j_tests) CHECK(j.rejection_rate < 0.15);
}

TEST_CASE("results independent of thread count") {
  McOptions o;
  o.scenario = "dynamic";
  o.n_units = 300;
  o.reps = 12;
  o.threads = 1;
  const auto a = monte_carlo(o);
  o.threads = 3;
  const auto b = monte_carlo(o);
  REQUIRE(a.stats.size() == b.stats.size());
  for (std::size_t k = 0; k < a.stats.size(); ++k) {
    CHECK(a.stats[k].mean == b.stats[k].mean);
    CHECK(a.stats[k].sd == b.stats[k].sd);
  }
}

}
