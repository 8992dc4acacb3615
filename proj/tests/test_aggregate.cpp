#include <cmath>
#include <random>

#include "doctest.h"

#include "did/aggregate.hpp"
#include "did/error.hpp"
#include "fixtures.hpp"

using namespace did;

TEST_SUITE("aggregate") {

TEST_CASE("toy4 event weights") {
  const auto ds = test::toy4();
  CHECK(weight_event(ds, 3, 1) == doctest::Approx(0.5));
  CHECK(weight_event(ds, 4, 1) == doctest::Approx(0.5));
  CHECK(weight_event(ds, 3, 2) == doctest::Approx(1.0));
  CHECK_THROWS_AS(weight_event(ds, 4, 2), Error);
  CHECK(weight_event(ds, 3, -1) == doctest::Approx(0.5));
  CHECK(weight_event(ds, 4, -1) == doctest::Approx(0.5));
  CHECK(weight_event(ds, 4, -2) == doctest::Approx(1.0));
}

TEST_CASE("toy4 event study and summaries") {
  const auto ds = test::toy4();
  for (Method m : {Method::Never, Method::NotYet, Method::NotYetAll}) {
    const auto set = att_set(ds, m, false);
    const auto curve = event_study(set, ds);
    REQUIRE(curve.points.size() == 2);
    CHECK(curve.at(1)->estimate == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(curve.at(2)->estimate == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(att_simple(set, ds).estimate == doctest::Approx(8.0 / 3.0).epsilon(1e-12));
    CHECK(delta_e_avg(curve, ds).estimate == doctest::Approx(2.75).epsilon(1e-12));
  }
  CHECK(delta_s(ds).estimate == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("pre-period curve includes the reference point for long differences") {
  const auto ds = test::toy4();
  const auto curve = event_study(att_set(ds, Method::Never, true), ds);
  const auto* ref = curve.at(0);
  REQUIRE(ref);
  CHECK(ref->reference);
  CHECK(ref->estimate == 0.0);
  REQUIRE(curve.at(-1));
  CHECK(std::abs(curve.at(-1)->estimate) < 1e-12);
  const auto local = event_study(att_set(ds, Method::NotYetAll, true), ds);
  CHECK(local.at(0) == nullptr);
  CHECK(!local.warnings.empty());
}

TEST_CASE("group-4 weights doubled") {
  auto s = test::toy4_spec();
  s.weight = {1, 1, 2, 2, 1, 1};
  const PanelDataset ds(s);
  const auto set = att_set(ds, Method::NotYet, false);
  // shares 1/4, 1/2, 1/4 over post cells (3,3),(3,4),(4,4)
  const double expect = (0.25 * 2 + 0.25 * 3 + 0.5 * 3) / 1.0;
  CHECK(att_simple(set, ds).estimate == doctest::Approx(expect).epsilon(1e-12));
  CHECK(weight_event(ds, 4, 1) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("event weights sum to one and summaries are centered") {
  std::mt19937_64 rng(41);
  for (int rep = 0; rep < 20; ++rep) {
    test::RandomPanelOptions o;
    o.n = 40;
    o.T = 4 + rep % 2;
    o.weights = true;
    const auto ds = test::random_panel(rng, o);
    const auto set = att_set(ds, Method::NotYet, true);
    const auto curve = event_study(set, ds);
    for (const auto& p : curve.points) {
      if (p.reference) continue;
      double sum = 0.0;
      for (const auto& [g, w] : p.weights) sum += w;
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
      double m = 0.0;
      for (std::size_t i = 0; i < ds.n_units(); ++i) m += ds.weights()[i] * p.influence[i];
      CHECK(std::abs(m) < 1e-10);
    }
  }
}

TEST_CASE("delta_S equals the not-yet event study at e=1") {
  std::mt19937_64 rng(43);
  for (int rep = 0; rep < 100; ++rep) {
    test::RandomPanelOptions o;
    o.n = 10 + rep % 30;
    o.T = 3 + rep % 3;
    o.weights = rep % 2 == 0;
    const auto ds = test::random_panel(rng, o);
    const auto curve = event_study(att_set(ds, Method::NotYet, false), ds);
    const auto ds_s = delta_s(ds);
    CHECK(ds_s.estimate == doctest::Approx(curve.at(1)->estimate).epsilon(1e-12));
    CHECK(ds_s.se == doctest::Approx(curve.at(1)->se).epsilon(1e-10));
  }
}

TEST_CASE("frozen weights ignore share uncertainty") {
  std::mt19937_64 rng(47);
  test::RandomPanelOptions o;
  o.n = 200;
  const auto ds = test::random_panel(rng, o);
  const auto set = att_set(ds, Method::NotYet, false);
  AggregateOptions frozen;
  frozen.freeze_weights = true;
  const auto a = att_simple(set, ds), b = att_simple(set, ds, frozen);
  CHECK(a.estimate == b.estimate);
  CHECK(a.se != b.se);
}

TEST_CASE("no post cells") {
  const auto ds = test::toy4();
  auto set = att_set(ds, Method::Never, true);
  std::erase_if(set.results, [](const GroupTimeResult& r) { return r.t >= r.g; });
  set.covariance.resize(0, 0);
  CHECK_THROWS_AS(att_simple(set, ds), Error);
}

}
