#include <cmath>

#include "doctest.h"

#include "did/error.hpp"
#include "did/hetero.hpp"
#include "fixtures.hpp"

using namespace did;

namespace {

// Each toy4 unit appears once in each stratum with identical outcomes.
PanelDataset mirrored_toy4() {
  const auto base = test::toy4_spec();
  PanelSpec s;
  s.n_periods = 4;
  for (int c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < 6; ++i) {
      s.first_treat.push_back(base.first_treat[i]);
      s.stratum.push_back(c);
      for (int t = 0; t < 4; ++t) s.outcome.push_back(base.outcome[i * 4 + t]);
    }
  return PanelDataset(s);
}

}  // namespace

TEST_SUITE("hetero") {

TEST_CASE("toy4h stratum cells") {
  const auto ds = test::toy4(true);
  const StrataVariant nev{Method::Never, true};
  // u1: 5 - 1.5 = 3.5; u5: 2 - 0.5 = 1.5
  CHECK(att_strata(ds, 3, 3, 1, nev).estimate == doctest::Approx(2.0).epsilon(1e-12));
  // u2: 4.5 - 2 = 2.5; u6: 1.5 - 1 = 0.5
  CHECK(att_strata(ds, 3, 3, 0, nev).estimate == doctest::Approx(2.0).epsilon(1e-12));
  const StrataVariant pooled{Method::Never, false};
  // pooled comparison mean over u5,u6 is 1
  CHECK(att_strata(ds, 3, 3, 1, pooled).estimate == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(att_strata(ds, 3, 3, 0, pooled).estimate == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("toy4h event study weights within a stratum") {
  const auto ds = test::toy4(true);
  const StrataVariant v{Method::NotYetAll, true};
  const auto curve = event_study_strata(ds, v, 1);
  const auto* p = curve.at(1);
  REQUIRE(p);
  REQUIRE(p->weights.size() == 2);
  CHECK(p->weights[0].second == doctest::Approx(0.5));
  CHECK(p->weights[1].second == doctest::Approx(0.5));
  const auto a = att_strata(ds, 3, 3, 1, v).estimate, b = att_strata(ds, 4, 4, 1, v).estimate;
  CHECK(p->estimate == doctest::Approx(0.5 * a + 0.5 * b).epsilon(1e-12));
}

TEST_CASE("pooled difference curve equals the difference of the stratum curves") {
  const auto ds = test::toy4(true);
  const StrataVariant v{Method::Never, false};
  const auto c1 = event_study_strata(ds, v, 1), c0 = event_study_strata(ds, v, 0);
  const auto d = diff_curve(c1, c0, &ds);
  for (const auto& p : d.points)
    CHECK(p.estimate == doctest::Approx(c1.at(p.e)->estimate - c0.at(p.e)->estimate).epsilon(1e-12));
  // e=1: mean(2.5, 3.5) - mean(1.5, 2.5) with u3: 8.2-4.2=4, u4: 6.8-2.8=4 against pooled 1
  CHECK(d.at(1)->estimate == doctest::Approx(0.5 * (2.5 + 3.0) - 0.5 * (1.5 + 3.0)).epsilon(1e-12));
}

TEST_CASE("identical strata give a zero difference") {
  const auto ds = mirrored_toy4();
  for (bool specific : {true, false})
    for (Method m : {Method::Never, Method::NotYet, Method::NotYetAll}) {
      const StrataVariant v{m, specific};
      const auto d = diff_curve(event_study_strata(ds, v, 1, true), event_study_strata(ds, v, 0, true), &ds);
      for (const auto& p : d.points) CHECK(std::abs(p.estimate) < 1e-12);
      const auto s = summaries_strata(ds, v);
      CHECK(std::abs(s.att_simple_diff.estimate) < 1e-12);
      CHECK(std::abs(s.delta_e_avg_diff.estimate) < 1e-12);
      CHECK(s.att_simple_1.estimate == doctest::Approx(8.0 / 3.0).epsilon(1e-12));
    }
}

TEST_CASE("stratum errors") {
  const auto plain = test::toy4();
  const StrataVariant v{Method::Never, true};
  try {
    att_set_strata(plain, 1, v, false);
    FAIL("expected MissingStratum");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingStratum);
  }
  auto s = test::toy4_spec(true);
  s.stratum = {0, 0, 0, 0, 1, 0};
  const PanelDataset no_treated_in_1(s);
  try {
    att_set_strata(no_treated_in_1, 1, v, false);
    FAIL("expected EmptyTreatedCell");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyTreatedCell);
  }
  EventStudyCurve a, b;
  a.points.push_back({});
  a.points.back().e = 1;
  b.points.push_back({});
  b.points.back().e = 2;
  CHECK_THROWS_AS(diff_curve(a, b), Error);
}

TEST_CASE("variant names") {
  CHECK(variant_name({Method::NotYet, true}) == "nyt/specific");
  CHECK(variant_name({Method::Never, false}) == "never/pooled");
}

}
