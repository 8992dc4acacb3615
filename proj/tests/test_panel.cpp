#include <sstream>

#include "doctest.h"

#include "did/error.hpp"
#include "did/panel.hpp"
#include "fixtures.hpp"

using namespace did;

namespace {

std::vector<PanelRecord> toy4_records() {
  const auto ds = test::toy4();
  std::ostringstream os;
  write_panel_csv(ds, os);
  std::istringstream is(os.str());
  return read_panel_csv(is);
}

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_SUITE("panel") {

TEST_CASE("toy4 realized groups and shares") {
  const auto ds = test::toy4();
  CHECK(ds.n_units() == 6);
  CHECK(ds.n_periods() == 4);
  CHECK(ds.groups() == std::vector<int>{3, 4});
  CHECK(ds.has_never());
  const auto v = validate(ds, 0.05);
  REQUIRE(v.realized_groups.size() == 3);
  CHECK(v.realized_groups[0] == std::pair<int, std::size_t>{3, 2});
  CHECK(v.realized_groups[2] == std::pair<int, std::size_t>{kNever, 2});
  for (const auto& [g, s] : v.group_shares) CHECK(s == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(v.warnings.empty());
}

TEST_CASE("no never-treated group and low shares warn") {
  const auto v = validate(test::without_never(test::toy4()));
  REQUIRE(!v.warnings.empty());
  CHECK(v.warnings.front().find("no never-treated group") != std::string::npos);

  std::mt19937_64 rng(3);
  PanelSpec s;
  s.n_periods = 3;
  for (int i = 0; i < 100; ++i) {
    s.first_treat.push_back(i == 0 ? 2 : kNever);
    for (int t = 0; t < 3; ++t) s.outcome.push_back(0.0);
  }
  const auto low = validate(PanelDataset(s), 0.05);
  REQUIRE(low.warnings.size() == 1);
  CHECK(low.warnings[0].find("share") != std::string::npos);
}

TEST_CASE("selectors enumerate the expected units") {
  const auto ds = test::toy4();
  CHECK(cell_mask(ds, Selector::not_treated_at(3)) == std::vector<std::size_t>{2, 3, 4, 5});
  CHECK(cell_mask(ds, Selector::not_treated_at(4)) == std::vector<std::size_t>{4, 5});
  CHECK(cell_mask(ds, Selector::not_treated_at_excluding(2, 3)) == std::vector<std::size_t>{2, 3, 4, 5});
  CHECK(cell_mask(ds, Selector::of_group(4)) == std::vector<std::size_t>{2, 3});
  CHECK(code_of([&] { cell_mask(test::without_never(ds), Selector::not_treated_at(4)); }) ==
        ErrorCode::EmptyComparisonSet);
  CHECK(code_of([&] { cell_mask(ds, Selector::of_group(2)); }) == ErrorCode::UnknownGroup);
  CHECK(code_of([&] { cell_mask(ds, Selector::never(), 1); }) == ErrorCode::MissingStratum);
  const auto strat = test::toy4(true);
  CHECK(cell_mask(strat, Selector::never(), 1) == std::vector<std::size_t>{4});
}

TEST_CASE("subset and spec round trip") {
  const auto ds = test::toy4();
  const std::vector<std::size_t> idx{5, 0};
  const auto sub = ds.subset(idx);
  CHECK(sub.n_units() == 2);
  CHECK(sub.y(0, 4) == ds.y(5, 4));
  CHECK(sub.first_treat(1) == 3);
  const PanelDataset again(ds.to_spec());
  for (std::size_t i = 0; i < ds.n_units(); ++i)
    for (int t = 1; t <= 4; ++t) CHECK(again.y(i, t) == ds.y(i, t));
}

TEST_CASE("weights normalize to mean one") {
  auto s = test::toy4_spec();
  s.weight = {2, 2, 4, 4, 2, 2};
  const PanelDataset ds(s);
  double sum = 0.0;
  for (double w : ds.weights()) sum += w;
  CHECK(sum == doctest::Approx(6.0));
  CHECK(ds.weights()[2] == doctest::Approx(1.5));
  CHECK(code_of([&] {
          auto bad = test::toy4_spec();
          bad.weight = {1, 1, 1, 1, 0, 0};
          PanelDataset x(bad);
        }) == ErrorCode::InvalidArgument);
}

}

TEST_SUITE("csv") {

TEST_CASE("csv round trip reproduces the panel") {
  const auto recs = toy4_records();
  CHECK(recs.size() == 24);
  const auto ds = load_panel(recs);
  const auto ref = test::toy4();
  REQUIRE(ds.n_units() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(ds.first_treat(i) == ref.first_treat(i));
    for (int t = 1; t <= 4; ++t) CHECK(ds.y(i, t) == ref.y(i, t));
  }
}

TEST_CASE("always-treated units are dropped") {
  auto recs = toy4_records();
  for (int t = 1; t <= 4; ++t) recs.push_back({"u7", std::to_string(t), 1.0, "1", {}, {}, {}});
  const auto ds = load_panel(recs);
  CHECK(ds.n_units() == 6);
  CHECK(ds.load_summary().dropped_always_treated == 1);
}

TEST_CASE("unbalanced, duplicate and inconsistent inputs") {
  auto recs = toy4_records();
  recs.erase(recs.begin() + 1);  // u1, period 2
  CHECK(code_of([&] { load_panel(recs); }) == ErrorCode::UnbalancedPanel);
  LoadOptions drop;
  drop.drop_unbalanced = true;
  const auto ds = load_panel(recs, drop);
  CHECK(ds.n_units() == 5);
  CHECK(ds.load_summary().dropped_unbalanced == 1);

  auto dup = toy4_records();
  dup.push_back(dup.front());
  CHECK(code_of([&] { load_panel(dup); }) == ErrorCode::DuplicateCell);

  auto inc = toy4_records();
  inc[1].first_treat = "4";
  CHECK(code_of([&] { load_panel(inc); }) == ErrorCode::InconsistentFirstTreat);
}

TEST_CASE("date labels and never codes") {
  std::istringstream in(
      "unit,time,outcome,first_treat\n"
      "a,2020-01-01,1,2020-01-02\n"
      "a,2020-01-02,2,2020-01-02\n"
      "b,2020-01-01,1,\n"
      "b,2020-01-02,1.5,\n");
  const auto ds = load_panel(read_panel_csv(in));
  CHECK(ds.n_periods() == 2);
  CHECK(ds.first_treat(0) == 2);
  CHECK(ds.first_treat(1) == kNever);
  CHECK(ds.period_labels()[0] == "2020-01-01");

  std::istringstream in2(
      "unit,time,outcome,first_treat\n"
      "a,1,1,-1\n"
      "a,2,2,-1\n"
      "b,1,1,2\n"
      "b,2,3,2\n");
  LoadOptions o;
  o.never_code = "-1";
  const auto ds2 = load_panel(read_panel_csv(in2), o);
  CHECK(ds2.first_treat(0) == kNever);
}

TEST_CASE("malformed csv") {
  std::istringstream missing("unit,time,outcome\n1,1,0\n");
  CHECK(code_of([&] { read_panel_csv(missing); }) == ErrorCode::ParseError);
  std::istringstream notnum("unit,time,outcome,first_treat\n1,1,abc,0\n");
  CHECK(code_of([&] { read_panel_csv(notnum); }) == ErrorCode::ParseError);
  CsvColumns cols;
  cols.weight = "wt";
  std::istringstream nowt("unit,time,outcome,first_treat\n1,1,0,0\n");
  CHECK(code_of([&] { read_panel_csv(nowt, cols); }) == ErrorCode::ParseError);
}

}
