#include "did/hetero.hpp"

#include "did/error.hpp"
#include "did/kernels.hpp"

namespace did {

std::string variant_name(const StrataVariant& v) {
  return std::string(method_name(v.base)) + (v.specific_trends ? "/specific" : "/pooled");
}

namespace {

StratumScope scope_for(const PanelDataset& ds, int c, const StrataVariant& v) {
  if (!ds.has_stratum()) throw Error(ErrorCode::MissingStratum, "panel has no stratum column");
  StratumScope scope;
  scope.treated = c;
  if (v.specific_trends) scope.comparison = c;
  return scope;
}

void require_treated(const PanelDataset& ds, int c) {
  const auto w = ds.weights();
  for (std::size_t i = 0; i < ds.n_units(); ++i)
    if (ds.first_treat(i) != kNever && ds.stratum(i) == c && w[i] > 0.0) return;
  throw Error(ErrorCode::EmptyTreatedCell, "stratum " + std::to_string(c) + " has no treated units");
}

}  // namespace

GroupTimeResult att_strata(const PanelDataset& ds, int g, int t, int c, const StrataVariant& v) {
  return att_cell(ds, v.base, g, t, scope_for(ds, c, v));
}

AttGtSet att_set_strata(const PanelDataset& ds, int c, const StrataVariant& v, bool include_pre) {
  const auto scope = scope_for(ds, c, v);
  require_treated(ds, c);
  return att_set(ds, v.base, include_pre, scope);
}

EventStudyCurve event_study_strata(const PanelDataset& ds, const StrataVariant& v, int c,
                                   bool include_pre, const AggregateOptions& options) {
  return event_study(att_set_strata(ds, c, v, include_pre), ds, options);
}

EventStudyCurve diff_curve(const EventStudyCurve& curve1, const EventStudyCurve& curve0,
                           const PanelDataset* ds) {
  EventStudyCurve out;
  out.method = curve1.method;
  out.estimator = curve1.estimator + " (stratum 1 - stratum 0)";
  for (const auto& p1 : curve1.points) {
    const auto* p0 = curve0.at(p1.e);
    if (!p0 || p0->reference != p1.reference) continue;
    if (p1.influence.size() != p0->influence.size())
      throw Error(ErrorCode::InvalidArgument, "curves come from different panels");
    EventPoint d;
    d.e = p1.e;
    d.reference = p1.reference;
    d.degenerate = p1.reference;
    d.estimate = p1.estimate - p0->estimate;
    d.influence.resize(p1.influence.size());
    kernels::sub(p1.influence, p0->influence, d.influence);
    if (ds) d.se = influence_se(*ds, d.influence);
    out.points.push_back(std::move(d));
  }
  bool live = false;
  for (const auto& p : out.points) live = live || !p.reference;
  if (!live) throw Error(ErrorCode::NoCommonE, "stratum curves share no event time");
  return out;
}

namespace {

ScalarSummary difference(const PanelDataset& ds, const ScalarSummary& a, const ScalarSummary& b,
                         std::string name) {
  std::vector<double> phi(a.influence.size());
  kernels::sub(a.influence, b.influence, phi);
  return make_summary(ds, std::move(name), a.estimate - b.estimate, std::move(phi));
}

}  // namespace

StrataSummaries summaries_strata(const PanelDataset& ds, const StrataVariant& v,
                                 const AggregateOptions& options) {
  StrataSummaries out;
  const auto set1 = att_set_strata(ds, 1, v, false);
  const auto set0 = att_set_strata(ds, 0, v, false);
  out.att_simple_1 = att_simple(set1, ds, options);
  out.att_simple_0 = att_simple(set0, ds, options);
  out.att_simple_1.name += "[c=1]";
  out.att_simple_0.name += "[c=0]";
  out.att_simple_diff = difference(ds, out.att_simple_1, out.att_simple_0, "ATT_simple_diff");
  out.delta_e_avg_1 = delta_e_avg(event_study(set1, ds, options), ds);
  out.delta_e_avg_0 = delta_e_avg(event_study(set0, ds, options), ds);
  out.delta_e_avg_1.name += "[c=1]";
  out.delta_e_avg_0.name += "[c=0]";
  out.delta_e_avg_diff = difference(ds, out.delta_e_avg_1, out.delta_e_avg_0, "delta_e_avg_diff");
  return out;
}

}  // namespace did
