#include "did/aggregate.hpp"

#include <cmath>
#include <map>

#include "did/error.hpp"
#include "did/inference.hpp"
#include "did/kernels.hpp"

namespace did {

const EventPoint* EventStudyCurve::at(int e) const {
  for (const auto& p : points)
    if (p.e == e) return &p;
  return nullptr;
}

namespace {

bool eligible(int g, int e, int T, Eligibility elig) {
  if (e >= 1) return g + e - 1 <= T;
  return g + e - 1 >= (elig == Eligibility::LongDifference ? 1 : 2);
}

std::vector<double> group_indicator(const PanelDataset& ds, int g, std::optional<int> stratum) {
  std::vector<double> out(ds.n_units(), 0.0);
  for (std::size_t i = 0; i < ds.n_units(); ++i)
    if (ds.first_treat(i) == g && (!stratum || ds.stratum(i) == *stratum)) out[i] = 1.0;
  return out;
}

}  // namespace

double weight_event(const PanelDataset& ds, int g, int e, Eligibility eligibility,
                    std::optional<int> stratum) {
  if (e == 0) throw Error(ErrorCode::InvalidArgument, "event time 0 is the base period");
  if (!ds.has_group(g))
    throw Error(ErrorCode::UnknownGroup, "group " + std::to_string(g) + " is not realized");
  if (stratum && !ds.has_stratum())
    throw Error(ErrorCode::MissingStratum, "panel has no stratum column");
  const int T = ds.n_periods();
  if (!eligible(g, e, T, eligibility))
    throw Error(ErrorCode::IneligibleGroup,
                "group " + std::to_string(g) + " has no cell at e=" + std::to_string(e));
  const auto w = ds.weights();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ds.n_units(); ++i) {
    const int gi = ds.first_treat(i);
    if (gi == kNever || (stratum && ds.stratum(i) != *stratum)) continue;
    if (!eligible(gi, e, T, eligibility)) continue;
    den += w[i];
    if (gi == g) num += w[i];
  }
  if (!(num > 0.0))
    throw Error(ErrorCode::EmptyTreatedCell,
                "group " + std::to_string(g) + " has no weighted units in this stratum");
  return num / den;
}

Combination combine_by_group_share(const PanelDataset& ds,
                                   const std::vector<const GroupTimeResult*>& cells,
                                   const AggregateOptions& options) {
  const std::size_t n = ds.n_units();
  const auto w = ds.weights();
  Combination out;
  out.influence.assign(n, 0.0);
  if (cells.empty()) return out;

  // One indicator per distinct (g, stratum); cells of the same group share it.
  std::map<std::pair<int, int>, std::vector<double>> indicators;
  std::vector<const std::vector<double>*> cell_ind;
  std::vector<double> share;
  double total = 0.0;
  for (const auto* c : cells) {
    const auto key = std::make_pair(c->g, c->stratum.value_or(-1));
    auto it = indicators.find(key);
    if (it == indicators.end())
      it = indicators.emplace(key, group_indicator(ds, c->g, c->stratum)).first;
    cell_ind.push_back(&it->second);
    const double pi = kernels::dot(w, it->second) / static_cast<double>(n);
    share.push_back(pi);
    total += pi;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::EmptyTreatedCell, "aggregation cells carry no weight");

  out.weights.resize(cells.size());
  for (std::size_t k = 0; k < cells.size(); ++k) {
    out.weights[k] = share[k] / total;
    out.estimate += out.weights[k] * cells[k]->estimate;
  }
  for (std::size_t k = 0; k < cells.size(); ++k)
    kernels::axpy(out.weights[k], cells[k]->influence, out.influence);
  if (options.freeze_weights) return out;

  // phi_w(c) = (G_c - w_c * sum_c' G_c') / total
  std::vector<double> multiplicity(n, 0.0);
  for (const auto* ind : cell_ind) kernels::axpy(1.0, *ind, multiplicity);
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const double theta = cells[k]->estimate / total;
    kernels::axpy(theta, *cell_ind[k], out.influence);
    kernels::axpy(-theta * out.weights[k], multiplicity, out.influence);
  }
  return out;
}

ScalarSummary make_summary(const PanelDataset& ds, std::string name, double estimate,
                           std::vector<double> influence, double alpha) {
  ScalarSummary s;
  s.name = std::move(name);
  s.estimate = estimate;
  s.se = influence_se(ds, influence);
  const double z = normal_quantile(1.0 - alpha / 2.0);
  s.ci = {estimate - z * s.se, estimate + z * s.se};
  s.influence = std::move(influence);
  return s;
}

EventStudyCurve event_study(const AttGtSet& set, const PanelDataset& ds,
                            const AggregateOptions& options) {
  EventStudyCurve curve;
  curve.method = set.method;
  curve.estimator = set.estimator;
  curve.stratum = set.stratum;
  curve.warnings = set.warnings;

  std::map<int, std::vector<const GroupTimeResult*>> by_e;
  for (const auto& r : set.results)
    if (r.e != 0) by_e[r.e].push_back(&r);

  bool has_negative = false;
  for (const auto& [e, cells] : by_e) {
    if (e < 0) has_negative = true;
    auto comb = combine_by_group_share(ds, cells, options);
    EventPoint p;
    p.e = e;
    p.estimate = comb.estimate;
    for (std::size_t k = 0; k < cells.size(); ++k) p.weights.emplace_back(cells[k]->g, comb.weights[k]);
    p.influence = std::move(comb.influence);
    p.se = influence_se(ds, p.influence);
    curve.points.push_back(std::move(p));
  }
  if (has_negative && long_difference(set.method)) {
    EventPoint ref;
    ref.e = 0;
    ref.reference = true;
    ref.degenerate = true;
    ref.influence.assign(ds.n_units(), 0.0);
    auto pos = curve.points.begin();
    while (pos != curve.points.end() && pos->e < 0) ++pos;
    curve.points.insert(pos, std::move(ref));
  }
  if (set.method == Method::NotYetAll && has_negative)
    curve.warnings.push_back(
        "pre-period points are one-period local deviations, not cumulative differences");
  return curve;
}

ScalarSummary att_simple(const AttGtSet& set, const PanelDataset& ds,
                         const AggregateOptions& options) {
  std::vector<const GroupTimeResult*> cells;
  for (const auto& r : set.results)
    if (r.t >= r.g) cells.push_back(&r);
  if (cells.empty()) throw Error(ErrorCode::NoPostCells, "no post-treatment cells to aggregate");
  auto comb = combine_by_group_share(ds, cells, options);
  auto s = make_summary(ds, "ATT_simple", comb.estimate, std::move(comb.influence));
  s.notes.push_back(std::to_string(cells.size()) + " post-treatment cells");
  return s;
}

ScalarSummary delta_e_avg(const EventStudyCurve& curve, const PanelDataset& ds) {
  std::vector<const EventPoint*> pos;
  for (const auto& p : curve.points)
    if (p.e >= 1 && !p.reference) pos.push_back(&p);
  if (pos.empty()) throw Error(ErrorCode::NoPostCells, "curve has no positive event times");
  const double k = static_cast<double>(pos.size());
  double est = 0.0;
  std::vector<double> phi(ds.n_units(), 0.0);
  for (const auto* p : pos) {
    est += p->estimate;
    kernels::axpy(1.0 / k, p->influence, phi);
  }
  est /= k;
  auto s = make_summary(ds, "delta_e_avg", est, std::move(phi));
  s.notes.push_back("divisor " + std::to_string(pos.size()) + " (positive event times present)");
  return s;
}

ScalarSummary delta_s(const PanelDataset& ds, const AggregateOptions& options) {
  std::vector<GroupTimeResult> cells;
  for (int g : ds.groups()) cells.push_back(att_ny(ds, g, g));
  if (cells.empty()) throw Error(ErrorCode::NoPostCells, "no treated groups");
  std::vector<const GroupTimeResult*> ptrs;
  for (const auto& c : cells) ptrs.push_back(&c);
  auto comb = combine_by_group_share(ds, ptrs, options);
  return make_summary(ds, "delta_S", comb.estimate, std::move(comb.influence));
}

}  // namespace did
