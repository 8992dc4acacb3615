#include "did/attgt.hpp"

#include <algorithm>
#include <cmath>

#include "did/error.hpp"
#include "did/inference.hpp"
#include "did/kernels.hpp"

namespace did {

std::string_view method_name(Method m) {
  switch (m) {
    case Method::Never: return "never";
    case Method::NotYet: return "nyt";
    case Method::NotYetAll: return "nyt-all";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  if (name == "never") return Method::Never;
  if (name == "nyt" || name == "not-yet") return Method::NotYet;
  if (name == "nyt-all" || name == "nyt+") return Method::NotYetAll;
  throw Error(ErrorCode::InvalidArgument, "unknown method '" + std::string(name) + "'");
}

double AttGtSet::se(std::size_t k) const {
  const double v = covariance(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  return v > 0.0 ? std::sqrt(v) : 0.0;
}

int AttGtSet::find(int g, int t) const {
  for (std::size_t k = 0; k < results.size(); ++k)
    if (results[k].g == g && results[k].t == t) return static_cast<int>(k);
  return -1;
}

namespace {

// coef * (weighted mean of value over the units flagged in mask)
struct MeanTerm {
  double coef;
  std::vector<double> mask;
  std::vector<double> value;
};

std::vector<double> difference(const PanelDataset& ds, int t, int base) {
  std::vector<double> out(ds.n_units());
  kernels::sub(ds.period(t), ds.period(base), out);
  return out;
}

std::string scope_suffix(std::optional<int> stratum) {
  return stratum ? " [stratum " + std::to_string(*stratum) + "]" : "";
}

std::vector<double> treated_mask(const PanelDataset& ds, int g, const StratumScope& scope) {
  auto mask = indicator(ds, Selector::of_group(g), scope.treated);
  if (!(kernels::dot(ds.weights(), mask) > 0.0))
    throw Error(ErrorCode::EmptyTreatedCell,
                "no weighted units in G" + std::to_string(g) + scope_suffix(scope.treated));
  return mask;
}

std::vector<double> comparison_mask(const PanelDataset& ds, const Selector& sel,
                                    const StratumScope& scope) {
  auto mask = indicator(ds, sel, scope.comparison);
  if (!(kernels::dot(ds.weights(), mask) > 0.0))
    throw Error(ErrorCode::EmptyComparisonSet,
                "no weighted units in comparison set " + describe(sel) +
                    scope_suffix(scope.comparison));
  return mask;
}

void check_cell(const PanelDataset& ds, int g, int t) {
  if (!ds.has_group(g))
    throw Error(ErrorCode::UnknownGroup, "group " + std::to_string(g) + " is not realized");
  if (t < 1 || t > ds.n_periods())
    throw Error(ErrorCode::InvalidArgument, "period " + std::to_string(t) + " out of range");
}

GroupTimeResult evaluate(const PanelDataset& ds, const std::vector<MeanTerm>& terms) {
  GroupTimeResult r;
  const auto w = ds.weights();
  const double n = static_cast<double>(ds.n_units());
  r.influence.assign(ds.n_units(), 0.0);
  for (const auto& term : terms) {
    const double mass = kernels::dot(w, term.mask);
    const double mean = kernels::dot3(w, term.mask, term.value) / mass;
    r.estimate += term.coef * mean;
    kernels::centered_axpy(term.coef * n / mass, term.mask, term.value, mean, r.influence);
  }
  return r;
}

void finish(GroupTimeResult& r, Method method, int g, int t,
            const StratumScope& scope, const std::vector<double>& treated) {
  r.g = g;
  r.t = t;
  r.e = t - g + 1;
  r.method = method;
  r.stratum = scope.treated;
  std::size_t count = 0;
  for (double v : treated) count += v > 0.0;
  if (count == 1)
    r.warnings.push_back("G" + std::to_string(g) + scope_suffix(scope.treated) +
                         " has a single unit; its sampling variance is not estimable");
}

}  // namespace

GroupTimeResult att_never(const PanelDataset& ds, int g, int t, const StratumScope& scope) {
  check_cell(ds, g, t);
  auto treated = treated_mask(ds, g, scope);
  auto comparison = comparison_mask(ds, Selector::never(), scope);
  auto diff = difference(ds, t, g - 1);
  std::vector<MeanTerm> terms;
  terms.push_back({1.0, treated, diff});
  terms.push_back({-1.0, std::move(comparison), std::move(diff)});
  auto r = evaluate(ds, terms);
  r.comparison = describe(Selector::never()) + scope_suffix(scope.comparison);
  finish(r, Method::Never, g, t, scope, treated);
  return r;
}

GroupTimeResult att_ny(const PanelDataset& ds, int g, int t, const StratumScope& scope) {
  check_cell(ds, g, t);
  auto treated = treated_mask(ds, g, scope);
  const auto sel = Selector::not_treated_at_excluding(std::max(t, g - 1), g);
  auto comparison = comparison_mask(ds, sel, scope);
  auto diff = difference(ds, t, g - 1);
  std::vector<MeanTerm> terms;
  terms.push_back({1.0, treated, diff});
  terms.push_back({-1.0, std::move(comparison), std::move(diff)});
  auto r = evaluate(ds, terms);
  r.comparison = describe(sel) + scope_suffix(scope.comparison);
  finish(r, Method::NotYet, g, t, scope, treated);
  return r;
}

GroupTimeResult att_ny_plus(const PanelDataset& ds, int g, int t, const StratumScope& scope) {
  check_cell(ds, g, t);
  if (t < g)
    throw Error(ErrorCode::InvalidArgument,
                "att_ny_plus needs t >= g; use att_ny_plus_pre for pre-periods");
  auto treated = treated_mask(ds, g, scope);
  std::vector<MeanTerm> terms;
  terms.push_back({1.0, treated, difference(ds, t, g - 1)});
  std::string desc;
  for (int s = g; s <= t; ++s) {
    const auto sel = Selector::not_treated_at_excluding(s, g);
    std::vector<double> comparison;
    try {
      comparison = comparison_mask(ds, sel, scope);
    } catch (const Error& err) {
      throw Error(err.code(), std::string(err.what()) + " (s=" + std::to_string(s) + ")");
    }
    terms.push_back({-1.0, std::move(comparison), difference(ds, s, s - 1)});
    if (!desc.empty()) desc += "; ";
    desc += "s=" + std::to_string(s) + ": " + describe(sel);
  }
  auto r = evaluate(ds, terms);
  r.comparison = desc + scope_suffix(scope.comparison);
  finish(r, Method::NotYetAll, g, t, scope, treated);
  return r;
}

GroupTimeResult att_ny_plus_pre(const PanelDataset& ds, int g, int t,
                                const StratumScope& scope) {
  check_cell(ds, g, t);
  if (t < 2 || t > g - 1)
    throw Error(ErrorCode::InvalidArgument, "att_ny_plus_pre needs 2 <= t <= g-1");
  auto treated = treated_mask(ds, g, scope);
  const auto sel = Selector::not_treated_at_excluding(t, g);
  auto comparison = comparison_mask(ds, sel, scope);
  auto diff = difference(ds, t, t - 1);
  std::vector<MeanTerm> terms;
  terms.push_back({1.0, treated, diff});
  terms.push_back({-1.0, std::move(comparison), std::move(diff)});
  auto r = evaluate(ds, terms);
  r.comparison = describe(sel) + scope_suffix(scope.comparison);
  r.local_difference = true;
  finish(r, Method::NotYetAll, g, t, scope, treated);
  return r;
}

GroupTimeResult att_cell(const PanelDataset& ds, Method method, int g, int t,
                         const StratumScope& scope) {
  switch (method) {
    case Method::Never: return att_never(ds, g, t, scope);
    case Method::NotYet: return att_ny(ds, g, t, scope);
    case Method::NotYetAll:
      return t >= g ? att_ny_plus(ds, g, t, scope) : att_ny_plus_pre(ds, g, t, scope);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown method");
}

const std::vector<double>& influence(const GroupTimeResult& result) { return result.influence; }

AttGtSet att_set(const PanelDataset& ds, Method method, bool include_pre,
                 const StratumScope& scope) {
  AttGtSet set;
  set.method = method;
  set.estimator = std::string(method_name(method));
  set.stratum = scope.treated;
  set.strata_specific = scope.comparison.has_value();
  set.n_units = ds.n_units();
  set.n_clusters = ds.n_clusters();
  const int T = ds.n_periods();
  for (int g : ds.groups()) {
    for (int t = 1; t <= T; ++t) {
      if (t < g) {
        if (!include_pre) continue;
        if (long_difference(method) ? t > g - 2 : (t < 2 || t > g - 1)) continue;
      }
      try {
        auto r = att_cell(ds, method, g, t, scope);
        for (const auto& w : r.warnings)
          if (std::find(set.warnings.begin(), set.warnings.end(), w) == set.warnings.end())
            set.warnings.push_back(w);
        set.results.push_back(std::move(r));
      } catch (const Error& err) {
        if (err.code() != ErrorCode::EmptyComparisonSet && err.code() != ErrorCode::EmptyTreatedCell)
          throw;
        set.warnings.push_back("cell (" + std::to_string(g) + "," + std::to_string(t) +
                               ") omitted: " + err.what());
      }
    }
  }
  if (set.results.empty())
    throw Error(ErrorCode::NoIdentifiedCells,
                std::string("no identified group-time cells for method ") +
                    std::string(method_name(method)));
  InfluenceColumns cols;
  for (const auto& r : set.results) cols.emplace_back(r.influence);
  set.covariance = influence_covariance(ds, cols);
  return set;
}

double influence_se(const PanelDataset& ds, const std::vector<double>& phi) {
  const auto v = influence_covariance(ds, {std::span<const double>(phi)});
  return v(0, 0) > 0.0 ? std::sqrt(v(0, 0)) : 0.0;
}

}  // namespace did
