#include "did/report.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

namespace did::report {

namespace {

ordered_json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

ordered_json matrix(const Eigen::MatrixXd& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(number(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

ordered_json interval(const std::pair<double, double>& p) {
  return ordered_json::array({number(p.first), number(p.second)});
}

ordered_json group_value(const PanelDataset& ds, int g) {
  if (g == kNever) return "NEVER";
  return period_value(ds, g);
}

std::string csv_number(double v) {
  if (!std::isfinite(v)) return "NA";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

ordered_json period_value(const PanelDataset& ds, int t) {
  if (t < 1 || t > ds.n_periods()) return t;
  const auto& label = ds.period_labels()[t - 1];
  long long v = 0;
  const auto res = std::from_chars(label.data(), label.data() + label.size(), v);
  if (res.ec == std::errc() && res.ptr == label.data() + label.size()) return v;
  return label;
}

ordered_json to_json(const ValidationReport& report) {
  ordered_json j;
  j["dropped_always_treated"] = report.dropped_always_treated;
  ordered_json groups = ordered_json::array();
  for (const auto& [g, count] : report.realized_groups) {
    ordered_json e;
    e["group"] = g == kNever ? ordered_json("NEVER") : ordered_json(g);
    e["count"] = count;
    const auto it = report.group_shares.find(g);
    e["share"] = it == report.group_shares.end() ? ordered_json(nullptr) : number(it->second);
    groups.push_back(std::move(e));
  }
  j["realized_groups"] = std::move(groups);
  j["warnings"] = report.warnings;
  return j;
}

ordered_json to_json(const AttGtSet& set, const PanelDataset& ds) {
  ordered_json j;
  j["method"] = set.estimator;
  if (set.stratum) {
    j["stratum"] = *set.stratum;
    j["strata_trends"] = set.strata_specific ? "specific" : "pooled";
  }
  j["n_units"] = set.n_units;
  j["n_clusters"] = set.n_clusters;
  ordered_json cells = ordered_json::array();
  for (std::size_t k = 0; k < set.results.size(); ++k) {
    const auto& r = set.results[k];
    ordered_json c;
    c["g"] = period_value(ds, r.g);
    c["t"] = period_value(ds, r.t);
    c["e"] = r.e;
    c["estimate"] = number(r.estimate);
    c["se"] = number(set.se(k));
    c["comparison"] = r.comparison;
    if (r.local_difference) c["local_difference"] = true;
    cells.push_back(std::move(c));
  }
  j["cells"] = std::move(cells);
  ordered_json cov = ordered_json::array();
  for (Eigen::Index r = 0; r < set.covariance.rows(); ++r)
    for (Eigen::Index c = 0; c < set.covariance.cols(); ++c) cov.push_back(number(set.covariance(r, c)));
  j["covariance"] = std::move(cov);
  j["warnings"] = set.warnings;
  return j;
}

ordered_json to_json(const EventStudyCurve& curve, const PanelDataset* ds) {
  ordered_json j;
  j["method"] = curve.estimator;
  if (curve.stratum) j["stratum"] = *curve.stratum;
  j["alpha"] = curve.alpha;
  j["critical_value_sup_t"] = number(curve.critical_value_sup_t);
  j["bands_filled"] = curve.bands_filled;
  ordered_json pts = ordered_json::array();
  for (const auto& p : curve.points) {
    ordered_json q;
    q["e"] = p.e;
    q["estimate"] = number(p.estimate);
    q["se"] = number(p.se);
    if (curve.bands_filled) {
      q["pointwise_ci"] = interval(p.pointwise_ci);
      q["simultaneous_band"] = interval(p.simultaneous_band);
    }
    if (p.reference) q["reference"] = true;
    if (p.degenerate && !p.reference) q["degenerate"] = true;
    ordered_json w = ordered_json::array();
    for (const auto& [g, wt] : p.weights) w.push_back({{"g", ds ? period_value(*ds, g) : ordered_json(g)}, {"weight", number(wt)}});
    q["weights"] = std::move(w);
    pts.push_back(std::move(q));
  }
  j["points"] = std::move(pts);
  j["warnings"] = curve.warnings;
  return j;
}

ordered_json to_json(const ScalarSummary& s) {
  ordered_json j;
  j["name"] = s.name;
  j["estimate"] = number(s.estimate);
  j["se"] = number(s.se);
  j["ci"] = interval(s.ci);
  if (!s.notes.empty()) j["notes"] = s.notes;
  return j;
}

ordered_json to_json(const GmmModel& model, const PanelDataset& ds) {
  ordered_json j;
  j["pta"] = std::string(pta_name(model.pta));
  j["m"] = model.m();
  j["p"] = model.p();
  j["df"] = model.df();
  ordered_json params = ordered_json::array();
  for (const auto& p : model.params) params.push_back(p.name);
  j["params"] = std::move(params);
  ordered_json moments = ordered_json::array();
  for (const auto& mom : model.moments) {
    ordered_json q;
    q["name"] = mom.name;
    q["kind"] = mom.kind;
    q["g"] = mom.g ? period_value(ds, mom.g) : ordered_json(nullptr);
    q["t"] = mom.t ? period_value(ds, mom.t) : ordered_json(nullptr);
    q["s"] = mom.s ? period_value(ds, mom.s) : ordered_json(nullptr);
    q["comparison"] = mom.comparison;
    moments.push_back(std::move(q));
  }
  j["moments"] = std::move(moments);
  j["removed"] = model.removed;
  ordered_json unid = ordered_json::array();
  for (const auto& [g, t] : model.unidentified)
    unid.push_back({{"g", group_value(ds, g)}, {"t", period_value(ds, t)}});
  j["unidentified_cells"] = std::move(unid);
  j["warnings"] = model.warnings;
  return j;
}

ordered_json to_json(const GmmFit& fit, const PanelDataset& ds) {
  ordered_json j;
  j["model"] = to_json(fit.model, ds);
  ordered_json est = ordered_json::array();
  for (std::size_t k = 0; k < fit.model.p(); ++k) {
    const double v = fit.vcov_alpha(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    est.push_back({{"param", fit.model.params[k].name},
                   {"estimate", number(fit.alpha_hat(static_cast<Eigen::Index>(k)))},
                   {"se", number(v > 0.0 ? std::sqrt(v) : 0.0)}});
  }
  j["estimates"] = std::move(est);
  j["J"] = number(fit.J);
  j["df"] = fit.df;
  j["p_value"] = number(fit.p_value);
  j["condition_number"] = number(fit.condition_number);
  j["ridge"] = fit.ridge;
  j["clustered_sigma"] = fit.clustered;
  return j;
}

ordered_json to_json(const TwfeFit& fit) {
  ordered_json j;
  j["label"] = fit.label;
  ordered_json coefs = ordered_json::array();
  for (std::size_t k = 0; k < fit.names.size(); ++k) {
    ordered_json c;
    c["name"] = fit.names[k];
    if (fit.event_time[k] != kStaticTerm) c["e"] = fit.event_time[k];
    c["estimate"] = number(fit.coef(static_cast<Eigen::Index>(k)));
    c["se"] = number(fit.se(k));
    coefs.push_back(std::move(c));
  }
  j["coefficients"] = std::move(coefs);
  if (!fit.omitted.empty()) j["omitted_event_times"] = std::vector<int>(fit.omitted.begin(), fit.omitted.end());
  if (!fit.dropped.empty()) j["dropped_collinear"] = fit.dropped;
  j["vcov_cluster"] = matrix(fit.vcov);
  j["n_clusters"] = fit.n_clusters;
  return j;
}

ordered_json to_json(const McReport& report) {
  ordered_json j;
  j["scenario"] = report.options.scenario;
  j["n_units"] = report.options.n_units;
  j["reps"] = report.options.reps;
  j["seed"] = report.options.seed;
  ordered_json stats = ordered_json::array();
  for (const auto& s : report.stats)
    stats.push_back({{"estimator", s.estimator},
                     {"target", s.target},
                     {"truth", number(s.truth)},
                     {"mean", number(s.mean)},
                     {"bias", number(s.mean - s.truth)},
                     {"sd", number(s.sd)},
                     {"mc_se", number(s.mc_se)},
                     {"coverage", number(s.coverage)},
                     {"reps", s.reps}});
  j["stats"] = std::move(stats);
  ordered_json tests = ordered_json::array();
  for (const auto& t : report.j_tests)
    tests.push_back({{"estimator", t.estimator},
                     {"df", t.df},
                     {"rejection_rate", number(t.rejection_rate)},
                     {"mean_J", number(t.mean_J)},
                     {"reps", t.reps}});
  j["j_tests"] = std::move(tests);
  j["warnings"] = report.warnings;
  return j;
}

void write_curve_csv(const EventStudyCurve& curve, std::ostream& out) {
  out << "e,estimate,lo_pw,hi_pw,lo_sim,hi_sim\n";
  const double nan = std::nan("");
  for (const auto& p : curve.points) {
    const auto pw = curve.bands_filled ? p.pointwise_ci : std::make_pair(nan, nan);
    const auto sim = curve.bands_filled ? p.simultaneous_band : std::make_pair(nan, nan);
    out << p.e << ',' << csv_number(p.estimate) << ',' << csv_number(pw.first) << ','
        << csv_number(pw.second) << ',' << csv_number(sim.first) << ',' << csv_number(sim.second)
        << '\n';
  }
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace did::report
