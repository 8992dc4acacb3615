#include "did/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>

#include "did/error.hpp"
#include "did/kernels.hpp"

namespace did {

std::string_view pta_name(Pta pta) { return pta == Pta::AllGroups ? "all-groups" : "not-yet"; }

Pta parse_pta(std::string_view name) {
  if (name == "all-groups") return Pta::AllGroups;
  if (name == "not-yet") return Pta::NotYet;
  throw Error(ErrorCode::InvalidArgument, "unknown PTA '" + std::string(name) + "'");
}

int GmmModel::param_index(std::string_view name) const {
  for (std::size_t k = 0; k < params.size(); ++k)
    if (params[k].name == name) return static_cast<int>(k);
  return -1;
}

namespace {

std::string pname_mu(int g) { return "mu[" + std::to_string(g) + "]"; }
std::string pname_treated(int g, int t) {
  return "alpha1[" + std::to_string(g) + "," + std::to_string(t) + "]";
}
std::string pname_trend(int t) { return "lambda[" + std::to_string(t) + "]"; }
std::string pname_share(int g) { return "share[" + group_label(g) + "]"; }

struct TrendMoment {
  int t;
  int s;
  int g;
  std::string comparison;
  std::vector<double> mask;
};

double sparse_dot(const std::vector<std::pair<std::size_t, double>>& a,
                  const std::vector<std::pair<std::size_t, double>>& b) {
  double out = 0.0;
  for (const auto& [ia, va] : a)
    for (const auto& [ib, vb] : b)
      if (ia == ib) out += va * vb;
  return out;
}

// Keep-first exact-rank filter on the weighted Gram matrix of the stacked
// (a, ind * coef) unit functions.
std::vector<bool> independent_moments(const std::vector<GmmMoment>& moments,
                                      std::span<const double> w, double tol) {
  const std::size_t m = moments.size();
  Eigen::MatrixXd K(m, m);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t k = 0; k <= j; ++k) {
      const double aa = kernels::dot3(w, moments[j].value, moments[k].value);
      const double bb = kernels::dot3(w, moments[j].mask, moments[k].mask) *
                        sparse_dot(moments[j].coef, moments[k].coef);
      K(j, k) = K(k, j) = aa + bb;
    }
  std::vector<bool> keep(m, false);
  std::vector<std::size_t> kept;
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(m, m);  // rows/cols indexed by kept position
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t r = kept.size();
    Eigen::VectorXd l(r);
    for (std::size_t a = 0; a < r; ++a) {
      double v = K(kept[a], j);
      for (std::size_t b = 0; b < a; ++b) v -= L(a, b) * l(b);
      l(a) = v / L(a, a);
    }
    const double d = K(j, j) - l.squaredNorm();
    if (!(K(j, j) > 0.0) || d <= tol * K(j, j)) continue;
    for (std::size_t a = 0; a < r; ++a) L(r, a) = l(a);
    L(r, r) = std::sqrt(d);
    kept.push_back(j);
    keep[j] = true;
  }
  return keep;
}

}  // namespace

GmmModel build_moments(const PanelDataset& ds, Pta pta, const GmmBuildOptions& options) {
  const int T = ds.n_periods();
  const auto& groups = ds.groups();
  const std::size_t n = ds.n_units();
  const auto w = ds.weights();
  if (groups.empty()) throw Error(ErrorCode::NoIdentifiedCells, "panel has no treated groups");

  GmmModel model;
  model.pta = pta;
  model.n_units = n;

  auto mass = [&](const std::vector<double>& mask) { return kernels::dot(w, mask); };

  std::vector<TrendMoment> trends;
  std::map<int, bool> trend_ok;
  if (pta == Pta::NotYet) {
    const int s_max = ds.has_never() ? T : groups.back() - 1;
    for (int t = groups.front(); t <= T; ++t)
      for (int s = t; s <= s_max; ++s) {
        const auto sel = Selector::not_treated_at(s);
        auto mask = indicator(ds, sel);
        if (!(mass(mask) > 0.0)) continue;
        trends.push_back({t, s, 0, describe(sel), std::move(mask)});
        trend_ok[t] = true;
      }
  } else {
    for (int g : groups)
      for (int t = 2; t <= g - 1; ++t) {
        trends.push_back({t, 0, g, "G" + std::to_string(g), indicator(ds, Selector::of_group(g))});
        trend_ok[t] = true;
      }
    if (ds.has_never())
      for (int t = 2; t <= T; ++t) {
        trends.push_back({t, 0, 0, "NEVER", indicator(ds, Selector::never())});
        trend_ok[t] = true;
      }
  }

  std::vector<int> cell_groups;
  for (int g : groups) {
    bool any = false;
    for (int t = g; t <= T; ++t) {
      bool ok = true;
      for (int s = g; s <= t; ++s) ok = ok && trend_ok.count(s) > 0;
      if (ok) {
        model.cells.emplace_back(g, t);
        any = true;
      } else {
        model.unidentified.emplace_back(g, t);
      }
    }
    if (any) cell_groups.push_back(g);
  }
  if (model.cells.empty())
    throw Error(ErrorCode::NoIdentifiedCells,
                std::string("no group-time cell is identified under PTA ") + std::string(pta_name(pta)));
  for (const auto& [g, t] : model.unidentified)
    model.warnings.push_back("cell (" + std::to_string(g) + "," + std::to_string(t) +
                             ") is not identified under this PTA");

  // Parameters in canonical order.
  std::map<std::string, std::size_t> index;
  auto add_param = [&](GmmParam::Kind kind, int g, int t, std::string name) {
    index[name] = model.params.size();
    model.params.push_back({kind, g, t, std::move(name)});
  };
  for (int g : cell_groups) add_param(GmmParam::Kind::PreMean, g, g - 1, pname_mu(g));
  for (const auto& [g, t] : model.cells) add_param(GmmParam::Kind::Treated, g, t, pname_treated(g, t));
  for (const auto& [t, ok] : trend_ok) add_param(GmmParam::Kind::Trend, 0, t, pname_trend(t));
  std::vector<int> categories = groups;
  if (ds.has_never()) categories.push_back(kNever);
  for (std::size_t k = 0; k + 1 < categories.size(); ++k)
    add_param(GmmParam::Kind::Share, categories[k], 0, pname_share(categories[k]));

  // Moments in canonical order.
  const std::vector<double> ones(n, 1.0);
  auto product = [&](const std::vector<double>& mask, std::span<const double> x) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = mask[i] * x[i];
    return out;
  };
  for (int g : cell_groups) {
    auto G = indicator(ds, Selector::of_group(g));
    GmmMoment mom;
    mom.name = "pre-level G" + std::to_string(g) + " Y" + std::to_string(g - 1);
    mom.kind = "pre-level";
    mom.g = g;
    mom.t = g - 1;
    mom.comparison = "G" + std::to_string(g);
    mom.value = product(G, ds.period(g - 1));
    mom.mask = std::move(G);
    mom.coef = {{index.at(pname_mu(g)), 1.0}};
    model.moments.push_back(std::move(mom));
  }
  for (const auto& [g, t] : model.cells) {
    auto G = indicator(ds, Selector::of_group(g));
    GmmMoment mom;
    mom.name = "treated-level G" + std::to_string(g) + " Y" + std::to_string(t);
    mom.kind = "treated-level";
    mom.g = g;
    mom.t = t;
    mom.comparison = "G" + std::to_string(g);
    mom.value = product(G, ds.period(t));
    mom.mask = std::move(G);
    mom.coef = {{index.at(pname_treated(g, t)), 1.0}};
    model.moments.push_back(std::move(mom));
  }
  for (std::size_t k = 0; k < categories.size(); ++k) {
    const int g = categories[k];
    if (k + 1 == categories.size()) {
      model.removed.push_back("share " + group_label(g) + " (implied: shares sum to one)");
      continue;
    }
    GmmMoment mom;
    mom.name = "share " + group_label(g);
    mom.kind = "share";
    mom.g = g == kNever ? 0 : g;
    mom.comparison = group_label(g);
    mom.value = g == kNever ? indicator(ds, Selector::never()) : indicator(ds, Selector::of_group(g));
    mom.mask = ones;
    mom.coef = {{index.at(pname_share(g)), 1.0}};
    model.moments.push_back(std::move(mom));
  }
  for (auto& tm : trends) {
    std::vector<double> dy(n);
    kernels::sub(ds.period(tm.t), ds.period(tm.t - 1), dy);
    GmmMoment mom;
    mom.name = "trend dY" + std::to_string(tm.t) + " | " + tm.comparison;
    mom.kind = "trend";
    mom.g = tm.g;
    mom.t = tm.t;
    mom.s = tm.s;
    mom.comparison = tm.comparison;
    mom.value = product(tm.mask, dy);
    mom.mask = std::move(tm.mask);
    mom.coef = {{index.at(pname_trend(tm.t)), 1.0}};
    model.moments.push_back(std::move(mom));
  }

  const auto keep = independent_moments(model.moments, w, options.redundancy_tol);
  std::vector<GmmMoment> kept;
  for (std::size_t j = 0; j < model.moments.size(); ++j) {
    if (keep[j])
      kept.push_back(std::move(model.moments[j]));
    else
      model.removed.push_back(model.moments[j].name + " (linearly dependent on earlier moments)");
  }
  model.moments = std::move(kept);

  if (model.m() > n && !options.allow_big) {
    std::ostringstream msg;
    msg << "moment count m=" << model.m() << " exceeds n=" << n
        << "; pass allow_big with a ridge to override";
    throw Error(ErrorCode::TooManyMoments, msg.str());
  }
  return model;
}

namespace {

// n x m residuals g_j(W_i; alpha).
Eigen::MatrixXd residuals(const GmmModel& model, const Eigen::VectorXd& alpha) {
  const std::size_t n = model.n_units;
  Eigen::MatrixXd G(n, model.m());
  for (std::size_t j = 0; j < model.m(); ++j) {
    const auto& mom = model.moments[j];
    double target = 0.0;
    for (const auto& [k, c] : mom.coef) target += c * alpha(static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < n; ++i) G(i, j) = mom.value[i] - mom.mask[i] * target;
  }
  return G;
}

Eigen::MatrixXd sigma(const Eigen::MatrixXd& G, const PanelDataset& ds, bool clustered) {
  const std::size_t n = ds.n_units();
  const auto w = ds.weights();
  Eigen::MatrixXd S;
  if (clustered) {
    S = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ds.n_clusters()), G.cols());
    const auto cl = ds.clusters();
    for (std::size_t i = 0; i < n; ++i) S.row(cl[i]) += w[i] * G.row(static_cast<Eigen::Index>(i));
  } else {
    S = G;
    for (std::size_t i = 0; i < n; ++i) S.row(static_cast<Eigen::Index>(i)) *= w[i];
  }
  return (S.transpose() * S) / static_cast<double>(n);
}

}  // namespace

GmmFit estimate_gmm(const GmmModel& model, const PanelDataset& ds, const GmmOptions& options) {
  if (model.n_units != ds.n_units())
    throw Error(ErrorCode::InvalidArgument, "model was built on a different panel");
  if (!(options.ridge >= 0.0)) throw Error(ErrorCode::InvalidArgument, "ridge must be >= 0");
  if (model.m() > ds.n_units() && options.ridge == 0.0)
    throw Error(ErrorCode::TooManyMoments, "m > n requires a positive ridge");
  const std::size_t n = ds.n_units();
  const std::size_t m = model.m();
  const std::size_t p = model.p();
  const auto w = ds.weights();
  const double nd = static_cast<double>(n);

  GmmFit fit;
  fit.model = model;
  fit.n_units = n;
  fit.clustered = options.cluster && !ds.unit_clusters();
  fit.n_clusters = fit.clustered ? ds.n_clusters() : n;
  fit.ridge = options.ridge;
  fit.df = model.df();
  if (fit.df < 0)
    throw Error(ErrorCode::RankDeficientJacobian, "fewer moments than parameters after reduction");

  Eigen::VectorXd abar(m);
  Eigen::MatrixXd Bbar = Eigen::MatrixXd::Zero(m, p);
  for (std::size_t j = 0; j < m; ++j) {
    const auto& mom = model.moments[j];
    abar(j) = kernels::dot(w, mom.value) / nd;
    const double mass = kernels::dot(w, mom.mask) / nd;
    for (const auto& [k, c] : mom.coef) Bbar(j, k) += mass * c;
  }
  fit.Psi_hat = -Bbar;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Bbar);
  qr.setThreshold(1e-10);
  if (static_cast<std::size_t>(qr.rank()) < p)
    throw Error(ErrorCode::RankDeficientJacobian,
                "Jacobian rank " + std::to_string(qr.rank()) + " < p=" + std::to_string(p));
  fit.alpha_first = qr.solve(abar);

  auto regularize = [&](Eigen::MatrixXd S) {
    if (options.ridge > 0.0)
      S.diagonal().array() += options.ridge * S.trace() / static_cast<double>(m);
    return S;
  };
  fit.Sigma_hat = regularize(sigma(residuals(model, fit.alpha_first), ds, fit.clustered));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(fit.Sigma_hat, Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues().minCoeff();
  const double lmax = eig.eigenvalues().maxCoeff();
  fit.condition_number = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();
  if (!(lmax > 0.0) || !(lmin > 1e-12 * lmax)) {
    std::ostringstream msg;
    msg << "moment covariance is singular (condition number " << fit.condition_number
        << "); add a ridge or reduce moments";
    throw Error(ErrorCode::SingularSigma, msg.str());
  }

  const Eigen::LDLT<Eigen::MatrixXd> sigma_ldlt(fit.Sigma_hat);
  const Eigen::MatrixXd WB = sigma_ldlt.solve(Bbar);  // Sigma^-1 B
  const Eigen::MatrixXd M = Bbar.transpose() * WB;
  const Eigen::LDLT<Eigen::MatrixXd> m_ldlt(M);
  fit.alpha_hat = m_ldlt.solve(WB.transpose() * abar);
  const Eigen::MatrixXd Minv = m_ldlt.solve(Eigen::MatrixXd::Identity(p, p));
  fit.vcov_alpha = Minv / nd;
  fit.vcov_alpha = (fit.vcov_alpha + fit.vcov_alpha.transpose()).eval() / 2.0;

  const Eigen::MatrixXd G = residuals(model, fit.alpha_hat);
  fit.gbar = abar - Bbar * fit.alpha_hat;
  const Eigen::MatrixXd H = Minv * WB.transpose();  // p x m
  fit.influence = G * H.transpose();

  if (fit.df == 0) {
    fit.J = 0.0;
    fit.p_value = 1.0;
  } else {
    const Eigen::MatrixXd S2 = regularize(sigma(G, ds, fit.clustered));
    fit.J = std::max(0.0, nd * fit.gbar.dot(S2.ldlt().solve(fit.gbar)));
    const boost::math::chi_squared_distribution<double> chi2(fit.df);
    fit.p_value = boost::math::cdf(boost::math::complement(chi2, fit.J));
  }
  fit.A = selection_matrix(model);
  return fit;
}

Eigen::MatrixXd selection_matrix(const GmmModel& model) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(model.cells.size()),
                                            static_cast<Eigen::Index>(model.p()));
  for (std::size_t r = 0; r < model.cells.size(); ++r) {
    const auto [g, t] = model.cells[r];
    A(r, model.param_index(pname_treated(g, t))) = 1.0;
    A(r, model.param_index(pname_mu(g))) = -1.0;
    for (int s = g; s <= t; ++s) A(r, model.param_index(pname_trend(s))) = -1.0;
  }
  return A;
}

AttGtSet att_from_gmm(const GmmFit& fit) {
  AttGtSet set;
  set.method = Method::NotYet;
  set.estimator = "gmm-" + std::string(pta_name(fit.model.pta));
  set.n_units = fit.n_units;
  set.n_clusters = fit.n_clusters;
  set.warnings = fit.model.warnings;
  const Eigen::VectorXd att = fit.A * fit.alpha_hat;
  const Eigen::MatrixXd phi = fit.influence * fit.A.transpose();  // n x cells
  for (std::size_t r = 0; r < fit.model.cells.size(); ++r) {
    GroupTimeResult res;
    res.g = fit.model.cells[r].first;
    res.t = fit.model.cells[r].second;
    res.e = res.t - res.g + 1;
    res.estimate = att(r);
    res.method = Method::NotYet;
    res.comparison = "efficient GMM, PTA " + std::string(pta_name(fit.model.pta));
    res.influence.assign(phi.col(r).data(), phi.col(r).data() + phi.rows());
    set.results.push_back(std::move(res));
  }
  set.covariance = fit.A * fit.vcov_alpha * fit.A.transpose();
  return set;
}

JTest j_test(const GmmFit& fit) {
  if (fit.df == 0)
    throw Error(ErrorCode::JustIdentified, "model is just-identified (df = 0); J is not informative");
  return {fit.J, fit.df, fit.p_value};
}

}  // namespace did
