#include "did/twfe.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <boost/math/distributions/chi_squared.hpp>

#include "did/error.hpp"
#include "did/kernels.hpp"

namespace did {

int TwfeFit::index(std::string_view name) const {
  for (std::size_t k = 0; k < names.size(); ++k)
    if (names[k] == name) return static_cast<int>(k);
  return -1;
}

double TwfeFit::coefficient(std::string_view name) const {
  const int k = index(name);
  if (k < 0) throw Error(ErrorCode::InvalidArgument, "no coefficient named " + std::string(name));
  return coef(k);
}

double TwfeFit::se(std::size_t k) const {
  const double v = vcov(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  return v > 0.0 ? std::sqrt(v) : 0.0;
}

double TwfeFit::se(std::string_view name) const {
  const int k = index(name);
  if (k < 0) throw Error(ErrorCode::InvalidArgument, "no coefficient named " + std::string(name));
  return se(static_cast<std::size_t>(k));
}

namespace {

struct Regressor {
  std::string name;
  int e;
  bool interacted;
  std::vector<double> x;  // length n*T, period-major
};

class Demeaner {
 public:
  Demeaner(const PanelDataset& ds, const TwfeOptions& opt) : ds_(ds), opt_(opt) {
    n_ = ds.n_units();
    T_ = ds.n_periods();
    const auto w = ds.weights();
    wsum_ = kernels::sum(w);
    if (opt.fe == FixedEffects::Group) {
      for (std::size_t i = 0; i < n_; ++i) {
        auto [it, ins] = group_id_.try_emplace(ds.first_treat(i), static_cast<int>(group_id_.size()));
        unit_group_.push_back(it->second);
      }
      group_w_.assign(group_id_.size(), 0.0);
      for (std::size_t i = 0; i < n_; ++i) group_w_[unit_group_[i]] += w[i];
    }
  }

  // Returns the number of sweeps used.
  int apply(std::vector<double>& x) const {
    const auto w = ds_.weights();
    double scale = 0.0;
    for (double v : x) scale = std::max(scale, std::abs(v));
    const double tol = opt_.tol * std::max(1.0, scale);
    std::vector<double> acc;
    for (int iter = 1; iter <= opt_.max_iter; ++iter) {
      double change = 0.0;
      if (opt_.fe == FixedEffects::Unit) {
        for (std::size_t i = 0; i < n_; ++i) {
          double m = 0.0;
          for (int t = 0; t < T_; ++t) m += x[t * n_ + i];
          m /= T_;
          change = std::max(change, std::abs(m));
          for (int t = 0; t < T_; ++t) x[t * n_ + i] -= m;
        }
      } else {
        acc.assign(group_w_.size(), 0.0);
        for (int t = 0; t < T_; ++t)
          for (std::size_t i = 0; i < n_; ++i) acc[unit_group_[i]] += w[i] * x[t * n_ + i];
        for (std::size_t k = 0; k < acc.size(); ++k) {
          acc[k] = group_w_[k] > 0.0 ? acc[k] / (group_w_[k] * T_) : 0.0;
          change = std::max(change, std::abs(acc[k]));
        }
        for (int t = 0; t < T_; ++t)
          for (std::size_t i = 0; i < n_; ++i) x[t * n_ + i] -= acc[unit_group_[i]];
      }
      for (int t = 0; t < T_; ++t) {
        std::span<double> col(x.data() + t * n_, n_);
        const double m = kernels::dot(w, col) / wsum_;
        change = std::max(change, std::abs(m));
        for (auto& v : col) v -= m;
      }
      if (change <= tol) return iter;
    }
    return opt_.max_iter;
  }

 private:
  const PanelDataset& ds_;
  const TwfeOptions& opt_;
  std::size_t n_ = 0;
  int T_ = 0;
  double wsum_ = 0.0;
  std::map<int, int> group_id_;
  std::vector<int> unit_group_;
  std::vector<double> group_w_;
};

TwfeFit fit_ols(const PanelDataset& ds, std::vector<Regressor> regs, const TwfeOptions& opt,
                const std::string& collinear_hint) {
  const std::size_t n = ds.n_units();
  const int T = ds.n_periods();
  const std::size_t N = n * static_cast<std::size_t>(T);
  const auto w = ds.weights();
  std::vector<double> wobs(N);
  for (int t = 0; t < T; ++t)
    for (std::size_t i = 0; i < n; ++i) wobs[t * n + i] = w[i];

  const Demeaner dm(ds, opt);
  TwfeFit fit;
  std::vector<double> y(N);
  for (int t = 1; t <= T; ++t) std::copy_n(ds.period(t).data(), n, y.begin() + (t - 1) * n);
  fit.iterations = dm.apply(y);

  std::vector<double> raw_norm;
  for (auto& r : regs) {
    raw_norm.push_back(kernels::dot3(wobs, r.x, r.x));
    fit.iterations = std::max(fit.iterations, dm.apply(r.x));
  }

  // Keep-first collinearity screen on the demeaned Gram matrix.
  const std::size_t k_all = regs.size();
  Eigen::MatrixXd K(k_all, k_all);
  for (std::size_t a = 0; a < k_all; ++a)
    for (std::size_t b = 0; b <= a; ++b) K(a, b) = K(b, a) = kernels::dot3(wobs, regs[a].x, regs[b].x);
  std::vector<std::size_t> kept;
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(k_all, k_all);
  std::vector<std::string> collinear;
  for (std::size_t j = 0; j < k_all; ++j) {
    const std::size_t r = kept.size();
    Eigen::VectorXd l(r);
    for (std::size_t a = 0; a < r; ++a) {
      double v = K(kept[a], j);
      for (std::size_t b = 0; b < a; ++b) v -= L(a, b) * l(b);
      l(a) = v / L(a, a);
    }
    const double d = K(j, j) - l.squaredNorm();
    if (!(raw_norm[j] > 0.0) || d <= 1e-9 * raw_norm[j]) {
      collinear.push_back(regs[j].name);
      continue;
    }
    for (std::size_t a = 0; a < r; ++a) L(r, a) = l(a);
    L(r, r) = std::sqrt(d);
    kept.push_back(j);
  }
  if (!collinear.empty() && !opt.drop_collinear) {
    std::string msg = "design is collinear with the fixed effects; offending columns:";
    for (const auto& c : collinear) msg += " " + c;
    if (!collinear_hint.empty()) msg += ". " + collinear_hint;
    throw Error(ErrorCode::CollinearDesign, msg);
  }
  if (kept.empty()) throw Error(ErrorCode::CollinearDesign, "no estimable regressors remain");
  fit.dropped = collinear;

  const std::size_t k = kept.size();
  Eigen::MatrixXd XtWX(k, k);
  Eigen::VectorXd XtWy(k);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) XtWX(a, b) = K(kept[a], kept[b]);
    XtWy(a) = kernels::dot3(wobs, regs[kept[a]].x, y);
  }
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(XtWX);
  fit.coef = ldlt.solve(XtWy);
  const Eigen::MatrixXd bread = ldlt.solve(Eigen::MatrixXd::Identity(k, k));

  std::vector<double> u = y;
  for (std::size_t a = 0; a < k; ++a) kernels::axpy(-fit.coef(a), regs[kept[a]].x, u);
  fit.residuals.resize(n, T);
  for (int t = 0; t < T; ++t)
    for (std::size_t i = 0; i < n; ++i) fit.residuals(i, t) = u[t * n + i];

  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(k, k);
  if (opt.vcov == VcovType::Hc0) {
    Eigen::VectorXd row(k);
    for (std::size_t o = 0; o < N; ++o) {
      for (std::size_t a = 0; a < k; ++a) row(a) = regs[kept[a]].x[o];
      meat.noalias() += (wobs[o] * wobs[o] * u[o] * u[o]) * row * row.transpose();
    }
    fit.n_clusters = N;
  } else {
    const std::size_t G = opt.cluster_by_observation ? N : ds.n_clusters();
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(G, k);
    const auto cl = ds.clusters();
    for (int t = 0; t < T; ++t)
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t o = t * n + i;
        const std::size_t c = opt.cluster_by_observation ? o : static_cast<std::size_t>(cl[i]);
        const double wu = wobs[o] * u[o];
        for (std::size_t a = 0; a < k; ++a) S(c, a) += wu * regs[kept[a]].x[o];
      }
    meat = S.transpose() * S;
    fit.n_clusters = G;
  }
  fit.vcov = bread * meat * bread;
  fit.vcov = (fit.vcov + fit.vcov.transpose()).eval() / 2.0;

  for (std::size_t a = 0; a < k; ++a) {
    fit.names.push_back(regs[kept[a]].name);
    fit.event_time.push_back(regs[kept[a]].e);
    fit.interacted.push_back(regs[kept[a]].interacted);
  }
  return fit;
}

std::vector<double> stratum_times(const PanelDataset& ds, const std::vector<double>& x) {
  const std::size_t n = ds.n_units();
  std::vector<double> out(x.size());
  for (std::size_t o = 0; o < x.size(); ++o) out[o] = x[o] * ds.stratum(o % n);
  return out;
}

}  // namespace

TwfeFit twfe_static(const PanelDataset& ds, const TwfeOptions& options) {
  if (options.interact_stratum && !ds.has_stratum())
    throw Error(ErrorCode::MissingStratum, "interaction requested but panel has no stratum");
  const std::size_t n = ds.n_units();
  const int T = ds.n_periods();
  std::vector<Regressor> regs;
  Regressor d{"D", kStaticTerm, false, std::vector<double>(n * T, 0.0)};
  for (int t = 1; t <= T; ++t)
    for (std::size_t i = 0; i < n; ++i) d.x[(t - 1) * n + i] = ds.treated(i, t) ? 1.0 : 0.0;
  regs.push_back(std::move(d));
  if (options.interact_stratum)
    regs.push_back({"D:stratum", kStaticTerm, true, stratum_times(ds, regs[0].x)});
  return fit_ols(ds, std::move(regs), options, "");
}

std::set<int> default_omitted(const PanelDataset& ds, int leads) {
  std::set<int> out{0};
  if (!ds.has_never() && leads > 0) out.insert(-leads);
  return out;
}

std::pair<int, int> default_window(const PanelDataset& ds) {
  const auto groups = ds.groups();
  if (groups.empty()) throw Error(ErrorCode::NoPostCells, "no treated groups");
  const int T = ds.n_periods();
  return {std::clamp(groups.back() - 2, 0, T - 2), std::clamp(T - groups.front() + 1, 1, T - 1)};
}

TwfeFit twfe_dynamic(const PanelDataset& ds, int leads, int lags, std::optional<std::set<int>> omit,
                     const TwfeOptions& options) {
  const int T = ds.n_periods();
  if (leads < 0 || leads > T - 2)
    throw Error(ErrorCode::InvalidArgument, "leads must lie in 0..T-2");
  if (lags < 1 || lags > T - 1) throw Error(ErrorCode::InvalidArgument, "lags must lie in 1..T-1");
  if (options.interact_stratum && !ds.has_stratum())
    throw Error(ErrorCode::MissingStratum, "interaction requested but panel has no stratum");
  const std::set<int> omitted = omit ? *omit : default_omitted(ds, leads);
  if (!omitted.count(0)) throw Error(ErrorCode::InvalidArgument, "omitted set must contain e=0");

  const std::size_t n = ds.n_units();
  std::vector<Regressor> regs;
  for (int e = -leads; e <= lags; ++e) {
    if (omitted.count(e)) continue;
    Regressor r{"e=" + std::to_string(e), e, false, std::vector<double>(n * T, 0.0)};
    for (int t = 1; t <= T; ++t)
      for (std::size_t i = 0; i < n; ++i) {
        const int g = ds.first_treat(i);
        if (g != kNever && t - g + 1 == e) r.x[(t - 1) * n + i] = 1.0;
      }
    regs.push_back(std::move(r));
  }
  if (options.interact_stratum) {
    const std::size_t base = regs.size();
    for (std::size_t k = 0; k < base; ++k)
      regs.push_back({regs[k].name + ":stratum", regs[k].e, true, stratum_times(ds, regs[k].x)});
  }
  std::string hint;
  if (!ds.has_never())
    hint = omitted.size() < 2
               ? "without a never-treated group a second lead must be omitted (for example the "
                 "most negative one)"
               : "without a never-treated group the longest lags may not be separately "
                 "identified; reduce the lag window or drop collinear columns";
  auto fit = fit_ols(ds, std::move(regs), options, hint);
  fit.omitted = omitted;
  return fit;
}

WaldTest wald_test(const TwfeFit& fit, const std::vector<std::size_t>& terms) {
  if (terms.empty()) throw Error(ErrorCode::InvalidArgument, "Wald test needs at least one term");
  const auto q = static_cast<Eigen::Index>(terms.size());
  Eigen::VectorXd b(q);
  Eigen::MatrixXd V(q, q);
  for (Eigen::Index a = 0; a < q; ++a) {
    b(a) = fit.coef(static_cast<Eigen::Index>(terms[a]));
    for (Eigen::Index c = 0; c < q; ++c)
      V(a, c) = fit.vcov(static_cast<Eigen::Index>(terms[a]), static_cast<Eigen::Index>(terms[c]));
  }
  WaldTest out;
  out.df = static_cast<int>(q);
  out.stat = b.dot(V.completeOrthogonalDecomposition().solve(b));
  const boost::math::chi_squared_distribution<double> chi2(out.df);
  out.p_value = boost::math::cdf(boost::math::complement(chi2, std::max(0.0, out.stat)));
  return out;
}

WaldTest pre_period_test(const TwfeFit& fit) {
  std::vector<std::size_t> terms;
  for (std::size_t k = 0; k < fit.names.size(); ++k)
    if (fit.event_time[k] != kStaticTerm && fit.event_time[k] < 0 && !fit.interacted[k])
      terms.push_back(k);
  return wald_test(fit, terms);
}

}  // namespace did
