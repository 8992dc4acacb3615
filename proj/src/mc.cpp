#include "did/mc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <array>
#include <map>
#include <optional>
#include <thread>

#include "did/aggregate.hpp"
#include "did/dgp.hpp"
#include "did/error.hpp"
#include "did/gmm.hpp"
#include "did/inference.hpp"

namespace did {

void RunningStats::add(double x) {
  ++n_;
  const double d = x - mean_;
  mean_ += d / static_cast<double>(n_);
  m2_ += d * (x - mean_);
}

double RunningStats::variance() const noexcept {
  return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
}

double RunningStats::sd() const { return std::sqrt(variance()); }

double RunningStats::mc_se() const {
  return n_ > 0 ? sd() / std::sqrt(static_cast<double>(n_)) : 0.0;
}

void for_each_replication(std::size_t reps, unsigned threads,
                          const std::function<void(std::size_t)>& fn) {
  const unsigned k = std::min<unsigned>(resolve_threads(threads),
                                        static_cast<unsigned>(std::max<std::size_t>(reps, 1)));
  if (k <= 1) {
    for (std::size_t r = 0; r < reps; ++r) fn(r);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < k; ++t)
    pool.emplace_back([&] {
      for (std::size_t r = next++; r < reps; r = next++) fn(r);
    });
  for (auto& th : pool) th.join();
}

namespace {

struct Record {
  std::string estimator;
  std::string target;
  double truth;
  double estimate;
  double se;
};

std::string cell_name(int g, int t) {
  return "ATT(" + std::to_string(g) + "," + std::to_string(t) + ")";
}

void add_set(std::vector<Record>& out, const AttGtSet& set, const PanelDataset& ds,
             const Simulation& sim) {
  for (std::size_t k = 0; k < set.results.size(); ++k) {
    const auto& r = set.results[k];
    const auto it = sim.truth.find({r.g, r.t});
    if (it == sim.truth.end()) continue;
    out.push_back({set.estimator, cell_name(r.g, r.t), it->second, r.estimate, set.se(k)});
  }
  const auto curve = event_study(set, ds);
  for (const auto& p : curve.points) {
    const auto it = sim.true_event.find(p.e);
    if (p.reference || it == sim.true_event.end()) continue;
    out.push_back({set.estimator, "es(" + std::to_string(p.e) + ")", it->second, p.estimate, p.se});
  }
  const auto s = att_simple(set, ds);
  out.push_back({set.estimator, "ATT_simple", sim.true_att_simple, s.estimate, s.se});
}

}  // namespace

McReport monte_carlo(const McOptions& options) {
  if (options.reps == 0) throw Error(ErrorCode::InvalidArgument, "reps must be > 0");
  McReport report;
  report.options = options;
  std::vector<std::vector<Record>> per_rep(options.reps);
  std::vector<std::vector<std::string>> rep_warn(options.reps);
  // [rep][pta] = (J, df, p-value)
  std::vector<std::array<std::optional<JTest>, 2>> rep_j(options.reps);

  for_each_replication(options.reps, options.threads, [&](std::size_t rep) {
    const auto cfg =
        scenario_config(options.scenario, options.n_units, replication_seed(options.seed, rep));
    const auto sim = simulate(cfg);
    const auto& ds = sim.panel;
    auto& out = per_rep[rep];
    for (Method m : {Method::Never, Method::NotYet, Method::NotYetAll}) {
      try {
        add_set(out, att_set(ds, m, false), ds, sim);
      } catch (const Error& e) {
        rep_warn[rep].push_back(std::string(method_name(m)) + ": " + e.what());
      }
    }
    for (Pta pta : {Pta::NotYet, Pta::AllGroups}) {
      try {
        const auto model = build_moments(ds, pta);
        const auto fit = estimate_gmm(model, ds);
        if (fit.df > 0) rep_j[rep][pta == Pta::NotYet ? 0 : 1] = j_test(fit);
        add_set(out, att_from_gmm(fit), ds, sim);
      } catch (const Error& e) {
        rep_warn[rep].push_back("gmm-" + std::string(pta_name(pta)) + ": " + e.what());
      }
    }
  });

  const double z = normal_quantile(1.0 - options.alpha / 2.0);
  std::vector<std::string> order;
  std::map<std::string, std::pair<McStat, std::pair<RunningStats, std::size_t>>> acc;
  for (const auto& recs : per_rep)
    for (const auto& r : recs) {
      const std::string key = r.estimator + "|" + r.target;
      auto it = acc.find(key);
      if (it == acc.end()) {
        order.push_back(key);
        McStat st;
        st.estimator = r.estimator;
        st.target = r.target;
        st.truth = r.truth;
        it = acc.emplace(key, std::make_pair(st, std::make_pair(RunningStats{}, std::size_t{0}))).first;
      }
      it->second.second.first.add(r.estimate);
      if (std::abs(r.estimate - r.truth) <= z * r.se) ++it->second.second.second;
    }
  for (const auto& key : order) {
    auto& [st, pr] = acc.at(key);
    st.mean = pr.first.mean();
    st.sd = pr.first.sd();
    st.mc_se = pr.first.mc_se();
    st.reps = pr.first.count();
    st.coverage = st.reps ? static_cast<double>(pr.second) / static_cast<double>(st.reps) : 0.0;
    report.stats.push_back(st);
  }
  for (int k = 0; k < 2; ++k) {
    McTest jt;
    jt.estimator = "gmm-" + std::string(pta_name(k == 0 ? Pta::NotYet : Pta::AllGroups));
    RunningStats js;
    std::size_t rejected = 0;
    for (const auto& r : rep_j) {
      if (!r[k]) continue;
      jt.df = r[k]->df;
      js.add(r[k]->J);
      rejected += r[k]->p_value < options.alpha;
    }
    jt.reps = js.count();
    if (jt.reps == 0) continue;
    jt.mean_J = js.mean();
    jt.rejection_rate = static_cast<double>(rejected) / static_cast<double>(jt.reps);
    report.j_tests.push_back(jt);
  }
  std::map<std::string, std::size_t> warn_count;
  std::vector<std::string> warn_order;
  for (const auto& ws : rep_warn)
    for (const auto& w : ws)
      if (warn_count[w]++ == 0) warn_order.push_back(w);
  for (const auto& w : warn_order)
    report.warnings.push_back(w + " (" + std::to_string(warn_count[w]) + " replications)");
  return report;
}

}  // namespace did
