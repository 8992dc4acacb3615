#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "did/panel.hpp"

namespace did::test {

// Six units, four periods: u1,u2 first treated at 3; u3,u4 at 4; u5,u6 never.
// Untreated trends are exactly parallel (mean one per period in every group).
// Stratum: u1,u3,u5 -> 1, the others 0.
inline PanelSpec toy4_spec(bool with_stratum = false) {
  PanelSpec s;
  s.n_periods = 4;
  s.outcome = {0.5, 1.5, 5.0, 7.0,   //
               1.0, 2.0, 4.5, 6.5,   //
               2.0, 3.0, 4.2, 8.2,   //
               1.0, 2.0, 2.8, 6.8,   //
               -0.5, 0.5, 2.0, 3.0,  //
               0.0, 1.0, 1.5, 2.5};
  s.first_treat = {3, 3, 4, 4, kNever, kNever};
  s.unit_labels = {"u1", "u2", "u3", "u4", "u5", "u6"};
  if (with_stratum) s.stratum = {1, 0, 1, 0, 1, 0};
  return s;
}

inline PanelDataset toy4(bool with_stratum = false) { return PanelDataset(toy4_spec(with_stratum)); }

inline PanelDataset without_never(const PanelDataset& ds) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < ds.n_units(); ++i)
    if (ds.first_treat(i) != kNever) keep.push_back(i);
  return ds.subset(keep);
}

struct RandomPanelOptions {
  std::size_t n = 8;
  int T = 4;
  bool never = true;
  bool weights = false;
  bool clusters = false;
  bool stratum = false;
};

// Every group in 2..T (and NEVER) gets at least two units; outcomes are
// arbitrary so no parallel-trends structure is assumed.
inline PanelDataset random_panel(std::mt19937_64& rng, const RandomPanelOptions& o) {
  std::vector<int> cats;
  for (int g = 2; g <= o.T; ++g) cats.push_back(g);
  if (o.never) cats.push_back(kNever);
  const std::size_t n = std::max(o.n, 2 * cats.size());
  std::uniform_int_distribution<std::size_t> pick(0, cats.size() - 1);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  PanelSpec s;
  s.n_periods = o.T;
  for (std::size_t i = 0; i < n; ++i) {
    s.first_treat.push_back(i < 2 * cats.size() ? cats[i / 2] : cats[pick(rng)]);
    for (int t = 0; t < o.T; ++t) s.outcome.push_back(z(rng) + 0.3 * t);
    if (o.weights) s.weight.push_back(u(rng));
    if (o.clusters) s.cluster.push_back(static_cast<int>(i / 3));
    if (o.stratum) s.stratum.push_back(static_cast<int>(i % 2));
  }
  return PanelDataset(std::move(s));
}

// Brute-force reference built from raw weighted group means.
class Oracle {
 public:
  explicit Oracle(const PanelDataset& ds) : ds_(ds) {}

  template <class Pred>
  double mean_diff(Pred in, int t1, int t0) const {
    double num = 0.0, den = 0.0;
    const auto w = ds_.weights();
    for (std::size_t i = 0; i < ds_.n_units(); ++i)
      if (in(ds_.first_treat(i))) {
        num += w[i] * (ds_.y(i, t1) - ds_.y(i, t0));
        den += w[i];
      }
    return num / den;
  }

  double never(int g, int t) const {
    return mean_diff([g](int gi) { return gi == g; }, t, g - 1) -
           mean_diff([](int gi) { return gi == kNever; }, t, g - 1);
  }

  double ny(int g, int t) const {
    const int s = std::max(t, g - 1);
    return mean_diff([g](int gi) { return gi == g; }, t, g - 1) -
           mean_diff([g, s](int gi) { return gi > s && gi != g; }, t, g - 1);
  }

  double ny_plus(int g, int t) const {
    double v = mean_diff([g](int gi) { return gi == g; }, t, g - 1);
    for (int s = g; s <= t; ++s) v -= mean_diff([g, s](int gi) { return gi > s && gi != g; }, s, s - 1);
    return v;
  }

  double ny_plus_pre(int g, int t) const {
    return mean_diff([g](int gi) { return gi == g; }, t, t - 1) -
           mean_diff([g, t](int gi) { return gi > t && gi != g; }, t, t - 1);
  }

 private:
  const PanelDataset& ds_;
};

}  // namespace did::test
