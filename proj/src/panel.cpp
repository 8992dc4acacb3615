#include "did/panel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "did/error.hpp"

namespace did {

PanelDataset::PanelDataset(PanelSpec spec, LoadSummary summary)
    : T_(spec.n_periods), summary_(summary) {
  if (T_ < 2) throw Error(ErrorCode::InvalidArgument, "panel needs at least two periods");
  n_ = spec.first_treat.size();
  if (n_ == 0) throw Error(ErrorCode::InvalidArgument, "panel has no units");
  if (spec.outcome.size() != n_ * static_cast<std::size_t>(T_))
    throw Error(ErrorCode::UnbalancedPanel, "outcome matrix is not n x T");

  outcome_.resize(n_ * T_);
  for (std::size_t i = 0; i < n_; ++i)
    for (int t = 0; t < T_; ++t) {
      const double v = spec.outcome[i * T_ + t];
      if (!std::isfinite(v))
        throw Error(ErrorCode::InvalidArgument, "non-finite outcome for unit " + std::to_string(i));
      outcome_[t * n_ + i] = v;
    }

  first_treat_ = std::move(spec.first_treat);
  for (std::size_t i = 0; i < n_; ++i) {
    const int g = first_treat_[i];
    if (g == kNever) {
      ++never_count_;
    } else if (g < 2 || g > T_) {
      throw Error(ErrorCode::InvalidArgument,
                  "first_treat " + std::to_string(g) + " outside 2..T for unit " + std::to_string(i));
    } else {
      ++group_counts_[g];
    }
  }
  for (const auto& [g, c] : group_counts_) groups_.push_back(g);

  if (spec.weight.empty()) spec.weight.assign(n_, 1.0);
  if (spec.weight.size() != n_) throw Error(ErrorCode::InvalidArgument, "weight length != n");
  raw_weight_ = std::move(spec.weight);
  double total = 0.0;
  for (double w : raw_weight_) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw Error(ErrorCode::InvalidArgument, "weights must be finite and nonnegative");
    total += w;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::InvalidArgument, "all weights are zero");
  const double mean_w = total / static_cast<double>(n_);
  weight_.resize(n_);
  for (std::size_t i = 0; i < n_; ++i) weight_[i] = raw_weight_[i] / mean_w;

  std::map<int, double> group_weight;
  double never_weight = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    if (first_treat_[i] == kNever)
      never_weight += weight_[i];
    else
      group_weight[first_treat_[i]] += weight_[i];
  }
  for (const auto& [g, w] : group_weight)
    if (!(w > 0.0))
      throw Error(ErrorCode::InvalidArgument, "group " + std::to_string(g) + " has zero total weight");
  if (never_count_ > 0 && !(never_weight > 0.0))
    throw Error(ErrorCode::InvalidArgument, "never-treated group has zero total weight");

  if (spec.cluster.empty()) {
    cluster_.resize(n_);
    std::iota(cluster_.begin(), cluster_.end(), 0);
    n_clusters_ = n_;
    unit_clusters_ = true;
  } else {
    if (spec.cluster.size() != n_) throw Error(ErrorCode::InvalidArgument, "cluster length != n");
    // Relabel to dense ids in order of first appearance.
    std::unordered_map<int, int> dense;
    cluster_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      auto [it, inserted] = dense.try_emplace(spec.cluster[i], static_cast<int>(dense.size()));
      cluster_[i] = it->second;
    }
    n_clusters_ = dense.size();
    unit_clusters_ = n_clusters_ == n_;
  }

  if (!spec.stratum.empty()) {
    if (spec.stratum.size() != n_) throw Error(ErrorCode::InvalidArgument, "stratum length != n");
    for (int c : spec.stratum)
      if (c != 0 && c != 1) throw Error(ErrorCode::InvalidArgument, "stratum must be 0 or 1");
    stratum_ = std::move(spec.stratum);
  }

  unit_labels_ = std::move(spec.unit_labels);
  if (unit_labels_.empty())
    for (std::size_t i = 0; i < n_; ++i) unit_labels_.push_back(std::to_string(i + 1));
  period_labels_ = std::move(spec.period_labels);
  if (period_labels_.empty())
    for (int t = 1; t <= T_; ++t) period_labels_.push_back(std::to_string(t));
  if (unit_labels_.size() != n_ || period_labels_.size() != static_cast<std::size_t>(T_))
    throw Error(ErrorCode::InvalidArgument, "label vectors do not match panel dimensions");
}

bool PanelDataset::has_group(int g) const { return group_counts_.count(g) > 0; }

std::size_t PanelDataset::group_count(int g) const {
  if (g == kNever) return never_count_;
  auto it = group_counts_.find(g);
  return it == group_counts_.end() ? 0 : it->second;
}

PanelSpec PanelDataset::to_spec() const {
  PanelSpec spec;
  spec.n_periods = T_;
  spec.outcome.resize(n_ * T_);
  for (std::size_t i = 0; i < n_; ++i)
    for (int t = 1; t <= T_; ++t) spec.outcome[i * T_ + (t - 1)] = y(i, t);
  spec.first_treat = first_treat_;
  spec.weight = raw_weight_;
  if (!unit_clusters_) spec.cluster = cluster_;
  spec.stratum = stratum_;
  spec.unit_labels = unit_labels_;
  spec.period_labels = period_labels_;
  return spec;
}

PanelDataset PanelDataset::subset(std::span<const std::size_t> units) const {
  PanelSpec spec;
  spec.n_periods = T_;
  for (std::size_t i : units) {
    if (i >= n_) throw Error(ErrorCode::InvalidArgument, "subset index out of range");
    for (int t = 1; t <= T_; ++t) spec.outcome.push_back(y(i, t));
    spec.first_treat.push_back(first_treat_[i]);
    spec.weight.push_back(raw_weight_[i]);
    spec.cluster.push_back(cluster_[i]);
    if (has_stratum()) spec.stratum.push_back(stratum_[i]);
    spec.unit_labels.push_back(unit_labels_[i]);
  }
  if (unit_clusters_) spec.cluster.clear();
  spec.period_labels = period_labels_;
  return PanelDataset(std::move(spec), summary_);
}

std::string group_label(int g) { return g == kNever ? "NEVER" : std::to_string(g); }

// ---------------------------------------------------------------------------

ValidationReport validate(const PanelDataset& ds, double epsilon) {
  ValidationReport report;
  report.dropped_always_treated = ds.load_summary().dropped_always_treated;
  const auto w = ds.weights();
  const double n = static_cast<double>(ds.n_units());

  std::map<int, double> share;
  for (std::size_t i = 0; i < ds.n_units(); ++i) share[ds.first_treat(i)] += w[i] / n;

  for (int g : ds.groups()) report.realized_groups.emplace_back(g, ds.group_count(g));
  if (ds.has_never()) report.realized_groups.emplace_back(kNever, ds.group_count(kNever));
  report.group_shares = share;

  for (const auto& [g, s] : share) {
    if (s <= epsilon) {
      std::ostringstream msg;
      msg << "group " << group_label(g) << " has weighted share " << s << " <= overlap threshold "
          << epsilon;
      report.warnings.push_back(msg.str());
    }
  }
  if (!ds.has_never())
    report.warnings.push_back(
        "no never-treated group: never-treated comparisons are unavailable");
  if (ds.load_summary().dropped_always_treated > 0)
    report.warnings.push_back("dropped " +
                              std::to_string(ds.load_summary().dropped_always_treated) +
                              " always-treated units");
  if (ds.load_summary().dropped_unbalanced > 0)
    report.warnings.push_back("dropped " + std::to_string(ds.load_summary().dropped_unbalanced) +
                              " units with missing periods");
  if (ds.load_summary().treated_after_window > 0)
    report.warnings.push_back(std::to_string(ds.load_summary().treated_after_window) +
                              " units first treated after the last period are coded never-treated");
  return report;
}

bool selects(const PanelDataset& ds, const Selector& sel, std::size_t unit,
             std::optional<int> stratum) {
  if (stratum && ds.stratum(unit) != *stratum) return false;
  const int g = ds.first_treat(unit);
  switch (sel.kind) {
    case Selector::Kind::Group: return g == sel.group;
    case Selector::Kind::Never: return g == kNever;
    case Selector::Kind::NotTreatedAt: return g > sel.period;
    case Selector::Kind::NotTreatedAtExcluding: return g > sel.period && g != sel.group;
  }
  return false;
}

namespace {

void check_selector(const PanelDataset& ds, const Selector& sel, std::optional<int> stratum) {
  if (stratum && !ds.has_stratum())
    throw Error(ErrorCode::MissingStratum, "panel has no stratum column");
  if ((sel.kind == Selector::Kind::Group || sel.kind == Selector::Kind::NotTreatedAtExcluding) &&
      !ds.has_group(sel.group))
    throw Error(ErrorCode::UnknownGroup, "group " + std::to_string(sel.group) + " is not realized");
  if ((sel.kind == Selector::Kind::NotTreatedAt ||
       sel.kind == Selector::Kind::NotTreatedAtExcluding) &&
      (sel.period < 1 || sel.period > ds.n_periods()))
    throw Error(ErrorCode::InvalidArgument, "period " + std::to_string(sel.period) + " out of range");
}

}  // namespace

std::vector<std::size_t> cell_mask(const PanelDataset& ds, const Selector& sel,
                                   std::optional<int> stratum) {
  check_selector(ds, sel, stratum);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < ds.n_units(); ++i)
    if (selects(ds, sel, i, stratum)) out.push_back(i);
  if (out.empty()) {
    std::string msg = "no units match " + describe(sel);
    if (stratum) msg += " in stratum " + std::to_string(*stratum);
    throw Error(ErrorCode::EmptyComparisonSet, msg);
  }
  return out;
}

std::vector<double> indicator(const PanelDataset& ds, const Selector& sel,
                              std::optional<int> stratum) {
  check_selector(ds, sel, stratum);
  std::vector<double> out(ds.n_units(), 0.0);
  for (std::size_t i = 0; i < ds.n_units(); ++i)
    if (selects(ds, sel, i, stratum)) out[i] = 1.0;
  return out;
}

std::string describe(const Selector& sel) {
  switch (sel.kind) {
    case Selector::Kind::Group: return "G" + std::to_string(sel.group);
    case Selector::Kind::Never: return "NEVER";
    case Selector::Kind::NotTreatedAt: return "not-treated-at " + std::to_string(sel.period);
    case Selector::Kind::NotTreatedAtExcluding:
      return "not-treated-at " + std::to_string(sel.period) + " excluding G" +
             std::to_string(sel.group);
  }
  return "?";
}

}  // namespace did
