#pragma once

// Stratum-specific group-time effects, per-stratum event studies and
// stratum-difference summaries.

#include "did/aggregate.hpp"
#include "did/attgt.hpp"

namespace did {

struct StrataVariant {
  Method base = Method::Never;
  // true: comparison units restricted to the same stratum; false: pooled.
  bool specific_trends = true;
};

std::string variant_name(const StrataVariant& v);

GroupTimeResult att_strata(const PanelDataset& ds, int g, int t, int c, const StrataVariant& v);
AttGtSet att_set_strata(const PanelDataset& ds, int c, const StrataVariant& v, bool include_pre);

EventStudyCurve event_study_strata(const PanelDataset& ds, const StrataVariant& v, int c,
                                   bool include_pre = false, const AggregateOptions& options = {});
// curve1 - curve0 at the event times present in both. With a panel the
// analytic se of each difference is filled in.
EventStudyCurve diff_curve(const EventStudyCurve& curve1, const EventStudyCurve& curve0,
                           const PanelDataset* ds = nullptr);

struct StrataSummaries {
  ScalarSummary att_simple_1, att_simple_0, att_simple_diff;
  ScalarSummary delta_e_avg_1, delta_e_avg_0, delta_e_avg_diff;
};

StrataSummaries summaries_strata(const PanelDataset& ds, const StrataVariant& v,
                                 const AggregateOptions& options = {});

}  // namespace did
