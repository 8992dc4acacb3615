#pragma once

// Event-study curves and scalar summaries built from group-time cells.

#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "did/attgt.hpp"

namespace did {

enum class Eligibility { LongDifference, LocalDifference };

struct AggregateOptions {
  // Drops the weight-estimation term from the influence (debugging aid).
  bool freeze_weights = false;
};

struct EventPoint {
  int e = 0;
  double estimate = 0.0;
  double se = 0.0;  // analytic, from the influence; replaced by the bootstrap se when bands are attached
  std::pair<double, double> pointwise_ci{0.0, 0.0};
  std::pair<double, double> simultaneous_band{0.0, 0.0};
  std::vector<double> influence;
  std::vector<std::pair<int, double>> weights;  // (g, w(g;e))
  bool reference = false;                        // e = 0 base period of long-difference curves
  bool degenerate = false;
};

struct EventStudyCurve {
  Method method = Method::Never;
  std::string estimator;
  std::optional<int> stratum;
  std::vector<EventPoint> points;  // sorted by e
  double critical_value_sup_t = std::numeric_limits<double>::quiet_NaN();
  double alpha = 0.05;
  bool bands_filled = false;
  std::vector<std::string> warnings;

  const EventPoint* at(int e) const;
};

struct ScalarSummary {
  std::string name;
  double estimate = 0.0;
  double se = 0.0;
  std::pair<double, double> ci{0.0, 0.0};
  std::vector<double> influence;
  std::vector<std::string> notes;
};

double weight_event(const PanelDataset& ds, int g, int e,
                    Eligibility eligibility = Eligibility::LongDifference,
                    std::optional<int> stratum = std::nullopt);

EventStudyCurve event_study(const AttGtSet& set, const PanelDataset& ds,
                            const AggregateOptions& options = {});
ScalarSummary att_simple(const AttGtSet& set, const PanelDataset& ds,
                         const AggregateOptions& options = {});
ScalarSummary delta_e_avg(const EventStudyCurve& curve, const PanelDataset& ds);
ScalarSummary delta_s(const PanelDataset& ds, const AggregateOptions& options = {});

// Share-weighted combination of cells: weight of cell c is
// P(G = g_c [, stratum]) / sum over the listed cells.
struct Combination {
  double estimate = 0.0;
  std::vector<double> influence;
  std::vector<double> weights;
};

Combination combine_by_group_share(const PanelDataset& ds,
                                   const std::vector<const GroupTimeResult*>& cells,
                                   const AggregateOptions& options = {});

// Attaches the analytic se and a normal interval at level alpha.
ScalarSummary make_summary(const PanelDataset& ds, std::string name, double estimate,
                           std::vector<double> influence, double alpha = 0.05);

}  // namespace did
