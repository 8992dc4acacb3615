#pragma once

// JSON and CSV serialization of estimator outputs.

#include <iosfwd>
#include <string>

#include "json.hpp"

#include "did/aggregate.hpp"
#include "did/gmm.hpp"
#include "did/hetero.hpp"
#include "did/mc.hpp"
#include "did/panel.hpp"
#include "did/twfe.hpp"

namespace did::report {

using nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

// Period label at position t: a JSON integer when the label is an integer.
ordered_json period_value(const PanelDataset& ds, int t);

ordered_json to_json(const ValidationReport& report);
ordered_json to_json(const AttGtSet& set, const PanelDataset& ds);
ordered_json to_json(const EventStudyCurve& curve, const PanelDataset* ds = nullptr);
ordered_json to_json(const ScalarSummary& summary);
ordered_json to_json(const GmmModel& model, const PanelDataset& ds);
ordered_json to_json(const GmmFit& fit, const PanelDataset& ds);
ordered_json to_json(const TwfeFit& fit);
ordered_json to_json(const McReport& report);

void write_curve_csv(const EventStudyCurve& curve, std::ostream& out);

std::string dump(const ordered_json& j);

}  // namespace did::report
