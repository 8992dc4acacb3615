#pragma once

// Balanced unit-by-period panel with staggered treatment timing.
//
// Periods are ordinal positions t = 1..T. Each unit carries its first
// treated period g in {2..T} or kNever. Outcomes are stored column-major
// (one contiguous n-vector per period) so that cross-sectional means are a
// single kernel call.

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace did {

inline constexpr int kNever = std::numeric_limits<int>::max();

// Raw inputs for a panel.
struct PanelSpec {
  int n_periods = 0;
  // Unit-major n x T: outcome[i * n_periods + (t - 1)].
  std::vector<double> outcome;
  std::vector<int> first_treat;
  std::vector<double> weight;               // empty: all 1
  std::vector<int> cluster;                 // empty: each unit its own cluster
  std::vector<int> stratum;                 // empty: no stratum column
  std::vector<std::string> unit_labels;     // empty: "1".."n"
  std::vector<std::string> period_labels;   // empty: "1".."T"
};

struct LoadSummary {
  std::size_t dropped_always_treated = 0;
  std::size_t dropped_unbalanced = 0;
  std::size_t treated_after_window = 0;  // first_treat beyond the last period, kept as never
};

class PanelDataset {
 public:
  explicit PanelDataset(PanelSpec spec, LoadSummary summary = {});

  std::size_t n_units() const noexcept { return n_; }
  int n_periods() const noexcept { return T_; }

  // t in 1..T
  double y(std::size_t unit, int t) const { return outcome_[(t - 1) * n_ + unit]; }
  std::span<const double> period(int t) const {
    return {outcome_.data() + static_cast<std::size_t>(t - 1) * n_, n_};
  }

  int first_treat(std::size_t unit) const { return first_treat_[unit]; }
  std::span<const int> first_treat() const noexcept { return first_treat_; }
  // D_{it} = 1{g_i <= t}
  bool treated(std::size_t unit, int t) const { return first_treat_[unit] <= t; }

  // Weights normalized to mean one, so weighted sample means divide by n.
  std::span<const double> weights() const noexcept { return weight_; }
  std::span<const int> clusters() const noexcept { return cluster_; }
  std::size_t n_clusters() const noexcept { return n_clusters_; }
  bool unit_clusters() const noexcept { return unit_clusters_; }

  bool has_stratum() const noexcept { return !stratum_.empty(); }
  int stratum(std::size_t unit) const { return stratum_.at(unit); }
  std::span<const int> strata() const noexcept { return stratum_; }

  // Realized treatment groups, ascending (kNever excluded).
  const std::vector<int>& groups() const noexcept { return groups_; }
  bool has_group(int g) const;
  bool has_never() const noexcept { return never_count_ > 0; }
  std::size_t group_count(int g) const;

  const std::vector<std::string>& unit_labels() const noexcept { return unit_labels_; }
  const std::vector<std::string>& period_labels() const noexcept { return period_labels_; }
  const LoadSummary& load_summary() const noexcept { return summary_; }

  // Rebuilds the spec (unit-major outcomes, original weight scale).
  PanelSpec to_spec() const;
  // Panel restricted to the listed units, in the given order.
  PanelDataset subset(std::span<const std::size_t> units) const;

 private:
  std::size_t n_ = 0;
  int T_ = 0;
  std::vector<double> outcome_;
  std::vector<int> first_treat_;
  std::vector<double> weight_;
  std::vector<double> raw_weight_;
  std::vector<int> cluster_;
  std::size_t n_clusters_ = 0;
  bool unit_clusters_ = true;
  std::vector<int> stratum_;
  std::vector<int> groups_;
  std::map<int, std::size_t> group_counts_;
  std::size_t never_count_ = 0;
  std::vector<std::string> unit_labels_;
  std::vector<std::string> period_labels_;
  LoadSummary summary_;
};

// ---------------------------------------------------------------------------
// Loading

struct PanelRecord {
  std::string unit;
  std::string time;
  double outcome = 0.0;
  std::string first_treat;
  std::optional<double> weight;
  std::optional<std::string> cluster;
  std::optional<int> stratum;
};

struct LoadOptions {
  // first_treat values equal to this string (or empty) mean never treated.
  std::string never_code = "0";
  bool drop_unbalanced = false;
};

PanelDataset load_panel(std::span<const PanelRecord> records, const LoadOptions& options = {});

struct CsvColumns {
  std::string unit = "unit";
  std::string time = "time";
  std::string outcome = "outcome";
  std::string first_treat = "first_treat";
  // Optional columns: used when present. A non-default name that is absent
  // from the header is an error.
  std::string weight = "weight";
  std::string cluster = "cluster";
  std::string stratum = "stratum";
};

std::vector<PanelRecord> read_panel_csv(std::istream& in, const CsvColumns& columns = {});
std::vector<PanelRecord> read_panel_csv_file(const std::string& path,
                                             const CsvColumns& columns = {});
// Long-format CSV in the schema read_panel_csv accepts.
void write_panel_csv(const PanelDataset& ds, std::ostream& out);

// ---------------------------------------------------------------------------
// Validation and unit selection

struct ValidationReport {
  std::size_t dropped_always_treated = 0;
  std::vector<std::pair<int, std::size_t>> realized_groups;  // includes kNever last when present
  std::map<int, double> group_shares;                        // weighted; keys include kNever
  std::vector<std::string> warnings;
};

inline constexpr double kDefaultOverlapEpsilon = 0.01;

ValidationReport validate(const PanelDataset& ds, double epsilon = kDefaultOverlapEpsilon);

struct Selector {
  enum class Kind { Group, Never, NotTreatedAt, NotTreatedAtExcluding };
  Kind kind = Kind::Never;
  int period = 0;
  int group = 0;

  static Selector of_group(int g) { return {Kind::Group, 0, g}; }
  static Selector never() { return {Kind::Never, 0, 0}; }
  // {i : g_i > s}, never-treated included.
  static Selector not_treated_at(int s) { return {Kind::NotTreatedAt, s, 0}; }
  static Selector not_treated_at_excluding(int s, int g) {
    return {Kind::NotTreatedAtExcluding, s, g};
  }
};

bool selects(const PanelDataset& ds, const Selector& sel, std::size_t unit,
             std::optional<int> stratum = std::nullopt);

// Unit indices matching the selector. Throws EmptyComparisonSet when none do.
std::vector<std::size_t> cell_mask(const PanelDataset& ds, const Selector& sel,
                                   std::optional<int> stratum = std::nullopt);

// 0/1 indicator over all units; never throws on empty.
std::vector<double> indicator(const PanelDataset& ds, const Selector& sel,
                              std::optional<int> stratum = std::nullopt);

std::string describe(const Selector& sel);
std::string group_label(int g);

}  // namespace did
