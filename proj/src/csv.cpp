#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "did/error.hpp"
#include "did/panel.hpp"

namespace did {
namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '\n')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '\n'))
    --e;
  return std::string(s.substr(b, e - b));
}

std::optional<long long> parse_int(std::string_view s) {
  long long v = 0;
  if (s.empty()) return std::nullopt;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  if (s.empty()) return std::nullopt;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

// YYYY-MM-DD -> yyyymmdd
std::optional<long long> parse_iso_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  auto y = parse_int(s.substr(0, 4));
  auto m = parse_int(s.substr(5, 2));
  auto d = parse_int(s.substr(8, 2));
  if (!y || !m || !d || *m < 1 || *m > 12 || *d < 1 || *d > 31) return std::nullopt;
  return *y * 10000 + *m * 100 + *d;
}

enum class TimeKind { Integer, Date };

struct TimeKey {
  TimeKind kind;
  long long key;
};

TimeKey parse_time(const std::string& raw) {
  const std::string s = trim(raw);
  if (auto v = parse_int(s)) return {TimeKind::Integer, *v};
  if (auto d = parse_iso_date(s)) return {TimeKind::Date, *d};
  throw Error(ErrorCode::ParseError, "time label '" + raw + "' is neither an integer nor an ISO date");
}

std::string format_time(TimeKind kind, long long key) {
  if (kind == TimeKind::Integer) return std::to_string(key);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04lld-%02lld-%02lld", key / 10000, (key / 100) % 100, key % 100);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

bool all_integer_labels(const std::vector<std::string>& labels) {
  return std::all_of(labels.begin(), labels.end(),
                     [](const std::string& s) { return parse_int(s).has_value(); });
}

}  // namespace

PanelDataset load_panel(std::span<const PanelRecord> records, const LoadOptions& options) {
  if (records.empty()) throw Error(ErrorCode::InvalidArgument, "no records");

  struct UnitRows {
    std::string first_treat;
    std::optional<double> weight;
    std::optional<std::string> cluster;
    std::optional<int> stratum;
    bool initialized = false;
    std::map<long long, double> cells;
  };

  std::optional<TimeKind> kind;
  std::map<std::string, UnitRows> units;
  std::set<long long> all_times;
  for (const PanelRecord& r : records) {
    const TimeKey tk = parse_time(r.time);
    if (kind && *kind != tk.kind)
      throw Error(ErrorCode::ParseError, "time column mixes integers and dates");
    kind = tk.kind;
    all_times.insert(tk.key);

    UnitRows& u = units[r.unit];
    const std::string ft = trim(r.first_treat);
    if (!u.initialized) {
      u.first_treat = ft;
      u.weight = r.weight;
      u.cluster = r.cluster;
      u.stratum = r.stratum;
      u.initialized = true;
    } else {
      if (u.first_treat != ft)
        throw Error(ErrorCode::InconsistentFirstTreat, "first_treat varies within unit " + r.unit);
      if (u.weight != r.weight)
        throw Error(ErrorCode::InconsistentUnitAttribute,
                    "weight varies within unit " + r.unit + " (weights must be time-constant)");
      if (u.cluster != r.cluster)
        throw Error(ErrorCode::InconsistentUnitAttribute, "cluster varies within unit " + r.unit);
      if (u.stratum != r.stratum)
        throw Error(ErrorCode::InconsistentUnitAttribute, "stratum varies within unit " + r.unit);
    }
    if (std::isnan(r.outcome)) continue;  // missing cell
    if (!u.cells.emplace(tk.key, r.outcome).second)
      throw Error(ErrorCode::DuplicateCell,
                  "unit " + r.unit + " has two rows for time " + format_time(tk.kind, tk.key));
  }

  const std::vector<long long> times(all_times.begin(), all_times.end());
  const int T = static_cast<int>(times.size());

  auto first_treat_position = [&](const std::string& unit, const std::string& ft) -> int {
    if (ft.empty() || ft == options.never_code) return kNever;
    long long key = 0;
    if (auto v = parse_int(ft)) {
      key = (*kind == TimeKind::Date) ? *v * 10000 + 101 : *v;
    } else if (auto d = parse_iso_date(ft)) {
      if (*kind != TimeKind::Date)
        throw Error(ErrorCode::ParseError, "first_treat date for integer time column, unit " + unit);
      key = *d;
    } else {
      throw Error(ErrorCode::ParseError, "unparseable first_treat '" + ft + "' for unit " + unit);
    }
    auto it = std::lower_bound(times.begin(), times.end(), key);
    if (it == times.end()) return kNever - 1;  // treated after the window
    return static_cast<int>(it - times.begin()) + 1;
  };

  std::vector<std::string> names;
  for (const auto& [name, rows] : units) names.push_back(name);
  if (all_integer_labels(names))
    std::stable_sort(names.begin(), names.end(), [](const std::string& a, const std::string& b) {
      return *parse_int(a) < *parse_int(b);
    });

  LoadSummary summary;
  PanelSpec spec;
  spec.n_periods = T;
  bool any_weight = false, any_cluster = false, any_stratum = false;
  for (const auto& [name, u] : units) {
    any_weight |= u.weight.has_value();
    any_cluster |= u.cluster.has_value();
    any_stratum |= u.stratum.has_value();
  }
  std::map<std::string, int> cluster_ids;
  for (const std::string& name : names) {
    const UnitRows& u = units.at(name);
    int g = first_treat_position(name, u.first_treat);
    if (g == 1) {
      ++summary.dropped_always_treated;
      continue;
    }
    if (g == kNever - 1) {
      ++summary.treated_after_window;
      g = kNever;
    }
    if (u.cells.size() != times.size()) {
      if (!options.drop_unbalanced)
        throw Error(ErrorCode::UnbalancedPanel, "unit " + name + " is observed in " +
                                                    std::to_string(u.cells.size()) + " of " +
                                                    std::to_string(T) + " periods");
      ++summary.dropped_unbalanced;
      continue;
    }
    if (any_weight && !u.weight)
      throw Error(ErrorCode::InconsistentUnitAttribute, "missing weight for unit " + name);
    if (any_cluster && !u.cluster)
      throw Error(ErrorCode::InconsistentUnitAttribute, "missing cluster for unit " + name);
    if (any_stratum && !u.stratum)
      throw Error(ErrorCode::InconsistentUnitAttribute, "missing stratum for unit " + name);

    for (long long key : times) spec.outcome.push_back(u.cells.at(key));
    spec.first_treat.push_back(g);
    if (any_weight) spec.weight.push_back(*u.weight);
    if (any_cluster)
      spec.cluster.push_back(
          cluster_ids.try_emplace(*u.cluster, static_cast<int>(cluster_ids.size())).first->second);
    if (any_stratum) spec.stratum.push_back(*u.stratum);
    spec.unit_labels.push_back(name);
  }
  if (spec.first_treat.empty())
    throw Error(ErrorCode::InvalidArgument, "no units left after dropping always-treated units");
  for (long long key : times) spec.period_labels.push_back(format_time(*kind, key));
  return PanelDataset(std::move(spec), summary);
}

std::vector<PanelRecord> read_panel_csv(std::istream& in, const CsvColumns& columns) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "empty CSV input");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
  const std::vector<std::string> header = split_csv_line(line);
  auto find = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (header[j] == name) return j;
    return std::nullopt;
  };
  auto required = [&](const std::string& name) {
    auto j = find(name);
    if (!j) throw Error(ErrorCode::ParseError, "CSV header lacks column '" + name + "'");
    return *j;
  };
  const CsvColumns defaults;
  auto optional_col = [&](const std::string& name, const std::string& def) {
    auto j = find(name);
    if (!j && name != def)
      throw Error(ErrorCode::ParseError, "CSV header lacks column '" + name + "'");
    return j;
  };

  const std::size_t c_unit = required(columns.unit);
  const std::size_t c_time = required(columns.time);
  const std::size_t c_out = required(columns.outcome);
  const std::size_t c_ft = required(columns.first_treat);
  const auto c_w = optional_col(columns.weight, defaults.weight);
  const auto c_cl = optional_col(columns.cluster, defaults.cluster);
  const auto c_st = optional_col(columns.stratum, defaults.stratum);

  std::vector<PanelRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != header.size())
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected " +
                                             std::to_string(header.size()) + " fields, got " +
                                             std::to_string(f.size()));
    PanelRecord r;
    r.unit = f[c_unit];
    r.time = f[c_time];
    if (f[c_out].empty() || f[c_out] == "NA") {
      r.outcome = std::nan("");
    } else if (auto v = parse_double(f[c_out])) {
      r.outcome = *v;
    } else {
      throw Error(ErrorCode::ParseError,
                  "line " + std::to_string(line_no) + ": bad outcome '" + f[c_out] + "'");
    }
    r.first_treat = f[c_ft];
    if (c_w && !f[*c_w].empty()) {
      auto v = parse_double(f[*c_w]);
      if (!v)
        throw Error(ErrorCode::ParseError,
                    "line " + std::to_string(line_no) + ": bad weight '" + f[*c_w] + "'");
      r.weight = *v;
    }
    if (c_cl && !f[*c_cl].empty()) r.cluster = f[*c_cl];
    if (c_st && !f[*c_st].empty()) {
      auto v = parse_int(f[*c_st]);
      if (!v || (*v != 0 && *v != 1))
        throw Error(ErrorCode::ParseError,
                    "line " + std::to_string(line_no) + ": stratum must be 0 or 1");
      r.stratum = static_cast<int>(*v);
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<PanelRecord> read_panel_csv_file(const std::string& path, const CsvColumns& columns) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  return read_panel_csv(in, columns);
}

void write_panel_csv(const PanelDataset& ds, std::ostream& out) {
  const PanelSpec spec = ds.to_spec();
  const bool weighted = std::any_of(spec.weight.begin(), spec.weight.end(),
                                    [](double w) { return w != 1.0; });
  out << "unit,time,outcome,first_treat";
  if (weighted) out << ",weight";
  if (!ds.unit_clusters()) out << ",cluster";
  if (ds.has_stratum()) out << ",stratum";
  out << '\n';
  out << std::setprecision(17);
  for (std::size_t i = 0; i < ds.n_units(); ++i) {
    const int g = ds.first_treat(i);
    const std::string ft = g == kNever ? "0" : ds.period_labels()[g - 1];
    for (int t = 1; t <= ds.n_periods(); ++t) {
      out << ds.unit_labels()[i] << ',' << ds.period_labels()[t - 1] << ',' << ds.y(i, t) << ','
          << ft;
      if (weighted) out << ',' << spec.weight[i];
      if (!ds.unit_clusters()) out << ",c" << ds.clusters()[i];
      if (ds.has_stratum()) out << ',' << ds.stratum(i);
      out << '\n';
    }
  }
}

}  // namespace did
