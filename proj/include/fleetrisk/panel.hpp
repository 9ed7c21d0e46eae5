#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "fleetrisk/common.hpp"
#include "fleetrisk/ingest.hpp"

namespace fleetrisk {

/// Weeks since the Monday-aligned panel start. Negative values only appear
/// transiently (e.g. an acquisition date before the panel start).
using WeekIndex = std::int64_t;

struct PanelRow {
  std::string asset_id;
  std::string vehicle_type;  // mgmt_cd
  std::string unit;          // equipment_pool
  WeekIndex week = 0;
  std::int64_t operational_weeks = 0;
  std::int64_t weeks_since_last_visit = 0;
  double utilization = 0.0;
  int repair_flag = 0;

  bool operator==(const PanelRow&) const = default;
};

struct PanelVocab {
  std::vector<std::string> asset_ids;
  std::vector<std::string> vehicle_types;
  std::vector<std::string> units;

  bool operator==(const PanelVocab&) const = default;
};

/// Rows sorted by (asset_id, week); vocab lists are sorted distinct values.
struct Panel {
  std::vector<PanelRow> rows;
  PanelVocab vocab;

  /// Re-sorts rows and recomputes vocab from them.
  void normalize();
  bool empty() const { return rows.empty(); }
};

/// Cumulative usage per (asset, week), from a sidecar CSV.
class UtilizationTable {
 public:
  /// Columns: asset_id, week, cumulative_units (header required).
  static UtilizationTable read_csv(std::istream& in);
  void write_csv(std::ostream& out) const;

  void set(const std::string& asset_id, WeekIndex week, double value);
  /// Latest value at or before `week`; nullopt before the first entry.
  std::optional<double> at_or_before(const std::string& asset_id, WeekIndex week) const;
  bool empty() const { return table_.empty(); }

 private:
  std::map<std::string, std::map<WeekIndex, double>, std::less<>> table_;
};

struct PanelOptions {
  bool include_scheduled = true;
  /// Week 0 starts on the Monday on or before this date; defaults to the
  /// earliest approval date. Records before it are ignored.
  std::optional<Date> start_date;
  /// Last week (inclusive); defaults to the last week containing a record.
  std::optional<WeekIndex> end_week;
  std::int64_t gap_cap = 104;
  std::optional<UtilizationTable> utilization;
  /// Proxy utilization when no sidecar is given: operational_weeks * rate.
  std::map<std::string, double, std::less<>> type_rates;
  double default_rate = 1.0;
};

WeekIndex week_of(Date panel_monday, Date d);

/// Monday of week 0 for these records and options.
Date panel_start(const std::vector<SubWorkOrderRecord>& records, const PanelOptions& options);

Panel build_panel(const std::vector<SubWorkOrderRecord>& records, const PanelOptions& options = {});

/// Weeks with qualifying approval dates for one vehicle.
std::set<WeekIndex> repair_weeks(const std::vector<SubWorkOrderRecord>& records, std::string_view asset_id,
                                 bool include_scheduled, Date panel_monday);

void write_panel_csv(std::ostream& out, const Panel& panel);
Panel read_panel_csv(std::istream& in);

/// Per-vehicle weekly labor-hour totals (asset_id, week, labor_hours).
void write_weekly_labor_hours(std::ostream& out, const std::vector<SubWorkOrderRecord>& records,
                              Date panel_monday);

}  // namespace fleetrisk
