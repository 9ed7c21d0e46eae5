#include "fleetrisk/panel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "fleetrisk/csv.hpp"

namespace fleetrisk {

void Panel::normalize() {
  std::sort(rows.begin(), rows.end(), [](const PanelRow& a, const PanelRow& b) {
    return std::tie(a.asset_id, a.week) < std::tie(b.asset_id, b.week);
  });
  std::set<std::string> ids, types, units;
  for (const auto& r : rows) {
    ids.insert(r.asset_id);
    types.insert(r.vehicle_type);
    units.insert(r.unit);
  }
  vocab.asset_ids.assign(ids.begin(), ids.end());
  vocab.vehicle_types.assign(types.begin(), types.end());
  vocab.units.assign(units.begin(), units.end());
}

UtilizationTable UtilizationTable::read_csv(std::istream& in) {
  UtilizationTable t;
  csv::Reader reader(in, ',');
  std::vector<std::string> f;
  if (!reader.next(f)) return t;
  if (f.size() < 3) throw Error(ErrorCode::Parse, "utilization sidecar: expected asset_id,week,cumulative_units");
  while (reader.next(f)) {
    const auto line = std::to_string(reader.line());
    if (f.size() < 3) throw Error(ErrorCode::Parse, "utilization sidecar line " + line + ": too few fields");
    auto week = parse_int(f[1]);
    auto value = parse_double(f[2]);
    if (!week || !value || !std::isfinite(*value) || *value < 0.0) {
      throw Error(ErrorCode::Parse, "utilization sidecar line " + line + ": bad week or value");
    }
    t.set(std::string(trim(f[0])), *week, *value);
  }
  return t;
}

void UtilizationTable::write_csv(std::ostream& out) const {
  csv::write_row(out, {"asset_id", "week", "cumulative_units"});
  for (const auto& [asset, series] : table_) {
    for (const auto& [week, value] : series) {
      csv::write_row(out, {asset, std::to_string(week), format_double(value)});
    }
  }
}

void UtilizationTable::set(const std::string& asset_id, WeekIndex week, double value) {
  table_[asset_id][week] = value;
}

std::optional<double> UtilizationTable::at_or_before(const std::string& asset_id, WeekIndex week) const {
  auto it = table_.find(asset_id);
  if (it == table_.end()) return std::nullopt;
  auto w = it->second.upper_bound(week);
  if (w == it->second.begin()) return std::nullopt;
  return std::prev(w)->second;
}

WeekIndex week_of(Date panel_monday, Date d) { return floor_div(d - panel_monday, 7); }

Date panel_start(const std::vector<SubWorkOrderRecord>& records, const PanelOptions& options) {
  if (options.start_date) return options.start_date->monday();
  if (records.empty()) throw Error(ErrorCode::EmptyDataset, "no records");
  Date earliest = records.front().approval_date;
  for (const auto& r : records) earliest = std::min(earliest, r.approval_date);
  return earliest.monday();
}

namespace {

bool qualifies(const SubWorkOrderRecord& r, bool include_scheduled) {
  return include_scheduled || classify_work_plan(r.work_plan_type) == WorkPlanClass::Unscheduled;
}

struct VehicleRecords {
  const SubWorkOrderRecord* first = nullptr;  // earliest record, source order on ties
  WeekIndex first_week = std::numeric_limits<WeekIndex>::max();
  std::set<WeekIndex> flagged;
};

}  // namespace

Panel build_panel(const std::vector<SubWorkOrderRecord>& records, const PanelOptions& options) {
  if (records.empty()) throw Error(ErrorCode::EmptyDataset, "no records to build a panel from");
  const Date monday = panel_start(records, options);

  std::map<std::string, VehicleRecords> vehicles;
  WeekIndex last_week = std::numeric_limits<WeekIndex>::min();
  for (const auto& r : records) {
    const WeekIndex w = week_of(monday, r.approval_date);
    if (w < 0) continue;
    auto& v = vehicles[r.asset_id];
    if (!v.first || r.approval_date < v.first->approval_date) v.first = &r;
    v.first_week = std::min(v.first_week, w);
    if (qualifies(r, options.include_scheduled)) v.flagged.insert(w);
    last_week = std::max(last_week, w);
  }
  if (vehicles.empty()) throw Error(ErrorCode::EmptyDataset, "all records precede the panel start");

  const WeekIndex end = options.end_week.value_or(last_week);
  WeekIndex earliest_first = std::numeric_limits<WeekIndex>::max();
  for (const auto& [id, v] : vehicles) earliest_first = std::min(earliest_first, v.first_week);
  if (end < earliest_first) {
    throw Error(ErrorCode::NonPositiveSpan,
                "end week " + std::to_string(end) + " precedes all data (first week " +
                    std::to_string(earliest_first) + ")");
  }

  Panel panel;
  for (const auto& [id, v] : vehicles) {
    WeekIndex anchor = v.first_week;
    WeekIndex start = v.first_week;
    if (auto year = acquisition_year(id)) {
      const WeekIndex acq = week_of(monday, Date::from_ymd(*year, 1, 1));
      if (acq <= v.first_week) {
        anchor = acq;
        start = std::max<WeekIndex>(acq, 0);
      }
    }
    double rate = options.default_rate;
    if (auto it = options.type_rates.find(v.first->mgmt_cd); it != options.type_rates.end()) rate = it->second;

    std::optional<WeekIndex> last_flag;
    double util = 0.0;
    for (WeekIndex w = start; w <= end; ++w) {
      PanelRow row;
      row.asset_id = id;
      row.vehicle_type = v.first->mgmt_cd;
      row.unit = v.first->equipment_pool;
      row.week = w;
      row.operational_weeks = w - anchor;
      const WeekIndex gap = last_flag ? w - *last_flag - 1 : w - start;
      row.weeks_since_last_visit = std::min(gap, options.gap_cap);
      if (options.utilization) {
        util = std::max(util, options.utilization->at_or_before(id, w).value_or(0.0));
      } else {
        util = static_cast<double>(row.operational_weeks) * rate;
      }
      row.utilization = util;
      row.repair_flag = v.flagged.count(w) ? 1 : 0;
      if (row.repair_flag) last_flag = w;
      panel.rows.push_back(std::move(row));
    }
  }
  panel.normalize();
  return panel;
}

std::set<WeekIndex> repair_weeks(const std::vector<SubWorkOrderRecord>& records, std::string_view asset_id,
                                 bool include_scheduled, Date panel_monday) {
  std::set<WeekIndex> weeks;
  for (const auto& r : records) {
    if (r.asset_id != asset_id || !qualifies(r, include_scheduled)) continue;
    weeks.insert(week_of(panel_monday, r.approval_date));
  }
  return weeks;
}

namespace {
const std::vector<std::string> kPanelHeader = {"asset_id",          "vehicle_type",           "unit",
                                               "week",              "operational_weeks",      "weeks_since_last_visit",
                                               "utilization",       "repair_flag"};
}

void write_panel_csv(std::ostream& out, const Panel& panel) {
  csv::write_row(out, kPanelHeader);
  for (const auto& r : panel.rows) {
    csv::write_row(out, {r.asset_id, r.vehicle_type, r.unit, std::to_string(r.week),
                         std::to_string(r.operational_weeks), std::to_string(r.weeks_since_last_visit),
                         format_double(r.utilization), std::to_string(r.repair_flag)});
  }
}

Panel read_panel_csv(std::istream& in) {
  csv::Reader reader(in, ',');
  std::vector<std::string> f;
  Panel panel;
  if (!reader.next(f)) throw Error(ErrorCode::Parse, "panel csv: missing header");
  if (f != kPanelHeader) throw Error(ErrorCode::Parse, "panel csv: unexpected header");
  while (reader.next(f)) {
    const auto where = "panel csv line " + std::to_string(reader.line());
    if (f.size() != kPanelHeader.size()) throw Error(ErrorCode::Parse, where + ": wrong field count");
    PanelRow r;
    r.asset_id = f[0];
    r.vehicle_type = f[1];
    r.unit = f[2];
    auto week = parse_int(f[3]);
    auto ops = parse_int(f[4]);
    auto gap = parse_int(f[5]);
    auto util = parse_double(f[6]);
    auto flag = parse_int(f[7]);
    if (!week || !ops || !gap || !util || !flag || (*flag != 0 && *flag != 1) || *gap < 0 || *ops < 0 ||
        !std::isfinite(*util)) {
      throw Error(ErrorCode::Parse, where + ": invalid value");
    }
    r.week = *week;
    r.operational_weeks = *ops;
    r.weeks_since_last_visit = *gap;
    r.utilization = *util;
    r.repair_flag = static_cast<int>(*flag);
    panel.rows.push_back(std::move(r));
  }
  panel.normalize();
  for (std::size_t i = 1; i < panel.rows.size(); ++i) {
    if (panel.rows[i].asset_id == panel.rows[i - 1].asset_id && panel.rows[i].week == panel.rows[i - 1].week) {
      throw Error(ErrorCode::Parse, "panel csv: duplicate (asset_id, week) for " + panel.rows[i].asset_id);
    }
  }
  return panel;
}

void write_weekly_labor_hours(std::ostream& out, const std::vector<SubWorkOrderRecord>& records,
                              Date panel_monday) {
  std::map<std::pair<std::string, WeekIndex>, double> totals;
  for (const auto& r : records) {
    totals[{r.asset_id, week_of(panel_monday, r.approval_date)}] += r.labor_hours.value_or(0.0);
  }
  csv::write_row(out, {"asset_id", "week", "labor_hours"});
  for (const auto& [key, hours] : totals) {
    csv::write_row(out, {key.first, std::to_string(key.second), format_double(hours)});
  }
}

}  // namespace fleetrisk
