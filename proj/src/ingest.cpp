#include "fleetrisk/ingest.hpp"

#include <cctype>
#include <cmath>
#include <set>
#include <utility>

#include "fleetrisk/csv.hpp"

namespace fleetrisk {

SchemaConfig SchemaConfig::with_alias_file(std::istream& in, char delimiter) {
  SchemaConfig cfg;
  cfg.delimiter = delimiter;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::InvalidConfig,
                  "alias file line " + std::to_string(lineno) + ": expected key=value");
    }
    cfg.aliases.emplace(std::string(trim(body.substr(0, eq))), std::string(trim(body.substr(eq + 1))));
  }
  return cfg;
}

namespace {

struct ColumnIndex {
  std::array<std::size_t, columns::kRequired.size()> required{};
  std::optional<std::size_t> labor_hours;
};

std::string_view header_name(const SchemaConfig& schema, std::string_view canonical) {
  if (auto it = schema.aliases.find(canonical); it != schema.aliases.end()) return it->second;
  return canonical;
}

ColumnIndex locate_columns(const std::vector<std::string>& header, const SchemaConfig& schema) {
  std::map<std::string, std::size_t, std::less<>> pos;
  for (std::size_t i = 0; i < header.size(); ++i) pos.emplace(std::string(trim(header[i])), i);

  ColumnIndex idx;
  for (std::size_t k = 0; k < columns::kRequired.size(); ++k) {
    const auto name = header_name(schema, columns::kRequired[k]);
    auto it = pos.find(name);
    if (it == pos.end()) throw Error(ErrorCode::MissingColumn, std::string(name));
    idx.required[k] = it->second;
  }
  if (auto it = pos.find(header_name(schema, columns::kLaborHours)); it != pos.end()) {
    idx.labor_hours = it->second;
  }
  return idx;
}

enum Col : std::size_t {
  kWo, kSub, kApproval, kAsset, kClosed, kItem, kLin, kPool, kTeam, kEstbd, kPlan
};

}  // namespace

ParseResult parse_subworkorders(std::istream& source, const SchemaConfig& schema) {
  ParseResult result;
  csv::Reader reader(source, schema.delimiter);
  std::vector<std::string> fields;
  if (!reader.next(fields)) return result;
  const ColumnIndex idx = locate_columns(fields, schema);
  const std::size_t width = fields.size();

  std::set<std::pair<std::string, std::string>> seen;
  while (reader.next(fields)) {
    const std::size_t line = reader.line();
    auto fail = [&](std::string_view field, std::string reason) {
      result.errors.push_back(RowError{line, std::string(field), std::move(reason)});
    };
    if (reader.unterminated()) {
      fail({}, "unterminated quoted field");
      continue;
    }
    if (fields.size() != width) {
      fail({}, "expected " + std::to_string(width) + " fields, found " + std::to_string(fields.size()));
      continue;
    }
    auto get = [&](Col c) { return std::string(trim(fields[idx.required[c]])); };

    SubWorkOrderRecord rec;
    rec.work_order_id = get(kWo);
    rec.sub_work_order_id = get(kSub);
    rec.asset_id = get(kAsset);
    rec.item_desc = get(kItem);
    rec.mgmt_cd = get(kLin);
    rec.equipment_pool = get(kPool);
    rec.maint_team = get(kTeam);
    rec.estbd_datetime = get(kEstbd);
    rec.work_plan_type = get(kPlan);

    if (rec.asset_id.empty()) {
      fail(columns::kAssetId, "empty asset id");
      continue;
    }
    auto approval = Date::parse(get(kApproval));
    if (!approval) {
      fail(columns::kApprovalDt, "unrecognized date '" + get(kApproval) + "'");
      continue;
    }
    rec.approval_date = *approval;
    if (const auto closed = get(kClosed); !closed.empty()) {
      auto d = Date::parse(closed);
      if (!d) {
        fail(columns::kClosedDt, "unrecognized date '" + closed + "'");
        continue;
      }
      if (*d < rec.approval_date) {
        fail(columns::kClosedDt, "date ordering: closed before approval");
        continue;
      }
      rec.closed_date = *d;
    }
    if (idx.labor_hours) {
      const auto text = std::string(trim(fields[*idx.labor_hours]));
      if (!text.empty()) {
        auto h = parse_double(text);
        if (!h || !std::isfinite(*h) || *h < 0.0) {
          fail(columns::kLaborHours, "invalid labor hours '" + text + "'");
          continue;
        }
        rec.labor_hours = *h;
      }
    }
    if (!seen.emplace(rec.work_order_id, rec.sub_work_order_id).second) {
      fail(columns::kSubWorkOrderId, "duplicate work order / sub work order pair");
      continue;
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

void write_subworkorders(std::ostream& out, const std::vector<SubWorkOrderRecord>& records,
                         char delimiter) {
  std::vector<std::string> row;
  for (auto c : columns::kRequired) row.emplace_back(c);
  row.emplace_back(columns::kLaborHours);
  csv::write_row(out, row, delimiter);
  for (const auto& r : records) {
    row = {r.work_order_id,
           r.sub_work_order_id,
           r.approval_date.iso(),
           r.asset_id,
           r.closed_date ? r.closed_date->iso() : std::string(),
           r.item_desc,
           r.mgmt_cd,
           r.equipment_pool,
           r.maint_team,
           r.estbd_datetime,
           r.work_plan_type,
           r.labor_hours ? format_double(*r.labor_hours) : std::string()};
    csv::write_row(out, row, delimiter);
  }
}

void write_row_errors(std::ostream& out, const std::vector<RowError>& errors) {
  csv::write_row(out, {"line", "field", "reason"});
  for (const auto& e : errors) csv::write_row(out, {std::to_string(e.line), e.field, e.reason});
}

std::optional<int> acquisition_year(std::string_view asset_id) {
  if (asset_id.size() < 4 || asset_id[0] != 'A' || asset_id[1] != 'F') return std::nullopt;
  const auto d1 = static_cast<unsigned char>(asset_id[2]);
  const auto d2 = static_cast<unsigned char>(asset_id[3]);
  if (!std::isdigit(d1) || !std::isdigit(d2)) return std::nullopt;
  return 2000 + (d1 - '0') * 10 + (d2 - '0');
}

WorkPlanClass classify_work_plan(std::string_view code) {
  return to_lower(trim(code)) == "prev" ? WorkPlanClass::Scheduled : WorkPlanClass::Unscheduled;
}

}  // namespace fleetrisk
