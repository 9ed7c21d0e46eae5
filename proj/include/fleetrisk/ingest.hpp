#pragma once

#include <array>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "fleetrisk/common.hpp"

namespace fleetrisk {

/// One row of a DPAS sub-work-order inquiry export.
struct SubWorkOrderRecord {
  std::string work_order_id;
  std::string sub_work_order_id;
  Date approval_date;  // repair start
  std::optional<Date> closed_date;
  std::string asset_id;
  std::string item_desc;
  std::string mgmt_cd;  // vehicle type (Asset LIN/TAMCN)
  std::string equipment_pool;
  std::string maint_team;
  std::string estbd_datetime;
  std::string work_plan_type;
  std::optional<double> labor_hours;

  bool operator==(const SubWorkOrderRecord&) const = default;
};

enum class WorkPlanClass { Scheduled, Unscheduled };

/// Canonical export header names of the consumed fields.
namespace columns {
inline constexpr std::string_view kWorkOrderId = "Work Order ID";
inline constexpr std::string_view kSubWorkOrderId = "Sub Work Order Id";
inline constexpr std::string_view kApprovalDt = "Approval Dt";
inline constexpr std::string_view kAssetId = "Asset Id";
inline constexpr std::string_view kClosedDt = "Closed Dt";
inline constexpr std::string_view kItemDesc = "Item Desc";
inline constexpr std::string_view kAssetLin = "Asset LIN/TAMCN";
inline constexpr std::string_view kEquipmentPool = "Equipment Pool";
inline constexpr std::string_view kMaintTeam = "Maint Team Name";
inline constexpr std::string_view kEstbdDateTime = "Estbd Dt/Time";
inline constexpr std::string_view kWorkPlanType = "Work Plan Type CD";
/// Optional; absent column means no labor hours on any record.
inline constexpr std::string_view kLaborHours = "Labor Hours";

inline constexpr std::array<std::string_view, 11> kRequired = {
    kWorkOrderId, kSubWorkOrderId, kApprovalDt, kAssetId,    kClosedDt,     kItemDesc,
    kAssetLin,    kEquipmentPool,  kMaintTeam,  kEstbdDateTime, kWorkPlanType};
}  // namespace columns

struct SchemaConfig {
  char delimiter = ',';
  /// canonical column name -> header name used by the source file
  std::map<std::string, std::string, std::less<>> aliases;

  /// Parses `key=value` lines (canonical=actual); '#' starts a comment.
  static SchemaConfig with_alias_file(std::istream& in, char delimiter = ',');
};

struct RowError {
  std::size_t line = 0;  // 1-based physical line of the record
  std::string field;     // canonical column name, empty for row-level problems
  std::string reason;
};

struct ParseResult {
  std::vector<SubWorkOrderRecord> records;
  std::vector<RowError> errors;
};

/// Parses a delimited export with a header row. Unknown columns are ignored;
/// a missing required column throws Error(MissingColumn). Each data row yields
/// exactly one record or one RowError.
ParseResult parse_subworkorders(std::istream& source, const SchemaConfig& schema = {});

/// Writes records with the canonical required header (plus Labor Hours).
void write_subworkorders(std::ostream& out, const std::vector<SubWorkOrderRecord>& records,
                         char delimiter = ',');

void write_row_errors(std::ostream& out, const std::vector<RowError>& errors);

/// "AF08I00508" -> 2008. Assumes the 2000s century.
std::optional<int> acquisition_year(std::string_view asset_id);

/// Only PREV (case-insensitive, trimmed) is scheduled maintenance.
WorkPlanClass classify_work_plan(std::string_view code);

}  // namespace fleetrisk
