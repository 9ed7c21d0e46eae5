#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fleetrisk/panel.hpp"

namespace fleetrisk {

/// Which of the six panel features enter the design matrix.
struct FeatureSpec {
  bool vehicle_id = false;
  bool vehicle_type = false;
  bool unit = false;
  bool operational_weeks = false;
  bool weeks_since_last_visit = false;
  bool utilization = false;

  static FeatureSpec all() { return {true, true, true, true, true, true}; }
  bool any() const {
    return vehicle_id || vehicle_type || unit || operational_weeks || weeks_since_last_visit || utilization;
  }
  /// "type+age+gap" style label, in column order.
  std::string label() const;
  /// Inverse of label(); accepts id,type,unit,age,gap,util joined by '+' or ','.
  static FeatureSpec parse(std::string_view text);

  bool operator==(const FeatureSpec&) const = default;
};

enum class ColumnKind { Numeric, OneHot };

inline constexpr std::string_view kUnknownLevel = "<unknown>";

struct ColumnInfo {
  std::string name;   // "operational_weeks" or "vehicle_type=TRUCK"
  ColumnKind kind = ColumnKind::Numeric;
  std::string group;  // categorical group name, or the numeric feature name
  std::string level;  // one-hot level; empty for numerics
  double scale = 1.0;

  bool operator==(const ColumnInfo&) const = default;
};

/// Column metadata shared by a training matrix, its model, and every matrix
/// later encoded for that model.
class FeatureLayout {
 public:
  FeatureLayout() = default;
  FeatureLayout(const FeatureSpec& spec, const PanelVocab& vocab);
  /// Rebuild from persisted column metadata.
  static FeatureLayout from_columns(const FeatureSpec& spec, std::vector<ColumnInfo> columns);

  const FeatureSpec& spec() const { return spec_; }
  const std::vector<ColumnInfo>& columns() const { return columns_; }
  std::size_t width() const { return columns_.size(); }
  std::size_t group_count() const { return groups_.size(); }
  std::size_t numeric_count() const { return numeric_cols_.size(); }
  std::size_t numeric_column(std::size_t k) const { return numeric_cols_[k]; }

  /// Column index of `level` in categorical group g, or of its unknown level.
  std::uint32_t level_column(std::size_t g, const std::string& level) const;

  /// -1 for numeric columns.
  int group_of(std::size_t col) const { return col_group_[col]; }
  /// -1 for one-hot columns.
  int numeric_slot(std::size_t col) const { return col_numeric_[col]; }

  void set_scale(std::size_t col, double s) { columns_[col].scale = s; }

  bool operator==(const FeatureLayout& o) const { return spec_ == o.spec_ && columns_ == o.columns_; }

 private:
  struct Group {
    std::string name;
    std::uint32_t offset = 0;
    std::vector<std::string> levels;  // sorted; unknown column follows them
  };
  void index_columns();

  FeatureSpec spec_;
  std::vector<ColumnInfo> columns_;
  std::vector<Group> groups_;
  std::vector<std::size_t> numeric_cols_;
  std::vector<int> col_group_;
  std::vector<int> col_numeric_;
};

/// Design matrix stored sparsely: one active column per categorical group
/// plus a dense numeric block. Values exposed through at()/for_each are
/// divided by the column scale.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(FeatureLayout layout, std::size_t rows);

  const FeatureLayout& layout() const { return layout_; }
  const std::vector<ColumnInfo>& columns() const { return layout_.columns(); }
  std::size_t rows() const { return labels_.size(); }
  std::size_t width() const { return layout_.width(); }
  const std::vector<int>& labels() const { return labels_; }
  std::vector<int>& labels() { return labels_; }

  double at(std::size_t row, std::size_t col) const;
  double raw(std::size_t row, std::size_t col) const;

  /// f(col, scaled_value) over the row's structurally nonzero entries.
  template <typename F>
  void for_each_entry(std::size_t row, F&& f) const {
    const auto g = layout_.group_count();
    for (std::size_t k = 0; k < g; ++k) {
      const auto col = active_[row * g + k];
      f(static_cast<std::size_t>(col), 1.0 / layout_.columns()[col].scale);
    }
    const auto m = layout_.numeric_count();
    for (std::size_t k = 0; k < m; ++k) {
      const auto col = layout_.numeric_column(k);
      f(col, numeric_[row * m + k] / layout_.columns()[col].scale);
    }
  }

  double dot(std::size_t row, std::span<const double> weights) const;
  std::vector<double> dense_row(std::size_t row) const;

  /// Population standard deviation of scaled column values.
  double column_std(std::size_t col) const;

  // builder access
  void set_active(std::size_t row, std::size_t group, std::uint32_t col) {
    active_[row * layout_.group_count() + group] = col;
  }
  void set_numeric(std::size_t row, std::size_t slot, double v) {
    numeric_[row * layout_.numeric_count() + slot] = v;
  }
  FeatureLayout& mutable_layout() { return layout_; }

  bool operator==(const FeatureMatrix&) const = default;

 private:
  FeatureLayout layout_;
  std::vector<std::uint32_t> active_;
  std::vector<double> numeric_;
  std::vector<int> labels_;
};

inline constexpr double kStdEpsilon = 1e-12;

/// Encodes with a fresh layout built from panel.vocab (all scales 1).
FeatureMatrix encode(const Panel& panel, const FeatureSpec& spec);
/// Encodes against an existing layout; unseen categories map to the unknown
/// level and the layout's scales carry over.
FeatureMatrix encode(const Panel& panel, const FeatureLayout& layout);

/// Divides every column with population std > 1e-12 by that std.
FeatureMatrix standardize(const FeatureMatrix& matrix);

/// True when every column has unit std, or is constant with scale 1.
bool is_standardized(const FeatureMatrix& matrix, double tol = 1e-9);

/// Columns ordered by descending |weight|; ties keep column order.
std::vector<std::pair<std::string, double>> rank_by_magnitude(const std::vector<ColumnInfo>& columns,
                                                              std::span<const double> weights);

}  // namespace fleetrisk
