#include "fleetrisk/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fleetrisk {

namespace {

struct FeatureName {
  bool FeatureSpec::*flag;
  const char* short_name;
  const char* column_name;
};

constexpr FeatureName kFeatureNames[] = {
    {&FeatureSpec::vehicle_id, "id", "vehicle_id"},
    {&FeatureSpec::vehicle_type, "type", "vehicle_type"},
    {&FeatureSpec::unit, "unit", "unit"},
    {&FeatureSpec::operational_weeks, "age", "operational_weeks"},
    {&FeatureSpec::weeks_since_last_visit, "gap", "weeks_since_last_visit"},
    {&FeatureSpec::utilization, "util", "utilization"},
};

double numeric_value(const PanelRow& r, const std::string& name) {
  if (name == "operational_weeks") return static_cast<double>(r.operational_weeks);
  if (name == "weeks_since_last_visit") return static_cast<double>(r.weeks_since_last_visit);
  return r.utilization;
}

const std::string& categorical_value(const PanelRow& r, const std::string& name) {
  if (name == "vehicle_id") return r.asset_id;
  if (name == "vehicle_type") return r.vehicle_type;
  return r.unit;
}

}  // namespace

std::string FeatureSpec::label() const {
  std::string out;
  for (const auto& f : kFeatureNames) {
    if (!(this->*f.flag)) continue;
    if (!out.empty()) out += '+';
    out += f.short_name;
  }
  return out;
}

FeatureSpec FeatureSpec::parse(std::string_view text) {
  FeatureSpec spec;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto next = text.find_first_of("+,", pos);
    if (next == std::string_view::npos) next = text.size();
    const auto token = to_lower(trim(text.substr(pos, next - pos)));
    pos = next + 1;
    if (token.empty()) continue;
    if (token == "all") {
      spec = all();
      continue;
    }
    bool found = false;
    for (const auto& f : kFeatureNames) {
      if (token == f.short_name || token == f.column_name) {
        spec.*f.flag = true;
        found = true;
      }
    }
    if (!found) throw Error(ErrorCode::InvalidConfig, "unknown feature '" + token + "'");
  }
  if (!spec.any()) throw Error(ErrorCode::EmptySpec, "no features selected");
  return spec;
}

FeatureLayout::FeatureLayout(const FeatureSpec& spec, const PanelVocab& vocab) : spec_(spec) {
  if (!spec.any()) throw Error(ErrorCode::EmptySpec, "feature spec selects no columns");
  const std::vector<std::string>* vocabs[] = {&vocab.asset_ids, &vocab.vehicle_types, &vocab.units};
  for (int g = 0; g < 3; ++g) {
    const auto& f = kFeatureNames[g];
    if (!(spec.*f.flag)) continue;
    for (const auto& level : *vocabs[g]) {
      columns_.push_back({std::string(f.column_name) + "=" + level, ColumnKind::OneHot, f.column_name, level, 1.0});
    }
    columns_.push_back({std::string(f.column_name) + "=" + std::string(kUnknownLevel), ColumnKind::OneHot,
                        f.column_name, std::string(kUnknownLevel), 1.0});
  }
  for (int k = 3; k < 6; ++k) {
    const auto& f = kFeatureNames[k];
    if (spec.*f.flag) columns_.push_back({f.column_name, ColumnKind::Numeric, f.column_name, {}, 1.0});
  }
  index_columns();
}

FeatureLayout FeatureLayout::from_columns(const FeatureSpec& spec, std::vector<ColumnInfo> columns) {
  FeatureLayout layout;
  layout.spec_ = spec;
  layout.columns_ = std::move(columns);
  for (const auto& c : layout.columns_) {
    if (!(c.scale > 0.0) || !std::isfinite(c.scale)) {
      throw Error(ErrorCode::ColumnMismatch, "column '" + c.name + "' has non-positive scale");
    }
  }
  layout.index_columns();
  // must match what the spec would generate structurally
  PanelVocab vocab;
  for (const auto& g : layout.groups_) {
    auto& dst = g.name == "vehicle_id" ? vocab.asset_ids : g.name == "vehicle_type" ? vocab.vehicle_types : vocab.units;
    dst = g.levels;
  }
  FeatureLayout expected(spec, vocab);
  if (expected.width() != layout.width()) throw Error(ErrorCode::ColumnMismatch, "columns do not match feature spec");
  for (std::size_t i = 0; i < layout.width(); ++i) {
    const auto& a = expected.columns_[i];
    const auto& b = layout.columns_[i];
    if (a.name != b.name || a.kind != b.kind || a.group != b.group || a.level != b.level) {
      throw Error(ErrorCode::ColumnMismatch, "column " + std::to_string(i) + " ('" + b.name +
                                                 "') does not match feature spec (expected '" + a.name + "')");
    }
  }
  return layout;
}

void FeatureLayout::index_columns() {
  groups_.clear();
  numeric_cols_.clear();
  col_group_.assign(columns_.size(), -1);
  col_numeric_.assign(columns_.size(), -1);
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    const auto& c = columns_[i];
    if (c.kind == ColumnKind::Numeric) {
      col_numeric_[i] = static_cast<int>(numeric_cols_.size());
      numeric_cols_.push_back(i);
      continue;
    }
    if (groups_.empty() || groups_.back().name != c.group) {
      groups_.push_back({c.group, static_cast<std::uint32_t>(i), {}});
    }
    if (c.level != kUnknownLevel) groups_.back().levels.push_back(c.level);
    col_group_[i] = static_cast<int>(groups_.size() - 1);
  }
}

std::uint32_t FeatureLayout::level_column(std::size_t g, const std::string& level) const {
  const auto& grp = groups_[g];
  auto it = std::lower_bound(grp.levels.begin(), grp.levels.end(), level);
  const auto unknown = grp.offset + static_cast<std::uint32_t>(grp.levels.size());
  if (it == grp.levels.end() || *it != level) return unknown;
  return grp.offset + static_cast<std::uint32_t>(it - grp.levels.begin());
}

FeatureMatrix::FeatureMatrix(FeatureLayout layout, std::size_t rows)
    : layout_(std::move(layout)),
      active_(rows * layout_.group_count(), 0),
      numeric_(rows * layout_.numeric_count(), 0.0),
      labels_(rows, 0) {}

double FeatureMatrix::raw(std::size_t row, std::size_t col) const {
  if (const int slot = layout_.numeric_slot(col); slot >= 0) {
    return numeric_[row * layout_.numeric_count() + static_cast<std::size_t>(slot)];
  }
  const auto g = static_cast<std::size_t>(layout_.group_of(col));
  return active_[row * layout_.group_count() + g] == col ? 1.0 : 0.0;
}

double FeatureMatrix::at(std::size_t row, std::size_t col) const {
  return raw(row, col) / layout_.columns()[col].scale;
}

double FeatureMatrix::dot(std::size_t row, std::span<const double> weights) const {
  double s = 0.0;
  for_each_entry(row, [&](std::size_t col, double v) { s += weights[col] * v; });
  return s;
}

std::vector<double> FeatureMatrix::dense_row(std::size_t row) const {
  std::vector<double> out(width(), 0.0);
  for_each_entry(row, [&](std::size_t col, double v) { out[col] = v; });
  return out;
}

double FeatureMatrix::column_std(std::size_t col) const {
  const auto n = rows();
  if (n == 0) return 0.0;
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += at(i, col);
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = at(i, col) - mean;
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(n));
}

namespace {

FeatureMatrix encode_rows(const Panel& panel, FeatureLayout layout) {
  if (panel.empty()) throw Error(ErrorCode::EmptyDataset, "cannot encode an empty panel");
  FeatureMatrix m(std::move(layout), panel.rows.size());
  const auto& lay = m.layout();
  std::vector<std::string> group_names;
  for (std::size_t c = 0; c < lay.width(); ++c) {
    const auto g = lay.group_of(c);
    if (g >= 0 && static_cast<std::size_t>(g) == group_names.size()) group_names.push_back(lay.columns()[c].group);
  }
  for (std::size_t i = 0; i < panel.rows.size(); ++i) {
    const auto& r = panel.rows[i];
    for (std::size_t g = 0; g < group_names.size(); ++g) {
      m.set_active(i, g, lay.level_column(g, categorical_value(r, group_names[g])));
    }
    for (std::size_t k = 0; k < lay.numeric_count(); ++k) {
      const double v = numeric_value(r, lay.columns()[lay.numeric_column(k)].name);
      if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteFeature, "non-finite value in panel row " + std::to_string(i));
      m.set_numeric(i, k, v);
    }
    m.labels()[i] = r.repair_flag;
  }
  return m;
}

}  // namespace

FeatureMatrix encode(const Panel& panel, const FeatureSpec& spec) {
  return encode_rows(panel, FeatureLayout(spec, panel.vocab));
}

FeatureMatrix encode(const Panel& panel, const FeatureLayout& layout) { return encode_rows(panel, layout); }

FeatureMatrix standardize(const FeatureMatrix& matrix) {
  FeatureMatrix out = matrix;
  for (std::size_t c = 0; c < matrix.width(); ++c) {
    const double s = matrix.column_std(c);
    if (s > kStdEpsilon) out.mutable_layout().set_scale(c, matrix.columns()[c].scale * s);
  }
  return out;
}

bool is_standardized(const FeatureMatrix& matrix, double tol) {
  for (std::size_t c = 0; c < matrix.width(); ++c) {
    const double s = matrix.column_std(c);
    const bool unit = std::abs(s - 1.0) <= tol;
    const bool constant = s <= kStdEpsilon && matrix.columns()[c].scale == 1.0;
    if (!unit && !constant) return false;
  }
  return true;
}

std::vector<std::pair<std::string, double>> rank_by_magnitude(const std::vector<ColumnInfo>& columns,
                                                              std::span<const double> weights) {
  if (columns.size() != weights.size()) throw Error(ErrorCode::WidthMismatch, "weights/columns size mismatch");
  std::vector<std::size_t> order(columns.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(weights[a]) > std::abs(weights[b]); });
  std::vector<std::pair<std::string, double>> out;
  out.reserve(order.size());
  for (auto i : order) out.emplace_back(columns[i].name, std::abs(weights[i]));
  return out;
}

}  // namespace fleetrisk
