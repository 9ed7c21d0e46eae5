#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fleetrisk/models.hpp"
#include "fleetrisk/panel.hpp"

namespace fleetrisk {

struct SplitSpec {
  enum class Kind { RandomRow, Chronological };
  Kind kind = Kind::Chronological;
  double test_fraction = 0.3;
  std::uint64_t seed = 0;  // RandomRow only

  static SplitSpec random_row(double fraction, std::uint64_t seed) { return {Kind::RandomRow, fraction, seed}; }
  static SplitSpec chronological(double fraction) { return {Kind::Chronological, fraction, 0}; }
};

struct PanelSplit {
  Panel train;
  Panel test;
};

/// RandomRow: independent seeded draw per row. Chronological: test holds the
/// rows at or after the latest week boundary that still puts at least
/// test_fraction of rows in test.
PanelSplit split(const Panel& panel, const SplitSpec& spec);

inline constexpr std::size_t kHistogramBins = 50;

struct EvalReport {
  double mean_pred_true = 0.0;
  double mean_pred_false = 0.0;
  double ratio = 0.0;
  std::array<std::size_t, kHistogramBins> histogram_true{};
  std::array<std::size_t, kHistogramBins> histogram_false{};
  std::size_t n_test = 0;
  std::size_t n_true = 0;
  std::size_t n_false = 0;
};

/// Ratio of mean prediction over positive rows to mean over negative rows.
EvalReport separation_ratio(std::span<const double> preds, std::span<const int> labels);

nlohmann::json to_json(const EvalReport& report);
/// One row per bin: bin, lower, upper, count.
void write_histogram_csv(std::ostream& out, const std::array<std::size_t, kHistogramBins>& counts);

/// Encode the train panel, standardize, fit; then score the test panel
/// against the training layout.
struct FitAndScore {
  RiskModel model;
  std::vector<double> test_preds;
  std::vector<int> test_labels;
};
FitAndScore fit_and_score(const Panel& train, const Panel& test, const FeatureSpec& spec, ModelKind kind,
                          const ModelHyper& hyper);

/// Default ablation subsets, richest first, ending with age alone.
std::vector<FeatureSpec> standard_ablation_subsets();

struct AblationRow {
  FeatureSpec spec;
  EvalReport report;
};

std::vector<AblationRow> ablation(const Panel& panel, std::span<const FeatureSpec> subsets, ModelKind kind,
                                  const ModelHyper& hyper, const SplitSpec& split_spec);
void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows);
nlohmann::json to_json(const std::vector<AblationRow>& rows);

struct TuneGrid {
  std::vector<int> max_depth;
  std::vector<int> n_estimators;
  std::vector<double> learning_rate;  // gbt only
};

struct TuneResult {
  ModelHyper hyper;
  int max_depth = 0;
  int n_estimators = 0;
  double learning_rate = 0.0;
  double ratio = 0.0;
};

/// Grid search over tree hyperparameters, scored by test separation ratio.
/// Results are in grid order; best() picks the highest ratio (first on ties).
std::vector<TuneResult> tune(const Panel& panel, const FeatureSpec& spec, ModelKind kind, const ModelHyper& base,
                             const TuneGrid& grid, const SplitSpec& split_spec);
const TuneResult& best(const std::vector<TuneResult>& results);
void write_tune_csv(std::ostream& out, const std::vector<TuneResult>& results);

}  // namespace fleetrisk
