#include "fleetrisk/eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "fleetrisk/csv.hpp"
#include "fleetrisk/rng.hpp"

namespace fleetrisk {

using nlohmann::json;

PanelSplit split(const Panel& panel, const SplitSpec& spec) {
  if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "test_fraction must be in (0, 1)");
  }
  PanelSplit out;
  if (spec.kind == SplitSpec::Kind::RandomRow) {
    Rng rng(spec.seed);
    for (const auto& r : panel.rows) (rng.uniform() < spec.test_fraction ? out.test : out.train).rows.push_back(r);
  } else {
    std::map<WeekIndex, std::size_t> per_week;
    for (const auto& r : panel.rows) ++per_week[r.week];
    if (per_week.size() < 2) throw Error(ErrorCode::DegeneratePanel, "chronological split needs at least two weeks");
    const double need = spec.test_fraction * static_cast<double>(panel.rows.size());
    std::size_t tail = 0;
    WeekIndex boundary = per_week.begin()->first;
    // walk back from the last week until the tail reaches the requested share
    for (auto it = per_week.rbegin(); it != per_week.rend(); ++it) {
      tail += it->second;
      boundary = it->first;
      if (static_cast<double>(tail) >= need - 1e-9) break;
    }
    if (boundary == per_week.begin()->first) {
      throw Error(ErrorCode::DegeneratePanel, "chronological boundary leaves no training weeks");
    }
    for (const auto& r : panel.rows) (r.week >= boundary ? out.test : out.train).rows.push_back(r);
  }
  if (out.train.empty() || out.test.empty()) {
    throw Error(ErrorCode::DegeneratePanel, "split produced an empty train or test side");
  }
  out.train.normalize();
  out.test.normalize();
  return out;
}

EvalReport separation_ratio(std::span<const double> preds, std::span<const int> labels) {
  if (preds.size() != labels.size()) throw Error(ErrorCode::LengthMismatch, "preds/labels size mismatch");
  EvalReport rep;
  rep.n_test = preds.size();
  double sum_true = 0.0, sum_false = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double p = preds[i];
    const auto bin = std::min<std::size_t>(kHistogramBins - 1,
                                           static_cast<std::size_t>(std::max(0.0, p) * static_cast<double>(kHistogramBins)));
    if (labels[i]) {
      sum_true += p;
      ++rep.n_true;
      ++rep.histogram_true[bin];
    } else {
      sum_false += p;
      ++rep.n_false;
      ++rep.histogram_false[bin];
    }
  }
  if (rep.n_true == 0 || rep.n_false == 0) {
    throw Error(ErrorCode::SingleClassLabels, "separation ratio needs both outcomes in the test labels");
  }
  rep.mean_pred_true = sum_true / static_cast<double>(rep.n_true);
  rep.mean_pred_false = sum_false / static_cast<double>(rep.n_false);
  if (rep.mean_pred_false == 0.0) throw Error(ErrorCode::ZeroFalseMean, "mean prediction over false outcomes is zero");
  rep.ratio = rep.mean_pred_true / rep.mean_pred_false;
  return rep;
}

json to_json(const EvalReport& r) {
  return {{"mean_pred_true", r.mean_pred_true},
          {"mean_pred_false", r.mean_pred_false},
          {"ratio", r.ratio},
          {"n_test", r.n_test},
          {"n_true", r.n_true},
          {"n_false", r.n_false},
          {"histogram_true", r.histogram_true},
          {"histogram_false", r.histogram_false}};
}

void write_histogram_csv(std::ostream& out, const std::array<std::size_t, kHistogramBins>& counts) {
  csv::write_row(out, {"bin", "lower", "upper", "count"});
  const double width = 1.0 / static_cast<double>(kHistogramBins);
  for (std::size_t b = 0; b < kHistogramBins; ++b) {
    csv::write_row(out, {std::to_string(b), format_double(static_cast<double>(b) * width),
                         format_double(static_cast<double>(b + 1) * width), std::to_string(counts[b])});
  }
}

FitAndScore fit_and_score(const Panel& train, const Panel& test, const FeatureSpec& spec, ModelKind kind,
                          const ModelHyper& hyper) {
  const auto train_m = standardize(encode(train, spec));
  FitAndScore out{fit_model(kind, train_m, hyper), {}, {}};
  const auto test_m = encode(test, layout_of(out.model));
  out.test_preds = predict_proba(out.model, test_m);
  out.test_labels = test_m.labels();
  return out;
}

std::vector<FeatureSpec> standard_ablation_subsets() {
  // id, type, unit, age, gap, util
  return {
      {true, true, true, true, true, true},
      {false, true, true, true, true, true},
      {false, true, false, true, true, true},
      {false, true, false, true, true, false},
      {false, true, false, true, false, false},
      {false, false, false, true, false, false},
  };
}

std::vector<AblationRow> ablation(const Panel& panel, std::span<const FeatureSpec> subsets, ModelKind kind,
                                  const ModelHyper& hyper, const SplitSpec& split_spec) {
  for (const auto& s : subsets) {
    if (!s.any()) throw Error(ErrorCode::EmptySpec, "ablation subset selects no features");
  }
  const auto parts = split(panel, split_spec);
  std::vector<AblationRow> rows;
  for (const auto& s : subsets) {
    auto fs = fit_and_score(parts.train, parts.test, s, kind, hyper);
    rows.push_back({s, separation_ratio(fs.test_preds, fs.test_labels)});
  }
  return rows;
}

void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows) {
  csv::write_row(out, {"vehicle_id", "vehicle_type", "operational_weeks", "weeks_since_last_visit", "utilization",
                       "unit", "mean_pred_true", "mean_pred_false", "ratio"});
  auto b = [](bool v) { return std::string(v ? "1" : "0"); };
  for (const auto& r : rows) {
    const auto& s = r.spec;
    csv::write_row(out, {b(s.vehicle_id), b(s.vehicle_type), b(s.operational_weeks), b(s.weeks_since_last_visit),
                         b(s.utilization), b(s.unit), format_double(r.report.mean_pred_true),
                         format_double(r.report.mean_pred_false), format_double(r.report.ratio)});
  }
}

json to_json(const std::vector<AblationRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"features", r.spec.label()},
                   {"ratio", r.report.ratio},
                   {"mean_pred_true", r.report.mean_pred_true},
                   {"mean_pred_false", r.report.mean_pred_false}});
  }
  return out;
}

std::vector<TuneResult> tune(const Panel& panel, const FeatureSpec& spec, ModelKind kind, const ModelHyper& base,
                             const TuneGrid& grid, const SplitSpec& split_spec) {
  if (kind == ModelKind::Logistic) throw Error(ErrorCode::InvalidConfig, "tuning applies to forest and gbt models");
  const auto parts = split(panel, split_spec);
  auto depths = grid.max_depth;
  auto counts = grid.n_estimators;
  auto rates = grid.learning_rate;
  if (depths.empty()) depths.push_back(kind == ModelKind::Forest ? base.forest.max_depth : base.gbt.max_depth);
  if (counts.empty()) counts.push_back(kind == ModelKind::Forest ? base.forest.n_estimators : base.gbt.n_estimators);
  if (rates.empty() || kind == ModelKind::Forest) rates = {base.gbt.learning_rate};

  std::vector<TuneResult> results;
  for (int depth : depths) {
    for (int count : counts) {
      for (double rate : rates) {
        TuneResult r;
        r.hyper = base;
        r.max_depth = depth;
        r.n_estimators = count;
        r.learning_rate = kind == ModelKind::Gbt ? rate : 0.0;
        if (kind == ModelKind::Forest) {
          r.hyper.forest.max_depth = depth;
          r.hyper.forest.n_estimators = count;
        } else {
          r.hyper.gbt.max_depth = depth;
          r.hyper.gbt.n_estimators = count;
          r.hyper.gbt.learning_rate = rate;
        }
        auto fs = fit_and_score(parts.train, parts.test, spec, kind, r.hyper);
        r.ratio = separation_ratio(fs.test_preds, fs.test_labels).ratio;
        results.push_back(r);
      }
    }
  }
  return results;
}

const TuneResult& best(const std::vector<TuneResult>& results) {
  if (results.empty()) throw Error(ErrorCode::InvalidConfig, "empty tuning grid");
  const TuneResult* b = &results.front();
  for (const auto& r : results) {
    if (r.ratio > b->ratio) b = &r;
  }
  return *b;
}

void write_tune_csv(std::ostream& out, const std::vector<TuneResult>& results) {
  csv::write_row(out, {"max_depth", "n_estimators", "learning_rate", "ratio"});
  for (const auto& r : results) {
    csv::write_row(out, {std::to_string(r.max_depth), std::to_string(r.n_estimators), format_double(r.learning_rate),
                         format_double(r.ratio)});
  }
}

}  // namespace fleetrisk
