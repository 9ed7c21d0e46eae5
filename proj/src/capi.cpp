#include "fleetrisk/fleetrisk.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>

#include "fleetrisk/config.hpp"
#include "fleetrisk/eval.hpp"
#include "fleetrisk/features.hpp"
#include "fleetrisk/ingest.hpp"
#include "fleetrisk/models.hpp"
#include "fleetrisk/panel.hpp"
#include "fleetrisk/policy.hpp"
#include "fleetrisk/synth.hpp"

using nlohmann::json;
namespace fr = fleetrisk;

struct fr_records {
  fr::ParseResult parsed;
};

struct fr_panel {
  fr::Panel panel;
};

struct fr_model {
  fr::RiskModel model;
  fr::SplitSpec split;
  std::uint64_t seed = 0;
  json influence;  // logistic only, null otherwise
};

namespace {

thread_local std::string g_last_error;

char* dup(const std::string& s) {
  auto* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

fr::RunConfig config_of(const char* text) {
  if (!text || !*text) return fr::RunConfig::from_json(json::object());
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw fr::Error(fr::ErrorCode::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
  }
  return fr::RunConfig::from_json(doc);
}

std::ifstream open_input(const char* path) {
  if (!path) throw fr::Error(fr::ErrorCode::InvalidConfig, "missing input path");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw fr::Error(fr::ErrorCode::Io, std::string("cannot open '") + path + "'");
  return in;
}

fr::SchemaConfig schema_of(const fr::RunConfig& cfg) {
  if (cfg.aliases.empty()) return {cfg.delimiter, {}};
  auto in = open_input(cfg.aliases.c_str());
  return fr::SchemaConfig::with_alias_file(in, cfg.delimiter);
}

template <typename F>
fr_status guard(F&& body) {
  try {
    body();
    g_last_error.clear();
    return FR_OK;
  } catch (const fr::Error& e) {
    g_last_error = e.what();
    if (e.code() == fr::ErrorCode::Io) return FR_ERR_IO;
    return fr::is_usage_error(e.code()) ? FR_ERR_USAGE : FR_ERR_DATA;
  } catch (const std::exception& e) {
    g_last_error = std::string("internal: ") + e.what();
    return FR_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw fr::Error(fr::ErrorCode::InvalidConfig, std::string("null argument: ") + what);
}

const char* split_name(fr::SplitSpec::Kind k) {
  return k == fr::SplitSpec::Kind::Chronological ? "chronological" : "random";
}

fr::Panel held_out(const fr_model& m, const fr::Panel& panel) { return fr::split(panel, m.split).test; }

}  // namespace

extern "C" {

const char* fr_version(void) { return "1.0.0"; }

const char* fr_last_error(void) { return g_last_error.c_str(); }

void fr_string_free(char* s) { std::free(s); }

fr_status fr_config_resolve(const char* config_json, char** resolved_json) {
  return guard([&] {
    require(resolved_json, "resolved_json");
    *resolved_json = dup(config_of(config_json).to_json().dump(2));
  });
}

fr_status fr_synth_generate(const char* config_json, char** workorders_csv, char** utilization_csv,
                            char** truth_json) {
  return guard([&] {
    require(workorders_csv, "workorders_csv");
    const auto cfg = config_of(config_json);
    const auto fleet = fr::generate_fleet(cfg.synth);
    std::ostringstream wo, util;
    fr::write_subworkorders(wo, fleet.records, cfg.delimiter);
    fleet.utilization.write_csv(util);
    std::string truth = fr::to_json(fleet.truth).dump();
    *workorders_csv = dup(wo.str());
    if (utilization_csv) *utilization_csv = dup(util.str());
    if (truth_json) *truth_json = dup(truth);
  });
}

fr_status fr_records_read(const char* path, const char* config_json, fr_records** out) {
  return guard([&] {
    require(out, "out");
    const auto cfg = config_of(config_json);
    auto in = open_input(path);
    auto r = std::make_unique<fr_records>();
    r->parsed = fr::parse_subworkorders(in, schema_of(cfg));
    *out = r.release();
  });
}

fr_status fr_records_parse(const char* csv_text, const char* config_json, fr_records** out) {
  return guard([&] {
    require(csv_text, "csv_text");
    require(out, "out");
    const auto cfg = config_of(config_json);
    std::istringstream in(csv_text);
    auto r = std::make_unique<fr_records>();
    r->parsed = fr::parse_subworkorders(in, schema_of(cfg));
    *out = r.release();
  });
}

size_t fr_records_count(const fr_records* records) { return records ? records->parsed.records.size() : 0; }

size_t fr_records_error_count(const fr_records* records) { return records ? records->parsed.errors.size() : 0; }

fr_status fr_records_csv(const fr_records* records, char** out) {
  return guard([&] {
    require(records, "records");
    require(out, "out");
    std::ostringstream s;
    fr::write_subworkorders(s, records->parsed.records);
    *out = dup(s.str());
  });
}

fr_status fr_records_errors_csv(const fr_records* records, char** out) {
  return guard([&] {
    require(records, "records");
    require(out, "out");
    std::ostringstream s;
    fr::write_row_errors(s, records->parsed.errors);
    *out = dup(s.str());
  });
}

fr_status fr_records_labor_hours_csv(const fr_records* records, const char* config_json, char** out) {
  return guard([&] {
    require(records, "records");
    require(out, "out");
    const auto cfg = config_of(config_json);
    if (records->parsed.records.empty()) throw fr::Error(fr::ErrorCode::EmptyDataset, "no valid records");
    const auto monday = fr::panel_start(records->parsed.records, cfg.panel_options());
    std::ostringstream s;
    fr::write_weekly_labor_hours(s, records->parsed.records, monday);
    *out = dup(s.str());
  });
}

void fr_records_free(fr_records* records) { delete records; }

fr_status fr_panel_build(const fr_records* records, const char* config_json, const char* utilization_path,
                         fr_panel** out) {
  return guard([&] {
    require(records, "records");
    require(out, "out");
    const auto cfg = config_of(config_json);
    auto opt = cfg.panel_options();
    if (utilization_path && *utilization_path) {
      auto in = open_input(utilization_path);
      opt.utilization = fr::UtilizationTable::read_csv(in);
    }
    auto p = std::make_unique<fr_panel>();
    p->panel = fr::build_panel(records->parsed.records, opt);
    *out = p.release();
  });
}

fr_status fr_panel_read(const char* path, fr_panel** out) {
  return guard([&] {
    require(out, "out");
    auto in = open_input(path);
    auto p = std::make_unique<fr_panel>();
    p->panel = fr::read_panel_csv(in);
    *out = p.release();
  });
}

fr_status fr_panel_csv(const fr_panel* panel, char** out) {
  return guard([&] {
    require(panel, "panel");
    require(out, "out");
    std::ostringstream s;
    fr::write_panel_csv(s, panel->panel);
    *out = dup(s.str());
  });
}

size_t fr_panel_row_count(const fr_panel* panel) { return panel ? panel->panel.rows.size() : 0; }

size_t fr_panel_vehicle_count(const fr_panel* panel) { return panel ? panel->panel.vocab.asset_ids.size() : 0; }

void fr_panel_free(fr_panel* panel) { delete panel; }

fr_status fr_model_train(const fr_panel* panel, const char* config_json, fr_model** out) {
  return guard([&] {
    require(panel, "panel");
    require(out, "out");
    const auto cfg = config_of(config_json);
    auto m = std::make_unique<fr_model>();
    m->split = cfg.split_spec();
    m->seed = cfg.seed;
    const auto parts = fr::split(panel->panel, m->split);
    const auto train = fr::standardize(fr::encode(parts.train, cfg.features));
    m->model = fr::fit_model(cfg.model, train, cfg.model_hyper());
    if (const auto* lr = std::get_if<fr::LogisticModel>(&m->model)) {
      m->influence = json::array();
      for (const auto& [name, w] : fr::coefficient_influence(*lr, train)) m->influence.push_back({name, w});
    }
    *out = m.release();
  });
}

fr_status fr_model_from_json(const char* model_json, fr_model** out) {
  return guard([&] {
    require(model_json, "model_json");
    require(out, "out");
    json doc;
    try {
      doc = json::parse(model_json);
    } catch (const json::parse_error& e) {
      throw fr::Error(fr::ErrorCode::Parse, std::string("model file is not valid JSON: ") + e.what());
    }
    auto m = std::make_unique<fr_model>();
    m->model = fr::model_from_json(doc);
    if (doc.contains("training")) {
      try {
        const auto& t = doc.at("training");
        const auto kind = t.at("split").get<std::string>();
        m->split.kind = kind == "random" ? fr::SplitSpec::Kind::RandomRow : fr::SplitSpec::Kind::Chronological;
        m->split.test_fraction = t.at("test_fraction").get<double>();
        m->split.seed = t.at("split_seed").get<std::uint64_t>();
        m->seed = t.at("seed").get<std::uint64_t>();
        m->influence = t.value("influence", json());
      } catch (const json::exception& e) {
        throw fr::Error(fr::ErrorCode::Parse, std::string("model training block: ") + e.what());
      }
    }
    *out = m.release();
  });
}

fr_status fr_model_to_json(const fr_model* model, char** out) {
  return guard([&] {
    require(model, "model");
    require(out, "out");
    auto doc = fr::model_to_json(model->model);
    doc["training"] = {{"split", split_name(model->split.kind)},
                       {"test_fraction", model->split.test_fraction},
                       {"split_seed", model->split.seed},
                       {"seed", model->seed},
                       {"influence", model->influence}};
    *out = dup(doc.dump());
  });
}

void fr_model_free(fr_model* model) { delete model; }

fr_status fr_evaluate(const fr_model* model, const fr_panel* panel, char** report_json, char** histogram_true_csv,
                      char** histogram_false_csv) {
  return guard([&] {
    require(model, "model");
    require(panel, "panel");
    require(report_json, "report_json");
    const auto test = held_out(*model, panel->panel);
    const auto m = fr::encode(test, fr::layout_of(model->model));
    const auto preds = fr::predict_proba(model->model, m);
    const auto labels = m.labels();
    const auto report = fr::separation_ratio(preds, labels);
    auto doc = fr::to_json(report);
    doc["model"] = std::string(fr::to_string(fr::kind_of(model->model)));
    doc["split"] = split_name(model->split.kind);
    std::ostringstream ht, hf;
    fr::write_histogram_csv(ht, report.histogram_true);
    fr::write_histogram_csv(hf, report.histogram_false);
    *report_json = dup(doc.dump(2));
    if (histogram_true_csv) *histogram_true_csv = dup(ht.str());
    if (histogram_false_csv) *histogram_false_csv = dup(hf.str());
  });
}

fr_status fr_ablate(const fr_panel* panel, const char* config_json, char** ablation_csv, char** ablation_json) {
  return guard([&] {
    require(panel, "panel");
    require(ablation_csv, "ablation_csv");
    const auto cfg = config_of(config_json);
    const auto rows = fr::ablation(panel->panel, cfg.ablation_subsets, cfg.model, cfg.model_hyper(), cfg.split_spec());
    std::ostringstream s;
    fr::write_ablation_csv(s, rows);
    std::string doc = fr::to_json(rows).dump(2);
    *ablation_csv = dup(s.str());
    if (ablation_json) *ablation_json = dup(doc);
  });
}

fr_status fr_tune(const fr_panel* panel, const char* config_json, char** tune_csv, char** best_json) {
  return guard([&] {
    require(panel, "panel");
    require(tune_csv, "tune_csv");
    const auto cfg = config_of(config_json);
    const auto results = fr::tune(panel->panel, cfg.features, cfg.model, cfg.model_hyper(), cfg.tune, cfg.split_spec());
    std::ostringstream s;
    fr::write_tune_csv(s, results);
    const auto& b = fr::best(results);
    json doc = {{"model", std::string(fr::to_string(cfg.model))},
                {"max_depth", b.max_depth},
                {"n_estimators", b.n_estimators},
                {"ratio", b.ratio}};
    if (cfg.model == fr::ModelKind::Gbt) doc["learning_rate"] = b.learning_rate;
    *tune_csv = dup(s.str());
    if (best_json) *best_json = dup(doc.dump(2));
  });
}

fr_status fr_simulate(const fr_model* model, const fr_panel* panel, const char* config_json, char** trace_csv,
                      char** hist_proactive_csv, char** hist_random_csv, char** summary_json) {
  return guard([&] {
    require(model, "model");
    require(panel, "panel");
    require(trace_csv, "trace_csv");
    const auto cfg = config_of(config_json);
    const auto test = held_out(*model, panel->panel);
    const auto proactive = fr::simulate_policy(model->model, test, {fr::PolicyKind::HighestRisk, 0});
    const auto random = fr::simulate_policy(model->model, test, {fr::PolicyKind::RandomUniform, cfg.policy_seed()});
    std::ostringstream t, hp, hr;
    fr::write_trace_csv(t, {&proactive, &random});
    fr::write_trace_histogram_csv(hp, fr::trace_histograms(proactive));
    fr::write_trace_histogram_csv(hr, fr::trace_histograms(random));
    json summary = {{"highest_risk", fr::to_json(fr::summarize(proactive))},
                    {"random", fr::to_json(fr::summarize(random))}};
    *trace_csv = dup(t.str());
    if (hist_proactive_csv) *hist_proactive_csv = dup(hp.str());
    if (hist_random_csv) *hist_random_csv = dup(hr.str());
    if (summary_json) *summary_json = dup(summary.dump(2));
  });
}

fr_status fr_mel(const fr_model* model, const fr_panel* panel, const char* config_json, char** mel_json) {
  return guard([&] {
    require(model, "model");
    require(panel, "panel");
    require(mel_json, "mel_json");
    const auto cfg = config_of(config_json);
    const auto& rows = panel->panel.rows;
    if (rows.empty()) throw fr::Error(fr::ErrorCode::EmptyDataset, "panel has no rows");
    fr::WeekIndex week = rows.front().week;
    for (const auto& r : rows) week = std::max(week, r.week);
    if (cfg.mel_week) week = *cfg.mel_week;

    auto specs = cfg.mel;
    if (specs.empty()) {
      std::map<std::string, int> active;
      for (const auto& r : rows) {
        if (r.week == week) ++active[r.vehicle_type];
      }
      for (const auto& [type, n] : active) {
        const int mel = static_cast<int>(std::ceil(cfg.mel_default_fraction * n - 1e-9));
        specs.push_back({type, mel, n});
      }
    }
    const auto risks = fr::mel_risk_by_type(model->model, panel->panel, week, specs);
    *mel_json = dup(fr::to_json(risks).dump(2));
  });
}

fr_status fr_mel_risk(const double* probs, size_t n, int mel, int assigned, double* out) {
  return guard([&] {
    require(out, "out");
    if (n > 0) require(probs, "probs");
    *out = fr::mel_risk(std::span<const double>(probs, n), fr::MelSpec{"", mel, assigned});
  });
}

}  // extern "C"
