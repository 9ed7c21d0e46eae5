// Command-line front end. Talks to the library only through the C API.
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fleetrisk/fleetrisk.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Failure {
  int exit_code;
  std::string message;
};

[[noreturn]] void usage_error(const std::string& msg) { throw Failure{2, msg}; }

void check(fr_status st, const std::string& context) {
  if (st == FR_OK) return;
  const int code = st == FR_ERR_USAGE ? 2 : 1;
  throw Failure{code, context + ": " + fr_last_error()};
}

struct OwnedString {
  char* p = nullptr;
  ~OwnedString() { fr_string_free(p); }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
};
using Records = Handle<fr_records, fr_records_free>;
using PanelHandle = Handle<fr_panel, fr_panel_free>;
using ModelHandle = Handle<fr_model, fr_model_free>;

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Failure{1, "cannot read '" + p.string() + "'"};
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Options {
  std::string config_path;
  std::string out_dir = ".";
  std::string input;
  std::string utilization;
  std::string panel;
  std::string model;

  std::optional<std::uint64_t> seed;
  std::optional<std::string> model_kind;
  std::optional<std::string> features;
  std::optional<std::string> split;
  std::optional<double> test_fraction;
  std::optional<bool> include_scheduled;
  std::optional<int> threads;
  std::optional<int> n_estimators;
  std::optional<int> mel_week;
  std::optional<int> vehicles;
  std::optional<int> weeks;
};

class Run {
 public:
  Run(const Options& o, std::string command) : o_(o), command_(std::move(command)) {
    json cfg = json::object();
    if (!o.config_path.empty()) {
      try {
        cfg = json::parse(read_file(o.config_path));
      } catch (const json::parse_error& e) {
        usage_error("--config: " + std::string(e.what()));
      }
      if (!cfg.is_object()) usage_error("--config: expected a JSON object");
    }
    if (o.seed) cfg["seed"] = *o.seed;
    if (o.model_kind) cfg["model"] = *o.model_kind;
    if (o.features) cfg["features"] = *o.features;
    if (o.split) cfg["split"] = *o.split;
    if (o.test_fraction) cfg["test_fraction"] = *o.test_fraction;
    if (o.include_scheduled) cfg["include_scheduled"] = *o.include_scheduled;
    if (o.threads) cfg["threads"] = *o.threads;
    if (o.n_estimators) {
      cfg["forest_n_estimators"] = *o.n_estimators;
      cfg["gbt_n_estimators"] = *o.n_estimators;
    }
    if (o.mel_week) cfg["mel_week"] = *o.mel_week;
    if (o.vehicles || o.weeks) {
      if (!cfg.contains("synth")) cfg["synth"] = json::object();
      if (o.vehicles) cfg["synth"]["n_vehicles"] = *o.vehicles;
      if (o.weeks) cfg["synth"]["n_weeks"] = *o.weeks;
    }
    OwnedString resolved;
    check(fr_config_resolve(cfg.dump().c_str(), &resolved.p), "config");
    config_ = resolved.str();
    std::error_code ec;
    fs::create_directories(o.out_dir, ec);
    if (ec) throw Failure{1, "cannot create output directory '" + o.out_dir + "': " + ec.message()};
  }

  const char* config() const { return config_.c_str(); }
  fs::path out(const std::string& name) const { return fs::path(o_.out_dir) / name; }
  bool has(const std::string& name) const { return fs::exists(out(name)); }

  void write(const std::string& name, const std::string& content) {
    std::ofstream f(out(name), std::ios::binary);
    f << content;
    if (!f) throw Failure{1, "cannot write '" + out(name).string() + "'"};
    artifacts_.push_back(name);
  }

  /// Inputs inside the output directory are recorded relative to it so
  /// identical runs into different directories produce identical manifests.
  void input(const std::string& role, const std::string& path) {
    std::error_code ec;
    const auto base = fs::weakly_canonical(o_.out_dir, ec);
    const auto full = fs::weakly_canonical(path, ec);
    const auto rel = full.lexically_relative(base);
    const bool inside = !ec && !rel.empty() && *rel.begin() != "..";
    inputs_[role] = inside ? rel.generic_string() : path;
  }

  void load_records(Records& r) {
    std::string path = o_.input;
    if (path.empty() && has("workorders.csv")) path = out("workorders.csv").string();
    if (path.empty()) usage_error("--input is required (sub-work-order CSV)");
    input("workorders", path);
    check(fr_records_read(path.c_str(), config(), &r.p), "ingest");
  }

  /// --panel, else --input (+ --utilization), else panel.csv, else the
  /// workorders.csv / utilization.csv pair in the output directory.
  void load_panel(PanelHandle& p) {
    if (!o_.panel.empty()) {
      input("panel", o_.panel);
      check(fr_panel_read(o_.panel.c_str(), &p.p), "panel");
      return;
    }
    if (o_.input.empty() && has("panel.csv")) {
      input("panel", out("panel.csv").string());
      check(fr_panel_read(out("panel.csv").string().c_str(), &p.p), "panel");
      return;
    }
    Records r;
    load_records(r);
    std::string util = o_.utilization;
    if (util.empty() && o_.input.empty() && has("utilization.csv")) util = out("utilization.csv").string();
    if (!util.empty()) input("utilization", util);
    check(fr_panel_build(r.p, config(), util.empty() ? nullptr : util.c_str(), &p.p), "panel");
  }

  void load_model(ModelHandle& m) {
    const std::string path = o_.model.empty() ? out("model.json").string() : o_.model;
    if (!fs::exists(path)) usage_error("missing model '" + path + "': run `train` first or pass --model");
    input("model", path);
    check(fr_model_from_json(read_file(path).c_str(), &m.p), "model");
  }

  /// Appends this command's entry; created_at is the only non-reproducible field.
  void write_manifest() {
    json manifest = json::object();
    if (has("manifest.json")) {
      try {
        manifest = json::parse(read_file(out("manifest.json")));
      } catch (const json::parse_error&) {
        manifest = json::object();
      }
    }
    const json cfg = json::parse(config_);
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
    manifest["tool"] = {{"name", "fleetrisk"}, {"version", fr_version()}};
    manifest["runs"][command_] = {{"config", cfg},
                                  {"seed", cfg.at("seed")},
                                  {"inputs", inputs_},
                                  {"artifacts", artifacts_},
                                  {"created_at", stamp}};
    std::ofstream f(out("manifest.json"), std::ios::binary);
    f << manifest.dump(2) << '\n';
  }

 private:
  const Options& o_;
  std::string command_;
  std::string config_;
  std::vector<std::string> artifacts_;
  std::map<std::string, std::string> inputs_;
};

void cmd_synth(Run& run) {
  OwnedString wo, util, truth;
  check(fr_synth_generate(run.config(), &wo.p, &util.p, &truth.p), "synth");
  run.write("workorders.csv", wo.str());
  run.write("utilization.csv", util.str());
  run.write("ground_truth.json", json::parse(truth.str()).dump(2) + "\n");
}

void cmd_ingest(Run& run) {
  Records r;
  run.load_records(r);
  OwnedString recs, errs, labor;
  check(fr_records_csv(r.p, &recs.p), "ingest");
  check(fr_records_errors_csv(r.p, &errs.p), "ingest");
  run.write("records.csv", recs.str());
  run.write("row_errors.csv", errs.str());
  if (fr_records_count(r.p) > 0) {
    check(fr_records_labor_hours_csv(r.p, run.config(), &labor.p), "labor hours");
    run.write("labor_hours.csv", labor.str());
  }
  std::cerr << fr_records_count(r.p) << " records, " << fr_records_error_count(r.p) << " rejected rows\n";
}

void write_panel(Run& run, const PanelHandle& p) {
  OwnedString csv;
  check(fr_panel_csv(p.p, &csv.p), "panel");
  run.write("panel.csv", csv.str());
}

void cmd_panel(Run& run) {
  PanelHandle p;
  run.load_panel(p);
  write_panel(run, p);
  std::cerr << fr_panel_row_count(p.p) << " rows, " << fr_panel_vehicle_count(p.p) << " vehicles\n";
}

void train_into(Run& run, const PanelHandle& p, ModelHandle& m) {
  check(fr_model_train(p.p, run.config(), &m.p), "train");
  OwnedString doc;
  check(fr_model_to_json(m.p, &doc.p), "train");
  run.write("model.json", doc.str() + "\n");
}

void cmd_train(Run& run) {
  PanelHandle p;
  run.load_panel(p);
  ModelHandle m;
  train_into(run, p, m);
}

void evaluate_into(Run& run, const ModelHandle& m, const PanelHandle& p) {
  OwnedString report, ht, hf;
  check(fr_evaluate(m.p, p.p, &report.p, &ht.p, &hf.p), "eval");
  run.write("eval_report.json", report.str() + "\n");
  run.write("histogram_true.csv", ht.str());
  run.write("histogram_false.csv", hf.str());
  std::cerr << "separation ratio " << json::parse(report.str()).at("ratio").get<double>() << "\n";
}

void cmd_eval(Run& run) {
  ModelHandle m;
  run.load_model(m);
  PanelHandle p;
  run.load_panel(p);
  evaluate_into(run, m, p);
}

void ablate_into(Run& run, const PanelHandle& p) {
  OwnedString csv, doc;
  check(fr_ablate(p.p, run.config(), &csv.p, &doc.p), "ablate");
  run.write("ablation.csv", csv.str());
  run.write("ablation.json", doc.str() + "\n");
}

void cmd_ablate(Run& run) {
  PanelHandle p;
  run.load_panel(p);
  ablate_into(run, p);
}

void simulate_into(Run& run, const ModelHandle& m, const PanelHandle& p) {
  OwnedString trace, hp, hr, summary;
  check(fr_simulate(m.p, p.p, run.config(), &trace.p, &hp.p, &hr.p, &summary.p), "simulate");
  run.write("policy_trace.csv", trace.str());
  run.write("policy_hist_proactive.csv", hp.str());
  run.write("policy_hist_random.csv", hr.str());
  run.write("policy_summary.json", summary.str() + "\n");
}

void cmd_simulate(Run& run) {
  ModelHandle m;
  run.load_model(m);
  PanelHandle p;
  run.load_panel(p);
  simulate_into(run, m, p);
}

void mel_into(Run& run, const ModelHandle& m, const PanelHandle& p) {
  OwnedString doc;
  check(fr_mel(m.p, p.p, run.config(), &doc.p), "mel");
  run.write("mel_risk.json", doc.str() + "\n");
}

void cmd_mel(Run& run) {
  ModelHandle m;
  run.load_model(m);
  PanelHandle p;
  run.load_panel(p);
  mel_into(run, m, p);
}

void cmd_tune(Run& run) {
  PanelHandle p;
  run.load_panel(p);
  OwnedString csv, best;
  check(fr_tune(p.p, run.config(), &csv.p, &best.p), "tune");
  run.write("tune.csv", csv.str());
  run.write("tune_best.json", best.str() + "\n");
}

/// Every artifact from one input: labor hours, panel, model, histograms,
/// ablation, policy traces and MEL risk.
void cmd_report(Run& run) {
  Records r;
  run.load_records(r);
  OwnedString labor;
  check(fr_records_labor_hours_csv(r.p, run.config(), &labor.p), "labor hours");
  run.write("labor_hours.csv", labor.str());

  PanelHandle p;
  run.load_panel(p);
  write_panel(run, p);
  ModelHandle m;
  train_into(run, p, m);
  evaluate_into(run, m, p);
  ablate_into(run, p);
  simulate_into(run, m, p);
  mel_into(run, m, p);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vehicle fleet breakdown-risk pipeline"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", o.config_path, "RunConfig JSON file")->check(CLI::ExistingFile);
    sub->add_option("-o,--out", o.out_dir, "Output directory")->capture_default_str();
    sub->add_option("--seed", o.seed, "Master seed");
  };
  auto data = [&](CLI::App* sub) {
    sub->add_option("-i,--input", o.input, "Sub-work-order CSV")->check(CLI::ExistingFile);
    sub->add_option("-u,--utilization", o.utilization, "Utilization sidecar CSV")->check(CLI::ExistingFile);
    sub->add_option("--include-scheduled", o.include_scheduled, "Count PREV services as repairs (true/false)");
  };
  auto panel_in = [&](CLI::App* sub) {
    data(sub);
    sub->add_option("-p,--panel", o.panel, "Panel CSV written by `panel`")->check(CLI::ExistingFile);
  };
  auto modeling = [&](CLI::App* sub) {
    sub->add_option("-m,--model-kind", o.model_kind, "logistic | random_forest | gbt");
    sub->add_option("-f,--features", o.features, "Feature subset, e.g. type+age+gap or all");
    sub->add_option("--split", o.split, "chronological | random");
    sub->add_option("--test-fraction", o.test_fraction, "Held-out fraction in (0, 1)");
    sub->add_option("--threads", o.threads, "Forest worker threads (0 = all cores)");
    sub->add_option("--n-estimators", o.n_estimators, "Tree count for forest and boosting");
  };
  auto model_in = [&](CLI::App* sub) { sub->add_option("--model", o.model, "Model JSON (default: <out>/model.json)"); };

  auto* synth = app.add_subcommand("synth", "Generate a synthetic fleet export with ground truth");
  common(synth);
  synth->add_option("--vehicles", o.vehicles, "Number of vehicles");
  synth->add_option("--weeks", o.weeks, "Number of weeks");

  auto* ingest = app.add_subcommand("ingest", "Validate a sub-work-order export");
  common(ingest);
  data(ingest);

  auto* panel = app.add_subcommand("panel", "Build the weekly vehicle panel");
  common(panel);
  data(panel);

  auto* train = app.add_subcommand("train", "Fit a model on the training split");
  common(train);
  panel_in(train);
  modeling(train);

  auto* eval = app.add_subcommand("eval", "Separation report on the held-out split");
  common(eval);
  panel_in(eval);
  model_in(eval);

  auto* ablate = app.add_subcommand("ablate", "Feature-subset ablation table");
  common(ablate);
  panel_in(ablate);
  modeling(ablate);

  auto* simulate = app.add_subcommand("simulate", "Proactive-repair rollout vs random baseline");
  common(simulate);
  panel_in(simulate);
  model_in(simulate);

  auto* mel = app.add_subcommand("mel", "Risk of falling below MEL per vehicle type");
  common(mel);
  panel_in(mel);
  model_in(mel);
  mel->add_option("--week", o.mel_week, "Panel week to assess (default: last)");

  auto* report = app.add_subcommand("report", "All report artifacts from one export");
  common(report);
  data(report);
  modeling(report);

  auto* tune = app.add_subcommand("tune", "Grid search for tree-model hyperparameters");
  common(tune);
  panel_in(tune);
  modeling(tune);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const std::vector<std::pair<CLI::App*, void (*)(Run&)>> commands = {
      {synth, cmd_synth}, {ingest, cmd_ingest},     {panel, cmd_panel}, {train, cmd_train},   {eval, cmd_eval},
      {ablate, cmd_ablate}, {simulate, cmd_simulate}, {mel, cmd_mel},     {report, cmd_report}, {tune, cmd_tune},
  };
  try {
    for (const auto& [sub, fn] : commands) {
      if (!sub->parsed()) continue;
      Run run(o, sub->get_name());
      fn(run);
      run.write_manifest();
    }
  } catch (const Failure& f) {
    std::cerr << "fleetrisk: " << f.message << "\n";
    return f.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "fleetrisk: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
