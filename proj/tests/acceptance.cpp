// One PASS/FAIL line per acceptance criterion. Exit status is nonzero if any
// criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fleetrisk/config.hpp"
#include "fleetrisk/eval.hpp"
#include "fleetrisk/features.hpp"
#include "fleetrisk/models.hpp"
#include "fleetrisk/policy.hpp"
#include "fleetrisk/rng.hpp"
#include "fleetrisk/synth.hpp"

using namespace fleetrisk;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_s;  // 0 = no runtime bound
  std::function<Outcome()> run;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

Panel synth_panel(const FleetConfig& cfg) {
  const auto fleet = generate_fleet(cfg);
  return build_panel(fleet.records, synth_panel_options(fleet));
}

double ratio_of(const Panel& train, const Panel& test, const FeatureSpec& spec, ModelKind kind, const ModelHyper& h) {
  const auto fs = fit_and_score(train, test, spec, kind, h);
  return separation_ratio(fs.test_preds, fs.test_labels).ratio;
}

// 1 -------------------------------------------------------------------------
Outcome metric_oracle() {
  Outcome o;
  Rng rng(1001);
  std::vector<double> preds(1000);
  std::vector<int> labels(1000);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    preds[i] = rng.uniform();
    labels[i] = rng.bernoulli(0.2) ? 1 : 0;
  }
  double st = 0.0, sf = 0.0;
  double nt = 0.0, nf = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (labels[i]) {
      st += preds[i];
      nt += 1.0;
    } else {
      sf += preds[i];
      nf += 1.0;
    }
  }
  const double naive = (st / nt) / (sf / nf);
  const double got = separation_ratio(preds, labels).ratio;
  const double err = std::abs(got - naive);
  const double worked = separation_ratio(std::vector<double>{0.104, 0.070}, std::vector<int>{1, 0}).ratio;
  const double rounded = std::round(worked * 1000.0) / 1000.0;
  o.pass = err < 1e-12 && rounded == 1.486;
  o.detail = "abs err " + fmt(err) + ", 0.104/0.070 -> " + fmt(rounded);
  return o;
}

// 2 -------------------------------------------------------------------------
Outcome gradient_check() {
  Rng rng(1002);
  Panel p;
  for (int i = 0; i < 20; ++i) {
    p.rows.push_back({"V" + std::to_string(i % 4), i % 3 ? "A" : "B", "U", i, static_cast<std::int64_t>(rng.index(300)),
                      static_cast<std::int64_t>(rng.index(30)), rng.uniform(0.0, 500.0), rng.bernoulli(0.4) ? 1 : 0});
  }
  p.normalize();
  // type (A, B, unknown) + age + gap
  const auto m = standardize(encode(p, FeatureSpec{false, true, false, true, true, false}));
  Outcome o;
  if (m.rows() != 20 || m.width() != 5) return {false, "matrix is not 20x5"};
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> w(5), g(5);
    for (auto& x : w) x = rng.uniform(-1.0, 1.0);
    const double b = rng.uniform(-1.0, 1.0);
    const double l2 = 0.1;
    const double gb = logistic_gradient(m, w, b, l2, g);
    for (std::size_t j = 0; j <= 5; ++j) {
      auto wp = w, wm = w;
      double bp = b, bm = b;
      const double h = 1e-5;
      if (j < 5) {
        wp[j] += h;
        wm[j] -= h;
      } else {
        bp += h;
        bm -= h;
      }
      const double fd = (logistic_objective(m, wp, bp, l2) - logistic_objective(m, wm, bm, l2)) / (2 * h);
      const double an = j < 5 ? g[j] : gb;
      worst = std::max(worst, std::abs(fd - an) / std::max(1e-8, std::abs(an)));
    }
  }
  o.pass = worst < 1e-5;
  o.detail = "max rel err " + fmt(worst);
  return o;
}

// 3 -------------------------------------------------------------------------
Outcome recovery() {
  FleetConfig cfg;  // 200 vehicles x 260 weeks
  cfg.seed = 1003;
  const auto panel = synth_panel(cfg);
  const auto m = standardize(encode(panel, FeatureSpec{false, true, false, true, true, false}));
  LogisticHyper h;
  h.l2_lambda = 1e-6;
  const auto model = fit_logistic(m, h);
  double age = NAN, gap = NAN;
  for (std::size_t c = 0; c < m.width(); ++c) {
    const auto& col = m.columns()[c];
    if (col.name == "operational_weeks") age = model.weights[c] / col.scale;
    if (col.name == "weeks_since_last_visit") gap = model.weights[c] / col.scale;
  }
  const double ea = std::abs(age - cfg.beta_age) / std::abs(cfg.beta_age);
  const double eg = std::abs(gap - cfg.beta_gap) / std::abs(cfg.beta_gap);
  Outcome o;
  o.pass = age > 0 && gap > 0 && ea <= 0.15 && eg <= 0.15;
  o.detail = "beta_age " + fmt(age) + " vs " + fmt(cfg.beta_age) + " (" + fmt(100 * ea) + "%), beta_gap " + fmt(gap) +
             " vs " + fmt(cfg.beta_gap) + " (" + fmt(100 * eg) + "%)";
  return o;
}

// 4 -------------------------------------------------------------------------
Outcome ablation_ordering() {
  FleetConfig cfg;
  cfg.seed = 1004;
  cfg.beta_age = 0.0;
  const auto panel = synth_panel(cfg);
  const auto rows = ablation(panel, standard_ablation_subsets(), ModelKind::Logistic, RunConfig{}.model_hyper(),
                             SplitSpec::chronological(0.3));
  const FeatureSpec type_age{false, true, false, true, false, false};
  const FeatureSpec age_only{false, false, false, true, false, false};
  double ta = NAN, ao = NAN;
  std::string table;
  for (const auto& r : rows) {
    if (r.spec == type_age) ta = r.report.ratio;
    if (r.spec == age_only) ao = r.report.ratio;
    table += (table.empty() ? "" : ", ") + r.spec.label() + "=" + fmt(r.report.ratio);
  }
  Outcome o;
  o.pass = ta > ao && ao >= 0.9 && ao <= 1.15;
  o.detail = table;
  return o;
}

// 5 -------------------------------------------------------------------------
Outcome model_ranking() {
  RunConfig rc;
  rc.hyper.forest.n_estimators = 50;
  const auto hyper = rc.model_hyper();
  const auto panel = synth_panel(rc.synth);
  const auto parts = split(panel, SplitSpec::chronological(0.3));

  Panel shuffled = parts.train;
  std::vector<int> labels;
  for (const auto& r : shuffled.rows) labels.push_back(r.repair_flag);
  Rng rng(derive_seed(rc.seed, "shuffle"));
  for (std::size_t i = labels.size(); i > 1; --i) std::swap(labels[i - 1], labels[rng.index(i)]);
  for (std::size_t i = 0; i < labels.size(); ++i) shuffled.rows[i].repair_flag = labels[i];

  Outcome o;
  for (auto kind : {ModelKind::Logistic, ModelKind::Forest, ModelKind::Gbt}) {
    const double real = ratio_of(parts.train, parts.test, rc.features, kind, hyper);
    const double control = ratio_of(shuffled, parts.test, rc.features, kind, hyper);
    const bool ok = real > 1.2 && real > control && control >= 0.9 && control <= 1.1;
    o.pass = o.pass && ok;
    o.detail += (o.detail.empty() ? "" : ", ") + std::string(to_string(kind)) + " " + fmt(real) + " (control " +
                fmt(control) + ")";
  }
  return o;
}

// 6 -------------------------------------------------------------------------
Outcome policy_rollout() {
  RunConfig rc;
  rc.seed = 1006;
  rc.synth.seed = 1006;
  rc.synth.beta_age = 0.0;
  rc.synth.beta_gap = 0.15;
  rc.synth.beta0 = -6.0;
  const auto panel = synth_panel(rc.synth);
  const auto parts = split(panel, SplitSpec::chronological(0.3));
  const auto m = standardize(encode(parts.train, FeatureSpec{false, true, false, true, true, false}));
  const RiskModel model = fit_logistic(m, rc.hyper.logistic);
  const auto hr = summarize(simulate_policy(model, parts.test, {PolicyKind::HighestRisk, 0}));
  const auto rnd = summarize(simulate_policy(model, parts.test, {PolicyKind::RandomUniform, rc.policy_seed()}));
  Outcome o;
  o.pass = hr.mean_weeks_until_next < rnd.mean_weeks_until_next;
  o.detail = "mean weeks until next service: highest_risk " + fmt(hr.mean_weeks_until_next) + ", random " +
             fmt(rnd.mean_weeks_until_next);
  return o;
}

// 7 -------------------------------------------------------------------------
Outcome mel_oracle() {
  Rng rng(1007);
  double worst_enum = 0.0, worst_binom = 0.0;
  int cases = 0;
  for (int n = 1; n <= 12; ++n) {
    for (int trial = 0; trial < 20; ++trial, ++cases) {
      std::vector<double> p(static_cast<std::size_t>(n));
      for (auto& x : p) x = rng.uniform();
      const int mel = static_cast<int>(rng.index(static_cast<std::uint64_t>(n) + 1));
      double naive = 0.0;
      for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
        double prob = 1.0;
        int up = 0;
        for (int i = 0; i < n; ++i) {
          const bool failed = (mask >> i) & 1ULL;
          prob *= failed ? p[static_cast<std::size_t>(i)] : 1.0 - p[static_cast<std::size_t>(i)];
          up += failed ? 0 : 1;
        }
        if (up < mel) naive += prob;
      }
      worst_enum = std::max(worst_enum, std::abs(mel_risk(p, {"T", mel, n}) - naive));

      const double q = rng.uniform();
      double closed = 0.0;
      for (int k = n - mel + 1; k <= n; ++k) {
        closed += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)) * std::pow(q, k) *
                  std::pow(1.0 - q, n - k);
      }
      const std::vector<double> same(static_cast<std::size_t>(n), q);
      worst_binom = std::max(worst_binom, std::abs(mel_risk(same, {"T", mel, n}) - closed));
    }
  }
  Outcome o;
  o.pass = worst_enum < 1e-12 && worst_binom < 1e-12;
  o.detail = std::to_string(cases) + " cases, max err enumeration " + fmt(worst_enum) + ", binomial " + fmt(worst_binom);
  return o;
}

// 8 -------------------------------------------------------------------------
Outcome closure() {
  FleetConfig cfg;
  cfg.seed = 1008;
  const auto fleet = generate_fleet(cfg);
  std::ostringstream out;
  write_subworkorders(out, fleet.records);
  std::istringstream in(out.str());
  const auto parsed = parse_subworkorders(in, SchemaConfig{});
  const auto panel = build_panel(parsed.records, synth_panel_options(fleet));
  std::map<std::string, std::vector<WeekIndex>> flagged;
  for (const auto& r : panel.rows) {
    if (r.repair_flag) flagged[r.asset_id].push_back(r.week);
  }
  std::size_t mismatched = 0, breakdowns = 0;
  for (const auto& v : fleet.truth.vehicles) {
    breakdowns += v.breakdown_weeks.size();
    if (flagged[v.asset_id] != v.breakdown_weeks) ++mismatched;
  }
  Outcome o;
  o.pass = parsed.errors.empty() && mismatched == 0 && breakdowns > 0;
  o.detail = std::to_string(breakdowns) + " breakdowns, " + std::to_string(mismatched) + " vehicles mismatched, " +
             std::to_string(parsed.errors.size()) + " row errors";
  return o;
}

// 9 -------------------------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json strip_timestamps(json manifest) {
  for (auto& [name, run] : manifest.at("runs").items()) run.erase("created_at");
  return manifest;
}

Outcome determinism() {
  const fs::path root = FLEETRISK_ACCEPT_DIR;
  fs::remove_all(root);
  fs::create_directories(root);
  const json cfg = {{"seed", 9},
                    {"forest_n_estimators", 20},
                    {"gbt_n_estimators", 40},
                    {"tune_max_depth", {2, 4}},
                    {"tune_n_estimators", {10, 20}},
                    {"synth", {{"n_vehicles", 60}, {"n_weeks", 120}}}};
  const auto cfg_path = root / "config.json";
  std::ofstream(cfg_path) << cfg.dump(2) << "\n";

  Outcome o;
  std::vector<fs::path> dirs = {root / "run_a", root / "run_b"};
  for (const auto& dir : dirs) {
    for (const std::string cmd : {"synth", "ingest", "report", "tune -m gbt"}) {
      const std::string line = std::string("\"") + FLEETRISK_CLI_PATH + "\" " + cmd + " -c \"" + cfg_path.string() +
                               "\" -o \"" + dir.string() + "\" > \"" + (root / "cli.log").string() + "\" 2>&1";
      if (std::system(line.c_str()) != 0) return {false, "`" + cmd + "` failed, see " + (root / "cli.log").string()};
    }
  }
  std::set<std::string> names_a, names_b;
  for (const auto& e : fs::directory_iterator(dirs[0])) names_a.insert(e.path().filename().string());
  for (const auto& e : fs::directory_iterator(dirs[1])) names_b.insert(e.path().filename().string());
  if (names_a != names_b) return {false, "artifact sets differ"};
  std::size_t compared = 0;
  for (const auto& name : names_a) {
    const auto a = slurp(dirs[0] / name);
    const auto b = slurp(dirs[1] / name);
    bool same = a == b;
    if (name == "manifest.json") same = strip_timestamps(json::parse(a)) == strip_timestamps(json::parse(b));
    if (!same) {
      o.pass = false;
      o.detail += name + " differs; ";
    }
    ++compared;
  }
  o.detail += std::to_string(compared) + " artifacts compared";
  return o;
}

// 10 ------------------------------------------------------------------------
Outcome split_contracts() {
  FleetConfig cfg;
  cfg.seed = 1010;
  const auto panel = synth_panel(cfg);
  const double n = static_cast<double>(panel.rows.size());

  const auto chrono = split(panel, SplitSpec::chronological(0.3));
  WeekIndex max_train = chrono.train.rows.front().week, min_test = chrono.test.rows.front().week;
  for (const auto& r : chrono.train.rows) max_train = std::max(max_train, r.week);
  for (const auto& r : chrono.test.rows) min_test = std::min(min_test, r.week);
  const double frac = static_cast<double>(chrono.test.rows.size()) / n;
  const bool chrono_ok = max_train < min_test && frac >= 0.3 - 1e-9 && frac < 0.31 &&
                         chrono.train.rows.size() + chrono.test.rows.size() == panel.rows.size();

  const auto rnd = split(panel, SplitSpec::random_row(0.3, derive_seed(1010, "split")));
  using Key = std::pair<std::string, WeekIndex>;
  std::multiset<Key> all, seen;
  for (const auto& r : panel.rows) all.insert({r.asset_id, r.week});
  bool disjoint = true;
  for (const auto& r : rnd.train.rows) seen.insert({r.asset_id, r.week});
  for (const auto& r : rnd.test.rows) {
    if (seen.count({r.asset_id, r.week})) disjoint = false;
    seen.insert({r.asset_id, r.week});
  }
  const double rfrac = static_cast<double>(rnd.test.rows.size()) / n;
  const bool random_ok = disjoint && seen == all && std::abs(rfrac - 0.3) < 3.0 * std::sqrt(0.21 / n);

  Outcome o;
  o.pass = chrono_ok && random_ok;
  o.detail = "chronological: train weeks <= " + std::to_string(max_train) + " < test weeks >= " +
             std::to_string(min_test) + ", test fraction " + fmt(frac) + "; random: test fraction " + fmt(rfrac) +
             (disjoint && seen == all ? ", exact partition" : ", NOT a partition");
  return o;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "metric oracle", 1, metric_oracle},
      {2, "gradient check", 1, gradient_check},
      {3, "planted-parameter recovery", 60, recovery},
      {4, "ablation ordering", 300, ablation_ordering},
      {5, "model ranking sanity", 600, model_ranking},
      {6, "policy rollout", 120, policy_rollout},
      {7, "MEL oracle", 5, mel_oracle},
      {8, "pipeline closure", 30, closure},
      {9, "determinism", 0, determinism},
      {10, "split contracts", 0, split_contracts},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0 && secs >= c.budget_s) {
      o.pass = false;
      o.detail += "; over the " + fmt(c.budget_s) + " s budget";
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s %d %s (%.2f s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), secs, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
