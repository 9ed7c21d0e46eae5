#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>

#include "fleetrisk/eval.hpp"
#include "fleetrisk/policy.hpp"
#include "fleetrisk/rng.hpp"
#include "fleetrisk/synth.hpp"

using namespace fleetrisk;

namespace {

const FeatureSpec kTypeGap{false, true, false, false, true, false};

/// Four vehicles, one of them HIGH with a ten-fold weekly hazard. Gaps are
/// recomputed from the drawn flags.
Panel planted_panel(Rng& rng, int weeks) {
  Panel p;
  for (int v = 0; v < 4; ++v) {
    std::int64_t gap = 0;
    for (int w = 0; w < weeks; ++w) {
      const bool high = v == 0;
      const int flag = rng.bernoulli(high ? 0.4 : 0.04) ? 1 : 0;
      p.rows.push_back({"V" + std::to_string(v), high ? "HIGH" : "LOW", "U", w, w, gap, 0.0, flag});
      gap = flag ? 0 : gap + 1;
    }
  }
  p.normalize();
  return p;
}

RiskModel fit(const Panel& p, const FeatureSpec& spec) {
  return fit_model(ModelKind::Logistic, standardize(encode(p, spec)), ModelHyper{});
}

double naive_mel(const std::vector<double>& p, int mel) {
  const auto n = p.size();
  double risk = 0.0;
  for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
    double prob = 1.0;
    int up = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool failed = (mask >> i) & 1ULL;
      prob *= failed ? p[i] : 1.0 - p[i];
      up += failed ? 0 : 1;
    }
    if (up < mel) risk += prob;
  }
  return risk;
}

double binom_tail(int n, double p, int min_failures) {
  double s = 0.0;
  for (int k = min_failures; k <= n; ++k) {
    s += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)) * std::pow(p, k) *
         std::pow(1.0 - p, n - k);
  }
  return s;
}

}  // namespace

TEST_CASE("a single-vehicle fleet forces the choice") {
  Rng rng(1);
  const auto p = planted_panel(rng, 30);
  const auto model = fit(p, kTypeGap);
  Panel solo;
  for (const auto& r : p.rows) {
    if (r.asset_id == "V2") solo.rows.push_back(r);
  }
  solo.normalize();
  for (auto kind : {PolicyKind::HighestRisk, PolicyKind::RandomUniform}) {
    const auto t = simulate_policy(model, solo, {kind, 3});
    REQUIRE(t.entries.size() == 30);
    for (const auto& e : t.entries) CHECK(e.chosen_asset == "V2");
  }
}

TEST_CASE("highest risk finds the planted high-hazard vehicle") {
  FleetConfig cfg;
  cfg.n_vehicles = 2;
  cfg.n_weeks = 400;
  cfg.beta0 = -3.5;
  cfg.beta_age = 0.0;
  cfg.beta_gap = 0.01;
  cfg.vehicle_types = {{"HIGH", 10.0, 50.0}, {"LOW", 1.0, 50.0}};
  // first seed whose two vehicles draw different types
  SynthFleet fleet;
  for (cfg.seed = 1;; ++cfg.seed) {
    fleet = generate_fleet(cfg);
    if (fleet.truth.vehicles[0].vehicle_type != fleet.truth.vehicles[1].vehicle_type) break;
  }
  const auto panel = build_panel(fleet.records, synth_panel_options(fleet));
  const auto parts = split(panel, SplitSpec::chronological(0.3));
  const auto model = fit(parts.train, kTypeGap);
  const auto t = simulate_policy(model, parts.test, {PolicyKind::HighestRisk, 0});
  std::size_t hits = 0;
  for (const auto& e : t.entries) {
    const auto& v = fleet.truth.vehicles[0].asset_id == e.chosen_asset ? fleet.truth.vehicles[0] : fleet.truth.vehicles[1];
    hits += v.vehicle_type == "HIGH" ? 1 : 0;
  }
  CHECK(t.entries.size() == 120);
  CHECK(static_cast<double>(hits) >= 0.9 * static_cast<double>(t.entries.size()));
}

TEST_CASE("property: trace agrees with an independent replay") {
  Rng rng(3);
  for (int trial = 0; trial < 8; ++trial) {
    const auto p = planted_panel(rng, 60);
    const auto before = p;
    const auto model = fit(p, kTypeGap);
    for (auto kind : {PolicyKind::HighestRisk, PolicyKind::RandomUniform}) {
      const auto t = simulate_policy(model, p, {kind, 11 + static_cast<std::uint64_t>(trial)});
      CHECK(p.rows == before.rows);
      std::map<std::string, WeekIndex> last_proactive;
      std::size_t k = 0;
      for (WeekIndex w = 0; w < 60; ++w, ++k) {
        REQUIRE(k < t.entries.size());
        const auto& e = t.entries[k];
        CHECK(e.week == w);
        // replay the gap reset and score each active vehicle on its own
        double best = -1.0;
        const PanelRow* chosen = nullptr;
        for (const auto& r : p.rows) {
          if (r.week != w) continue;
          PanelRow m = r;
          if (auto it = last_proactive.find(r.asset_id); it != last_proactive.end()) {
            m.weeks_since_last_visit = std::min<std::int64_t>(m.weeks_since_last_visit, w - it->second - 1);
          }
          Panel one;
          one.rows = {m};
          const double s = predict_proba(model, encode(one, layout_of(model)))[0];
          best = std::max(best, s);
          if (r.asset_id == e.chosen_asset) {
            chosen = &r;
            CHECK(s == e.score);
          }
        }
        REQUIRE(chosen != nullptr);
        if (kind == PolicyKind::HighestRisk) CHECK(e.score == best);
        CHECK(e.weeks_since_last_actual_service == chosen->weeks_since_last_visit + 1);
        std::optional<std::int64_t> until;
        for (const auto& r : p.rows) {
          if (r.asset_id == chosen->asset_id && r.week >= w && r.repair_flag && !until) until = r.week - w;
        }
        CHECK(e.weeks_until_next_actual_service == until);
        last_proactive[e.chosen_asset] = w;
      }
      CHECK(k == t.entries.size());
    }
  }
}

TEST_CASE("random policy is reproducible per seed") {
  Rng rng(4);
  const auto p = planted_panel(rng, 80);
  const auto model = fit(p, kTypeGap);
  auto names = [](const PolicyTrace& t) {
    std::vector<std::string> v;
    for (const auto& e : t.entries) v.push_back(e.chosen_asset);
    return v;
  };
  const auto a = simulate_policy(model, p, {PolicyKind::RandomUniform, 5});
  const auto b = simulate_policy(model, p, {PolicyKind::RandomUniform, 5});
  const auto c = simulate_policy(model, p, {PolicyKind::RandomUniform, 6});
  CHECK(names(a) == names(b));
  CHECK(names(a) != names(c));
}

TEST_CASE("empty test panel") {
  Rng rng(5);
  const auto model = fit(planted_panel(rng, 10), kTypeGap);
  try {
    simulate_policy(model, Panel{}, {});
    FAIL("expected EmptyTestRange");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyTestRange);
  }
}

TEST_CASE("trace histograms") {
  PolicyTrace empty;
  const auto h0 = trace_histograms(empty);
  CHECK(h0.since_last.empty());
  CHECK(h0.until_next.empty());
  CHECK(h0.censored == 0);
  CHECK(summarize(empty).entries == 0);

  PolicyTrace t;
  t.entries = {{0, "A", 0.1, 1, 0}, {1, "A", 0.1, 1, std::nullopt}, {2, "B", 0.2, 2, 4}};
  const auto h = trace_histograms(t);
  CHECK(h.since_last == std::map<std::int64_t, std::size_t>{{1, 2}, {2, 1}});
  CHECK(h.until_next == std::map<std::int64_t, std::size_t>{{0, 1}, {4, 1}});
  CHECK(h.censored == 1);
  const auto s = summarize(t);
  CHECK(s.mean_weeks_since_last == doctest::Approx(4.0 / 3.0));
  CHECK(s.mean_weeks_until_next == 2.0);
}

TEST_CASE("property: histogram totals") {
  Rng rng(6);
  const auto p = planted_panel(rng, 50);
  const auto model = fit(p, kTypeGap);
  const auto t = simulate_policy(model, p, {PolicyKind::RandomUniform, 9});
  const auto h = trace_histograms(t);
  auto total = [](const std::map<std::int64_t, std::size_t>& m) {
    return std::accumulate(m.begin(), m.end(), std::size_t{0}, [](std::size_t a, const auto& kv) { return a + kv.second; });
  };
  CHECK(total(h.since_last) == t.entries.size());
  CHECK(total(h.until_next) == t.entries.size() - h.censored);
}

TEST_CASE("mel risk examples") {
  CHECK(mel_risk(std::vector<double>{0.0, 0.0, 0.0}, {"T", 3, 3}) == 0.0);
  CHECK(mel_risk(std::vector<double>{0.5, 0.5}, {"T", 1, 2}) == 0.25);
  CHECK(mel_risk(std::vector<double>{1.0, 0.0}, {"T", 2, 2}) == 1.0);
  CHECK(mel_risk(std::vector<double>{0.3}, {"T", 0, 1}) == 0.0);
  try {
    mel_risk(std::vector<double>{0.1, 0.2}, {"T", 1, 3});
    FAIL("expected LengthMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LengthMismatch);
  }
  CHECK_THROWS_AS(mel_risk(std::vector<double>{0.1}, {"T", 2, 1}), Error);
  CHECK_THROWS_AS(mel_risk(std::vector<double>{1.5}, {"T", 1, 1}), Error);
}

TEST_CASE("property: mel risk matches enumeration and the binomial form") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.index(12));
    const int mel = static_cast<int>(rng.index(static_cast<std::uint64_t>(n) + 1));
    std::vector<double> p(static_cast<std::size_t>(n));
    for (auto& x : p) x = rng.uniform();
    CHECK(std::abs(mel_risk(p, {"T", mel, n}) - naive_mel(p, mel)) < 1e-12);

    const double q = rng.uniform();
    const std::vector<double> same(static_cast<std::size_t>(n), q);
    CHECK(std::abs(mel_risk(same, {"T", mel, n}) - binom_tail(n, q, n - mel + 1)) < 1e-12);

    const auto dist = failure_count_distribution(p);
    CHECK(std::abs(std::accumulate(dist.begin(), dist.end(), 0.0) - 1.0) < 1e-12);
  }
}

TEST_CASE("property: mel risk is monotone in each probability") {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.index(15));
    const int mel = static_cast<int>(rng.index(static_cast<std::uint64_t>(n) + 1));
    std::vector<double> p(static_cast<std::size_t>(n));
    for (auto& x : p) x = rng.uniform();
    const double base = mel_risk(p, {"T", mel, n});
    auto q = p;
    const auto i = rng.index(p.size());
    q[i] = rng.uniform(p[i], 1.0);
    CHECK(mel_risk(q, {"T", mel, n}) >= base - 1e-15);
  }
}

TEST_CASE("mel by type scores the active vehicles of each type") {
  Rng rng(9);
  const auto p = planted_panel(rng, 20);
  const auto model = fit(p, kTypeGap);
  const auto risks = mel_risk_by_type(model, p, 19, {{"LOW", 2, 0}, {"HIGH", 1, 1}});
  REQUIRE(risks.size() == 2);
  CHECK(risks[0].spec.assigned == 3);
  CHECK(risks[0].assets == std::vector<std::string>{"V1", "V2", "V3"});
  CHECK(risks[0].risk == doctest::Approx(naive_mel(risks[0].probs, 2)).epsilon(1e-12));
  CHECK(risks[1].risk == doctest::Approx(risks[1].probs[0]).epsilon(1e-12));
  CHECK_THROWS_AS(mel_risk_by_type(model, p, 99, {{"LOW", 1, 0}}), Error);
}

TEST_CASE("highest risk ties go to the smallest asset id") {
  Rng rng(10);
  const auto model = fit(planted_panel(rng, 40), kTypeGap);
  Panel twins;
  for (const std::string id : {"ZED", "ALPHA", "MID"}) twins.rows.push_back({id, "LOW", "U", 0, 5, 3, 0.0, 0});
  twins.normalize();
  const auto t = simulate_policy(model, twins, {PolicyKind::HighestRisk, 0});
  REQUIRE(t.entries.size() == 1);
  CHECK(t.entries[0].chosen_asset == "ALPHA");
}
