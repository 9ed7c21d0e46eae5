#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "fleetrisk/synth.hpp"

using namespace fleetrisk;

namespace {

FleetConfig small(std::uint64_t seed) {
  FleetConfig cfg;
  cfg.n_vehicles = 25;
  cfg.n_weeks = 80;
  cfg.seed = seed;
  return cfg;
}

/// Round-trips the records through the CSV writer and parser first.
Panel panel_via_csv(const SynthFleet& fleet) {
  std::ostringstream out;
  write_subworkorders(out, fleet.records);
  std::istringstream in(out.str());
  const auto parsed = parse_subworkorders(in, SchemaConfig{});
  REQUIRE(parsed.errors.empty());
  return build_panel(parsed.records, synth_panel_options(fleet));
}

}  // namespace

TEST_CASE("a hopeless intercept yields only scheduled services") {
  auto cfg = small(1);
  cfg.beta0 = -50.0;
  const auto fleet = generate_fleet(cfg);
  CHECK_FALSE(fleet.records.empty());
  for (const auto& r : fleet.records) CHECK(r.work_plan_type == "Prev");
  for (const auto& v : fleet.truth.vehicles) CHECK(v.breakdown_weeks.empty());
}

TEST_CASE("zero coefficients give a coin-flip weekly hazard") {
  auto cfg = small(2);
  cfg.beta0 = 0.0;
  cfg.beta_age = 0.0;
  cfg.beta_gap = 0.0;
  cfg.beta_util = 0.0;
  cfg.vehicle_types = {{"Truck", 1.0, 10.0}};
  const auto fleet = generate_fleet(cfg);
  double n = 0.0, k = 0.0;
  for (const auto& v : fleet.truth.vehicles) {
    for (double h : v.hazard) CHECK(h == 0.5);
    n += static_cast<double>(v.hazard.size());
    k += static_cast<double>(v.breakdown_weeks.size());
  }
  CHECK(n == 25.0 * 80.0);
  CHECK(std::abs(k / n - 0.5) < 3.0 * std::sqrt(0.25 / n));
}

TEST_CASE("property: panel flags reproduce the generator's breakdown weeks") {
  for (std::uint64_t seed : {3ULL, 4ULL, 5ULL}) {
    const auto fleet = generate_fleet(small(seed));
    const auto panel = panel_via_csv(fleet);
    std::map<std::string, std::set<WeekIndex>> flagged;
    std::map<std::string, std::size_t> row_count;
    for (const auto& r : panel.rows) {
      ++row_count[r.asset_id];
      if (r.repair_flag) flagged[r.asset_id].insert(r.week);
    }
    for (const auto& v : fleet.truth.vehicles) {
      CHECK(flagged[v.asset_id] == std::set<WeekIndex>(v.breakdown_weeks.begin(), v.breakdown_weeks.end()));
      CHECK(row_count[v.asset_id] == 80);
    }
  }
}

TEST_CASE("property: stored hazards equal the formula on panel covariates") {
  const auto fleet = generate_fleet(small(6));
  const auto panel = panel_via_csv(fleet);
  std::map<std::string, const VehicleTruth*> truth;
  for (const auto& v : fleet.truth.vehicles) truth[v.asset_id] = &v;
  std::map<std::string, double> mult;
  for (const auto& t : fleet.truth.config.vehicle_types) mult[t.name] = t.hazard_multiplier;
  for (const auto& r : panel.rows) {
    const auto& v = *truth.at(r.asset_id);
    const double h = synth_hazard(fleet.truth.config, mult.at(r.vehicle_type), static_cast<double>(r.operational_weeks),
                                  static_cast<double>(r.weeks_since_last_visit), r.utilization);
    CHECK(h == v.hazard[static_cast<std::size_t>(r.week)]);
  }
}

TEST_CASE("operational weeks start at January 1 of the acquisition year") {
  const auto fleet = generate_fleet(small(7));
  const auto panel = build_panel(fleet.records, synth_panel_options(fleet));
  std::map<std::string, int> year;
  for (const auto& v : fleet.truth.vehicles) year[v.asset_id] = v.acquisition_year;
  for (const auto& r : panel.rows) {
    if (r.week != 0) continue;
    const auto jan1 = week_of(fleet.truth.config.start_date, Date::from_ymd(year.at(r.asset_id), 1, 1));
    CHECK(r.operational_weeks == -jan1);
  }
}

TEST_CASE("generation is deterministic per seed") {
  const auto a = generate_fleet(small(8));
  const auto b = generate_fleet(small(8));
  const auto c = generate_fleet(small(9));
  CHECK(a.records == b.records);
  CHECK(to_json(a.truth) == to_json(b.truth));
  CHECK_FALSE(a.records == c.records);
}

TEST_CASE("config validation and json round-trip") {
  const auto cfg = small(10);
  CHECK(to_json(fleet_config_from_json(to_json(cfg))) == to_json(cfg));
  auto code = [](const nlohmann::json& doc) {
    try {
      fleet_config_from_json(doc);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Io;
  };
  CHECK(code({{"n_vehicles", 0}}) == ErrorCode::InvalidConfig);
  CHECK(code({{"n_weeks", "many"}}) == ErrorCode::InvalidConfig);
  CHECK(code({{"vehicle_types", nlohmann::json::array({{{"name", "X"}, {"hazard_multiplier", 0.0}}})}}) ==
        ErrorCode::InvalidConfig);
  CHECK(code({{"max_acquisition_year", 2016}}) == ErrorCode::InvalidConfig);
  CHECK(code({{"start_date", "soon"}}) == ErrorCode::InvalidConfig);
}
