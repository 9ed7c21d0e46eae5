#include "fleetrisk/synth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <tuple>

#include "fleetrisk/models.hpp"
#include "fleetrisk/rng.hpp"

namespace fleetrisk {

using nlohmann::json;

namespace {

const std::vector<std::string> kUnscheduledPlans = {"Adjustment", "Alignment",    "Calibration", "Major Repair",
                                                    "Troubleshoot", "Minor Repair", "Tire Repair", "Electrical"};
const std::vector<std::string> kShops = {"Heavy Equipment Shop", "Light Vehicle Shop", "Special Purpose Shop"};

std::string asset_id_for(int year, const std::string& type, int serial) {
  char letter = 'X';
  for (char c : type) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      letter = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      break;
    }
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "AF%02d%c%05d", year % 100, letter, serial);
  return buf;
}

}  // namespace

void FleetConfig::validate() const {
  auto bad = [](const std::string& m) { throw Error(ErrorCode::InvalidConfig, "fleet config: " + m); };
  if (n_vehicles < 1) bad("n_vehicles must be >= 1");
  if (n_weeks < 2) bad("n_weeks must be >= 2");
  if (vehicle_types.empty()) bad("at least one vehicle type is required");
  if (units.empty()) bad("at least one unit is required");
  for (const auto& t : vehicle_types) {
    if (!(t.hazard_multiplier > 0.0) || !std::isfinite(t.hazard_multiplier)) bad("hazard multipliers must be > 0");
    if (!(t.weekly_utilization_rate >= 0.0)) bad("utilization rates must be >= 0");
  }
  if (min_acquisition_year < 2000 || max_acquisition_year > 2099 || min_acquisition_year > max_acquisition_year) {
    bad("acquisition years must be an ordered range within 2000..2099");
  }
  if (max_acquisition_year >= start_date.year()) bad("vehicles must be acquired before the start year");
  if (prev_interval < 1) bad("prev_interval must be >= 1");
  if (gap_cap < 0) bad("gap_cap must be >= 0");
  for (double b : {beta0, beta_age, beta_gap, beta_util}) {
    if (!std::isfinite(b)) bad("coefficients must be finite");
  }
}

FleetConfig fleet_config_from_json(const json& doc) {
  FleetConfig cfg;
  try {
    cfg.n_vehicles = doc.value("n_vehicles", cfg.n_vehicles);
    cfg.n_weeks = doc.value("n_weeks", cfg.n_weeks);
    cfg.beta0 = doc.value("beta0", cfg.beta0);
    cfg.beta_age = doc.value("beta_age", cfg.beta_age);
    cfg.beta_gap = doc.value("beta_gap", cfg.beta_gap);
    cfg.beta_util = doc.value("beta_util", cfg.beta_util);
    cfg.seed = doc.value("seed", cfg.seed);
    cfg.min_acquisition_year = doc.value("min_acquisition_year", cfg.min_acquisition_year);
    cfg.max_acquisition_year = doc.value("max_acquisition_year", cfg.max_acquisition_year);
    cfg.prev_interval = doc.value("prev_interval", cfg.prev_interval);
    cfg.gap_cap = doc.value("gap_cap", cfg.gap_cap);
    if (doc.contains("start_date")) {
      auto d = Date::parse(doc.at("start_date").get<std::string>());
      if (!d) throw Error(ErrorCode::InvalidConfig, "fleet config: bad start_date");
      cfg.start_date = d->monday();
    }
    if (doc.contains("units")) cfg.units = doc.at("units").get<std::vector<std::string>>();
    if (doc.contains("vehicle_types")) {
      cfg.vehicle_types.clear();
      for (const auto& t : doc.at("vehicle_types")) {
        cfg.vehicle_types.push_back({t.at("name").get<std::string>(), t.value("hazard_multiplier", 1.0),
                                     t.value("weekly_utilization_rate", 100.0)});
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("fleet config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

json to_json(const FleetConfig& cfg) {
  json types = json::array();
  for (const auto& t : cfg.vehicle_types) {
    types.push_back({{"name", t.name},
                     {"hazard_multiplier", t.hazard_multiplier},
                     {"weekly_utilization_rate", t.weekly_utilization_rate}});
  }
  return {{"n_vehicles", cfg.n_vehicles},
          {"n_weeks", cfg.n_weeks},
          {"vehicle_types", types},
          {"units", cfg.units},
          {"beta0", cfg.beta0},
          {"beta_age", cfg.beta_age},
          {"beta_gap", cfg.beta_gap},
          {"beta_util", cfg.beta_util},
          {"seed", cfg.seed},
          {"start_date", cfg.start_date.iso()},
          {"min_acquisition_year", cfg.min_acquisition_year},
          {"max_acquisition_year", cfg.max_acquisition_year},
          {"prev_interval", cfg.prev_interval},
          {"gap_cap", cfg.gap_cap}};
}

json to_json(const GroundTruth& truth) {
  json vehicles = json::array();
  for (const auto& v : truth.vehicles) {
    vehicles.push_back({{"asset_id", v.asset_id},
                        {"vehicle_type", v.vehicle_type},
                        {"unit", v.unit},
                        {"acquisition_year", v.acquisition_year},
                        {"breakdown_weeks", v.breakdown_weeks},
                        {"hazard", v.hazard}});
  }
  return {{"config", to_json(truth.config)}, {"vehicles", vehicles}};
}

double synth_hazard(const FleetConfig& cfg, double multiplier, double age, double gap, double utilization) {
  return sigmoid(cfg.beta0 + std::log(multiplier) + cfg.beta_age * age + cfg.beta_gap * gap +
                 cfg.beta_util * utilization);
}

SynthFleet generate_fleet(const FleetConfig& cfg) {
  cfg.validate();
  SynthFleet out;
  out.truth.config = cfg;

  struct Draft {
    SubWorkOrderRecord rec;
    int order;  // sub-order position inside a shop visit
  };
  std::vector<Draft> drafts;

  Rng fleet_rng(derive_seed(cfg.seed, "fleet"));
  const int years = cfg.max_acquisition_year - cfg.min_acquisition_year + 1;
  for (int v = 0; v < cfg.n_vehicles; ++v) {
    const auto& type = cfg.vehicle_types[fleet_rng.index(cfg.vehicle_types.size())];
    const auto& unit = cfg.units[fleet_rng.index(cfg.units.size())];
    const int year = cfg.min_acquisition_year + static_cast<int>(fleet_rng.index(static_cast<std::uint64_t>(years)));

    VehicleTruth truth;
    truth.asset_id = asset_id_for(year, type.name, v + 1);
    truth.vehicle_type = type.name;
    truth.unit = unit;
    truth.acquisition_year = year;

    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(v)));
    const WeekIndex acq_week = week_of(cfg.start_date, Date::from_ymd(year, 1, 1));
    double util = type.weekly_utilization_rate * static_cast<double>(-acq_week);
    std::optional<WeekIndex> last_breakdown;

    auto emit = [&](WeekIndex w, const std::string& plan, int order, std::optional<Date> same_day = {}) {
      SubWorkOrderRecord r;
      r.approval_date = same_day ? *same_day : cfg.start_date + 7 * w + static_cast<std::int64_t>(rng.index(5));
      r.closed_date = r.approval_date + static_cast<std::int64_t>(rng.index(15));
      r.asset_id = truth.asset_id;
      r.item_desc = type.name + " (" + unit + ")";
      r.mgmt_cd = type.name;
      r.equipment_pool = unit;
      r.maint_team = kShops[rng.index(kShops.size())];
      r.estbd_datetime = r.approval_date.iso() + " 07:30:00";
      r.work_plan_type = plan;
      r.labor_hours = std::round(rng.uniform(0.5, 12.0) * 10.0) / 10.0;
      drafts.push_back({std::move(r), order});
      return drafts.back().rec.approval_date;
    };

    for (WeekIndex w = 0; w < cfg.n_weeks; ++w) {
      if (w > 0) util += type.weekly_utilization_rate * rng.uniform(0.5, 1.5);
      out.utilization.set(truth.asset_id, w, util);
      const WeekIndex gap = std::min(last_breakdown ? w - *last_breakdown - 1 : w, cfg.gap_cap);
      const double h = synth_hazard(cfg, type.hazard_multiplier, static_cast<double>(w - acq_week),
                                    static_cast<double>(gap), util);
      truth.hazard.push_back(h);
      if (rng.uniform() < h) {
        truth.breakdown_weeks.push_back(w);
        last_breakdown = w;
        const Date day = emit(w, kUnscheduledPlans[rng.index(kUnscheduledPlans.size())], 1);
        if (rng.bernoulli(0.25)) emit(w, kUnscheduledPlans[rng.index(kUnscheduledPlans.size())], 2, day);
      }
      // staggered so vehicle 0 is serviced in week 0
      if ((w + v) % cfg.prev_interval == 0) emit(w, "Prev", 1);
    }
    out.truth.vehicles.push_back(std::move(truth));
  }

  // number work orders in export order: by approval date, then asset
  std::stable_sort(drafts.begin(), drafts.end(), [](const Draft& a, const Draft& b) {
    return std::tie(a.rec.approval_date, a.rec.asset_id) < std::tie(b.rec.approval_date, b.rec.asset_id);
  });
  int wo = 0;
  for (std::size_t i = 0; i < drafts.size(); ++i) {
    auto& r = drafts[i].rec;
    const bool same_visit = i > 0 && drafts[i].order > 1 && drafts[i - 1].rec.asset_id == r.asset_id &&
                            drafts[i - 1].rec.approval_date == r.approval_date;
    if (!same_visit) ++wo;
    char buf[32];
    std::snprintf(buf, sizeof buf, "WO%07d", wo);
    r.work_order_id = buf;
    std::snprintf(buf, sizeof buf, "%02d", same_visit ? drafts[i].order : 1);
    r.sub_work_order_id = buf;
    out.records.push_back(std::move(r));
  }

  std::sort(out.truth.vehicles.begin(), out.truth.vehicles.end(),
            [](const VehicleTruth& a, const VehicleTruth& b) { return a.asset_id < b.asset_id; });
  return out;
}

PanelOptions synth_panel_options(const SynthFleet& fleet) {
  PanelOptions opt;
  opt.include_scheduled = false;
  opt.start_date = fleet.truth.config.start_date;
  opt.end_week = fleet.truth.config.n_weeks - 1;
  opt.gap_cap = fleet.truth.config.gap_cap;
  opt.utilization = fleet.utilization;
  return opt;
}

}  // namespace fleetrisk
