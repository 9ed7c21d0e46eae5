#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fleetrisk/ingest.hpp"
#include "fleetrisk/panel.hpp"

namespace fleetrisk {

struct VehicleTypeConfig {
  std::string name;  // emitted as the Asset LIN/TAMCN code
  double hazard_multiplier = 1.0;
  double weekly_utilization_rate = 100.0;
};

/// Discrete-time logistic hazard fleet:
///   P(breakdown in week w) = sigmoid(beta0 + log(multiplier) + beta_age * age
///                                    + beta_gap * gap + beta_util * utilization)
/// where age, gap and utilization are the panel covariates a
/// scheduled-excluded panel of the generated data reproduces.
struct FleetConfig {
  int n_vehicles = 200;
  int n_weeks = 260;
  std::vector<VehicleTypeConfig> vehicle_types = {
      {"Truck Cargo", 1.0, 150.0}, {"Forklift", 2.0, 20.0}, {"Sedan", 0.4, 200.0},
      {"Refueler", 1.5, 80.0},     {"Loader", 3.5, 30.0},
  };
  std::vector<std::string> units = {"LRS VEHICLE OPS", "LFS FUELS", "31 AMXS/555 AMU", "SFS PATROL"};
  double beta0 = -5.3;
  double beta_age = 0.002;
  double beta_gap = 0.08;
  double beta_util = 0.0;
  std::uint64_t seed = 42;
  Date start_date = Date::from_ymd(2016, 1, 4);  // Monday
  int min_acquisition_year = 2006;
  int max_acquisition_year = 2015;
  int prev_interval = 26;  // weeks between scheduled PREV services
  std::int64_t gap_cap = 104;

  void validate() const;
};

FleetConfig fleet_config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const FleetConfig& cfg);

struct VehicleTruth {
  std::string asset_id;
  std::string vehicle_type;
  std::string unit;
  int acquisition_year = 0;
  std::vector<double> hazard;               // per week 0..n_weeks-1
  std::vector<WeekIndex> breakdown_weeks;   // ascending
};

struct GroundTruth {
  FleetConfig config;
  std::vector<VehicleTruth> vehicles;  // sorted by asset_id
};

nlohmann::json to_json(const GroundTruth& truth);

struct SynthFleet {
  std::vector<SubWorkOrderRecord> records;
  UtilizationTable utilization;
  GroundTruth truth;
};

SynthFleet generate_fleet(const FleetConfig& config);

/// The hazard formula used by the generator.
double synth_hazard(const FleetConfig& cfg, double multiplier, double age, double gap, double utilization);

/// Panel options that line the panel up with the generator's weeks
/// (scheduled services excluded, sidecar utilization).
PanelOptions synth_panel_options(const SynthFleet& fleet);

}  // namespace fleetrisk
