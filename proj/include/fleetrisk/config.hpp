#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fleetrisk/eval.hpp"
#include "fleetrisk/features.hpp"
#include "fleetrisk/models.hpp"
#include "fleetrisk/panel.hpp"
#include "fleetrisk/policy.hpp"
#include "fleetrisk/synth.hpp"

namespace fleetrisk {

/// Flat run configuration shared by every CLI subcommand. All randomness is
/// derived from `seed`:
///   split   = derive_seed(seed, "split")
///   forest  = derive_seed(seed, "forest"), tree i = derive_seed(forest, i)
///   gbt     = derive_seed(seed, "gbt")
///   policy  = derive_seed(seed, "policy")
///   synth   = synth.seed if given, else seed
struct RunConfig {
  std::uint64_t seed = 42;

  // ingest
  char delimiter = ',';
  std::string aliases;  // alias file path, optional

  // panel
  bool include_scheduled = true;
  std::optional<Date> start_date;
  std::optional<WeekIndex> end_week;
  std::int64_t gap_cap = 104;
  double default_rate = 1.0;
  std::map<std::string, double, std::less<>> type_rates;

  // model
  FeatureSpec features = FeatureSpec::all();
  ModelKind model = ModelKind::Logistic;
  ModelHyper hyper;

  // evaluation
  SplitSpec::Kind split = SplitSpec::Kind::Chronological;
  double test_fraction = 0.3;
  std::vector<FeatureSpec> ablation_subsets = standard_ablation_subsets();
  TuneGrid tune;

  // policy / MEL
  std::vector<MelSpec> mel;
  std::optional<WeekIndex> mel_week;
  double mel_default_fraction = 0.5;

  FleetConfig synth;

  /// Unknown keys are rejected.
  static RunConfig from_json(const nlohmann::json& doc);
  /// Fully resolved configuration (every key, defaults included).
  nlohmann::json to_json() const;

  PanelOptions panel_options() const;
  SplitSpec split_spec() const;
  ModelHyper model_hyper() const;
  std::uint64_t policy_seed() const;
};

}  // namespace fleetrisk
