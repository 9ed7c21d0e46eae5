#include "fleetrisk/config.hpp"

#include <set>

#include "fleetrisk/rng.hpp"

namespace fleetrisk {

using nlohmann::json;

namespace {

const std::set<std::string> kKeys = {
    "seed",          "delimiter",          "aliases",          "include_scheduled", "start_date",
    "end_week",      "gap_cap",            "default_rate",     "type_rates",        "features",
    "model",         "l2_lambda",          "max_iters",        "tol",               "forest_n_estimators",
    "forest_max_features", "forest_max_depth", "forest_min_leaf", "threads",        "gbt_learning_rate",
    "gbt_n_estimators", "gbt_max_depth",   "gbt_max_features", "gbt_min_leaf",      "split",
    "test_fraction", "ablation_subsets",   "tune_max_depth",   "tune_n_estimators", "tune_learning_rate",
    "mel",           "mel_week",           "mel_default_fraction", "synth",
};

template <typename T>
void read(const json& doc, const char* key, T& dst) {
  if (!doc.contains(key) || doc.at(key).is_null()) return;
  try {
    dst = doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::InvalidConfig, std::string("config key '") + key + "' has the wrong type");
  }
}

}  // namespace

RunConfig RunConfig::from_json(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (!kKeys.count(key)) throw Error(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
  }
  RunConfig c;
  read(doc, "seed", c.seed);

  std::string delim = ",";
  read(doc, "delimiter", delim);
  if (delim == "," || delim == "comma") {
    c.delimiter = ',';
  } else if (delim == "\t" || delim == "tab") {
    c.delimiter = '\t';
  } else {
    throw Error(ErrorCode::InvalidConfig, "delimiter must be 'comma' or 'tab'");
  }
  read(doc, "aliases", c.aliases);

  read(doc, "include_scheduled", c.include_scheduled);
  if (doc.contains("start_date") && !doc.at("start_date").is_null()) {
    std::string s;
    read(doc, "start_date", s);
    auto d = Date::parse(s);
    if (!d) throw Error(ErrorCode::InvalidConfig, "start_date '" + s + "' is not a date");
    c.start_date = *d;
  }
  if (doc.contains("end_week") && !doc.at("end_week").is_null()) {
    WeekIndex w = 0;
    read(doc, "end_week", w);
    c.end_week = w;
  }
  read(doc, "gap_cap", c.gap_cap);
  if (c.gap_cap < 0) throw Error(ErrorCode::InvalidConfig, "gap_cap must be >= 0");
  read(doc, "default_rate", c.default_rate);
  if (doc.contains("type_rates")) {
    std::map<std::string, double> rates;
    read(doc, "type_rates", rates);
    c.type_rates.insert(rates.begin(), rates.end());
  }

  if (doc.contains("features")) {
    std::string f;
    read(doc, "features", f);
    c.features = FeatureSpec::parse(f);
  }
  if (doc.contains("model")) {
    std::string m;
    read(doc, "model", m);
    c.model = parse_model_kind(m);
  }
  auto& h = c.hyper;
  read(doc, "l2_lambda", h.logistic.l2_lambda);
  read(doc, "max_iters", h.logistic.max_iters);
  read(doc, "tol", h.logistic.tol);
  read(doc, "forest_n_estimators", h.forest.n_estimators);
  read(doc, "forest_max_features", h.forest.max_features);
  read(doc, "forest_max_depth", h.forest.max_depth);
  read(doc, "forest_min_leaf", h.forest.min_leaf);
  read(doc, "threads", h.forest.threads);
  read(doc, "gbt_learning_rate", h.gbt.learning_rate);
  read(doc, "gbt_n_estimators", h.gbt.n_estimators);
  read(doc, "gbt_max_depth", h.gbt.max_depth);
  read(doc, "gbt_max_features", h.gbt.max_features);
  read(doc, "gbt_min_leaf", h.gbt.min_leaf);
  if (!(h.logistic.tol > 0.0)) throw Error(ErrorCode::InvalidConfig, "tol must be > 0");
  if (h.logistic.l2_lambda < 0.0) throw Error(ErrorCode::InvalidConfig, "l2_lambda must be >= 0");
  if (h.forest.n_estimators < 1) throw Error(ErrorCode::InvalidConfig, "forest_n_estimators must be >= 1");
  if (!(h.gbt.learning_rate > 0.0 && h.gbt.learning_rate <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "gbt_learning_rate must be in (0, 1]");
  }

  if (doc.contains("split")) {
    std::string s;
    read(doc, "split", s);
    s = to_lower(s);
    if (s == "chronological" || s == "chrono") {
      c.split = SplitSpec::Kind::Chronological;
    } else if (s == "random" || s == "random_row") {
      c.split = SplitSpec::Kind::RandomRow;
    } else {
      throw Error(ErrorCode::InvalidConfig, "split must be 'chronological' or 'random'");
    }
  }
  read(doc, "test_fraction", c.test_fraction);
  if (!(c.test_fraction > 0.0 && c.test_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "test_fraction must be in (0, 1)");
  }
  if (doc.contains("ablation_subsets")) {
    std::vector<std::string> subsets;
    read(doc, "ablation_subsets", subsets);
    c.ablation_subsets.clear();
    for (const auto& s : subsets) c.ablation_subsets.push_back(FeatureSpec::parse(s));
  }
  read(doc, "tune_max_depth", c.tune.max_depth);
  read(doc, "tune_n_estimators", c.tune.n_estimators);
  read(doc, "tune_learning_rate", c.tune.learning_rate);

  if (doc.contains("mel")) {
    const auto& arr = doc.at("mel");
    if (!arr.is_array()) throw Error(ErrorCode::InvalidConfig, "mel must be an array");
    for (const auto& m : arr) {
      try {
        c.mel.push_back({m.at("vehicle_type").get<std::string>(), m.at("mel").get<int>(), m.value("assigned", 0)});
      } catch (const json::exception&) {
        throw Error(ErrorCode::InvalidConfig, "mel entries need vehicle_type and mel");
      }
    }
  }
  if (doc.contains("mel_week") && !doc.at("mel_week").is_null()) {
    WeekIndex w = 0;
    read(doc, "mel_week", w);
    c.mel_week = w;
  }
  read(doc, "mel_default_fraction", c.mel_default_fraction);
  if (!(c.mel_default_fraction >= 0.0 && c.mel_default_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "mel_default_fraction must be in [0, 1]");
  }

  json synth = doc.contains("synth") ? doc.at("synth") : json::object();
  if (!synth.is_object()) throw Error(ErrorCode::InvalidConfig, "synth must be an object");
  if (!synth.contains("seed")) synth["seed"] = c.seed;
  c.synth = fleet_config_from_json(synth);
  return c;
}

json RunConfig::to_json() const {
  json subsets = json::array();
  for (const auto& s : ablation_subsets) subsets.push_back(s.label());
  json mel_arr = json::array();
  for (const auto& m : mel) mel_arr.push_back({{"vehicle_type", m.vehicle_type}, {"mel", m.mel}, {"assigned", m.assigned}});
  std::map<std::string, double> rates(type_rates.begin(), type_rates.end());
  return {
      {"seed", seed},
      {"delimiter", delimiter == '\t' ? "tab" : "comma"},
      {"aliases", aliases},
      {"include_scheduled", include_scheduled},
      {"start_date", start_date ? json(start_date->iso()) : json(nullptr)},
      {"end_week", end_week ? json(*end_week) : json(nullptr)},
      {"gap_cap", gap_cap},
      {"default_rate", default_rate},
      {"type_rates", rates},
      {"features", features.label()},
      {"model", std::string(fleetrisk::to_string(model))},
      {"l2_lambda", hyper.logistic.l2_lambda},
      {"max_iters", hyper.logistic.max_iters},
      {"tol", hyper.logistic.tol},
      {"forest_n_estimators", hyper.forest.n_estimators},
      {"forest_max_features", hyper.forest.max_features},
      {"forest_max_depth", hyper.forest.max_depth},
      {"forest_min_leaf", hyper.forest.min_leaf},
      {"threads", hyper.forest.threads},
      {"gbt_learning_rate", hyper.gbt.learning_rate},
      {"gbt_n_estimators", hyper.gbt.n_estimators},
      {"gbt_max_depth", hyper.gbt.max_depth},
      {"gbt_max_features", hyper.gbt.max_features},
      {"gbt_min_leaf", hyper.gbt.min_leaf},
      {"split", split == SplitSpec::Kind::Chronological ? "chronological" : "random"},
      {"test_fraction", test_fraction},
      {"ablation_subsets", subsets},
      {"tune_max_depth", tune.max_depth},
      {"tune_n_estimators", tune.n_estimators},
      {"tune_learning_rate", tune.learning_rate},
      {"mel", mel_arr},
      {"mel_week", mel_week ? json(*mel_week) : json(nullptr)},
      {"mel_default_fraction", mel_default_fraction},
      {"synth", fleetrisk::to_json(synth)},
  };
}

PanelOptions RunConfig::panel_options() const {
  PanelOptions o;
  o.include_scheduled = include_scheduled;
  o.start_date = start_date;
  o.end_week = end_week;
  o.gap_cap = gap_cap;
  o.type_rates = type_rates;
  o.default_rate = default_rate;
  return o;
}

SplitSpec RunConfig::split_spec() const { return {split, test_fraction, derive_seed(seed, "split")}; }

ModelHyper RunConfig::model_hyper() const {
  ModelHyper h = hyper;
  h.logistic.seed = seed;
  h.forest.seed = derive_seed(seed, "forest");
  h.gbt.seed = derive_seed(seed, "gbt");
  return h;
}

std::uint64_t RunConfig::policy_seed() const { return derive_seed(seed, "policy"); }

}  // namespace fleetrisk
