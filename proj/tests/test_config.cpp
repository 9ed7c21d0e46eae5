#include <doctest.h>

#include "fleetrisk/config.hpp"
#include "fleetrisk/rng.hpp"

using namespace fleetrisk;
using nlohmann::json;

namespace {

ErrorCode code_of(const json& doc) {
  try {
    RunConfig::from_json(doc);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("empty config resolves to defaults") {
  const auto c = RunConfig::from_json(json::object());
  CHECK(c.seed == 42);
  CHECK(c.include_scheduled);
  CHECK(c.features == FeatureSpec::all());
  CHECK(c.model == ModelKind::Logistic);
  CHECK(c.split == SplitSpec::Kind::Chronological);
  CHECK(c.test_fraction == 0.3);
  CHECK(c.gap_cap == 104);
  CHECK(c.ablation_subsets == standard_ablation_subsets());
}

TEST_CASE("resolved config round-trips") {
  const json doc = {{"seed", 7},
                    {"delimiter", "tab"},
                    {"features", "type+age+gap"},
                    {"model", "gbt"},
                    {"split", "random"},
                    {"test_fraction", 0.25},
                    {"gbt_learning_rate", 0.2},
                    {"start_date", "2019-01-07"},
                    {"mel", json::array({{{"vehicle_type", "Forklift"}, {"mel", 3}, {"assigned", 5}}})},
                    {"synth", {{"n_vehicles", 12}}}};
  const auto c = RunConfig::from_json(doc);
  CHECK(c.delimiter == '\t');
  CHECK(c.model == ModelKind::Gbt);
  CHECK(c.synth.n_vehicles == 12);
  CHECK(c.synth.seed == 7);
  REQUIRE(c.mel.size() == 1);
  CHECK(c.mel[0].assigned == 5);
  const auto resolved = c.to_json();
  CHECK(RunConfig::from_json(resolved).to_json() == resolved);
}

TEST_CASE("bad configs are rejected") {
  CHECK(code_of({{"sede", 1}}) == ErrorCode::InvalidConfig);
  CHECK(code_of(json::array()) == ErrorCode::InvalidConfig);
  CHECK(code_of({{"seed", "x"}}) == ErrorCode::InvalidConfig);
  CHECK(code_of({{"delimiter", ";"}}) == ErrorCode::InvalidConfig);
  CHECK(code_of({{"test_fraction", 1.0}}) == ErrorCode::InvalidConfig);
  CHECK(code_of({{"split", "stratified"}}) == ErrorCode::InvalidConfig);
  CHECK(code_of({{"model", "svm"}}) == ErrorCode::InvalidConfig);
  CHECK(code_of({{"features", ""}}) == ErrorCode::EmptySpec);
  CHECK(code_of({{"gbt_learning_rate", 0.0}}) == ErrorCode::InvalidConfig);
  CHECK(code_of({{"mel_default_fraction", 1.5}}) == ErrorCode::InvalidConfig);
  CHECK(code_of({{"synth", {{"n_weeks", 1}}}}) == ErrorCode::InvalidConfig);
}

TEST_CASE("component seeds derive from the run seed") {
  RunConfig c;
  c.seed = 1234;
  c.split = SplitSpec::Kind::RandomRow;
  CHECK(c.split_spec().seed == derive_seed(1234, "split"));
  CHECK(c.model_hyper().forest.seed == derive_seed(1234, "forest"));
  CHECK(c.model_hyper().gbt.seed == derive_seed(1234, "gbt"));
  CHECK(c.policy_seed() == derive_seed(1234, "policy"));
  CHECK(derive_seed(1234, "split") != derive_seed(1234, "forest"));
  CHECK(derive_seed(1234, std::uint64_t{0}) != derive_seed(1234, std::uint64_t{1}));
  CHECK(derive_seed(1, "split") != derive_seed(2, "split"));
}
