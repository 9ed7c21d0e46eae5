// Runs the built CLI binary and checks exit codes and artifacts.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kDir = FLEETRISK_CLI_TEST_DIR;

int run(const std::string& args) {
  const std::string line = std::string("\"") + FLEETRISK_CLI_PATH + "\" " + args + " > \"" +
                           (kDir / "log.txt").string() + "\" 2>&1";
  const int status = std::system(line.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string out(const char* name) { return "-o \"" + (kDir / name).string() + "\""; }

struct Fresh {
  Fresh() {
    fs::remove_all(kDir);
    fs::create_directories(kDir);
  }
};

}  // namespace

TEST_CASE_FIXTURE(Fresh, "usage errors exit with 2") {
  CHECK(run("") == 2);
  CHECK(run("bogus") == 2);
  CHECK(run("eval " + out("empty")) == 2);
  CHECK(run("ingest -i /nonexistent/input.csv " + out("x")) == 2);
  std::ofstream(kDir / "bad.json") << R"({"sede": 1})";
  CHECK(run("synth -c \"" + (kDir / "bad.json").string() + "\" " + out("x")) == 2);
  CHECK(run("train -m svm " + out("x")) == 2);
}

TEST_CASE_FIXTURE(Fresh, "data errors exit with 1") {
  std::ofstream(kDir / "bad.csv") << "a,b\n1,2\n";
  CHECK(run("ingest -i \"" + (kDir / "bad.csv").string() + "\" " + out("x")) == 1);
}

TEST_CASE_FIXTURE(Fresh, "subcommands chain through the output directory") {
  const auto o = out("run");
  REQUIRE(run("synth --vehicles 20 --weeks 60 --seed 3 " + o) == 0);
  REQUIRE(run("ingest " + o) == 0);
  REQUIRE(run("panel " + o) == 0);
  REQUIRE(run("train -m forest --n-estimators 5 " + o) == 0);
  REQUIRE(run("eval " + o) == 0);
  REQUIRE(run("simulate " + o) == 0);
  REQUIRE(run("mel " + o) == 0);
  REQUIRE(run("ablate " + o) == 0);
  for (const char* name : {"workorders.csv", "utilization.csv", "ground_truth.json", "records.csv", "row_errors.csv",
                           "labor_hours.csv", "panel.csv", "model.json", "eval_report.json", "histogram_true.csv",
                           "histogram_false.csv", "policy_trace.csv", "policy_summary.json", "mel_risk.json",
                           "ablation.csv", "manifest.json"}) {
    CHECK_MESSAGE(fs::exists(kDir / "run" / name), name);
  }
}

TEST_CASE_FIXTURE(Fresh, "default synthetic fleet separates with logistic regression") {
  const auto o = out("defaults");
  REQUIRE(run("synth " + o) == 0);
  REQUIRE(run("train -m logistic " + o) == 0);
  REQUIRE(run("eval " + o) == 0);
  std::ifstream in(kDir / "defaults" / "eval_report.json");
  const auto report = nlohmann::json::parse(in);
  CHECK(report.at("ratio").get<double>() > 1.2);
}
