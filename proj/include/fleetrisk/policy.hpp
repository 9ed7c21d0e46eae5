#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fleetrisk/models.hpp"
#include "fleetrisk/panel.hpp"

namespace fleetrisk {

enum class PolicyKind { HighestRisk, RandomUniform };

struct PolicySpec {
  PolicyKind kind = PolicyKind::HighestRisk;
  std::uint64_t seed = 0;  // RandomUniform only
};

struct PolicyEntry {
  WeekIndex week = 0;
  std::string chosen_asset;
  double score = 0.0;
  /// Unmodified weeks_since_last_visit + 1, i.e. 1 when serviced the week before.
  std::int64_t weeks_since_last_actual_service = 0;
  /// Weeks until the next actual flagged week (0 = flagged this week);
  /// absent when no later service exists in the panel.
  std::optional<std::int64_t> weeks_until_next_actual_service;
};

struct PolicyTrace {
  PolicyKind kind = PolicyKind::HighestRisk;
  std::vector<PolicyEntry> entries;
};

/// One proactive repair per week over the test panel. The chosen vehicle's
/// weeks_since_last_visit is reset forward from the repair, which changes
/// later scores but never the actual-service bookkeeping.
PolicyTrace simulate_policy(const RiskModel& model, const Panel& test_panel, const PolicySpec& policy);

struct TraceHistograms {
  std::map<std::int64_t, std::size_t> since_last;
  std::map<std::int64_t, std::size_t> until_next;
  std::size_t censored = 0;
};

TraceHistograms trace_histograms(const PolicyTrace& trace);

struct TraceSummary {
  std::size_t entries = 0;
  std::size_t censored = 0;
  double mean_weeks_since_last = 0.0;
  double mean_weeks_until_next = 0.0;  // over uncensored entries
};

TraceSummary summarize(const PolicyTrace& trace);
nlohmann::json to_json(const TraceSummary& s);

void write_trace_csv(std::ostream& out, const std::vector<const PolicyTrace*>& traces);
/// Rows: series (since_last | until_next | censored), weeks, count.
void write_trace_histogram_csv(std::ostream& out, const TraceHistograms& h);

struct MelSpec {
  std::string vehicle_type;
  int mel = 0;
  int assigned = 0;
};

/// P(k failures), k = 0..n, for independent failures with the given
/// probabilities (Poisson-binomial, exact convolution).
std::vector<double> failure_count_distribution(std::span<const double> probs);

/// Probability that fewer than spec.mel vehicles stay operational.
double mel_risk(std::span<const double> per_vehicle_breakdown_prob, const MelSpec& spec);

struct MelTypeRisk {
  MelSpec spec;
  WeekIndex week = 0;
  std::vector<std::string> assets;
  std::vector<double> probs;
  double risk = 0.0;
};

/// Scores every vehicle active in `week` and evaluates each spec on the
/// vehicles of its type. A spec with assigned == 0 takes the active count.
std::vector<MelTypeRisk> mel_risk_by_type(const RiskModel& model, const Panel& panel, WeekIndex week,
                                          const std::vector<MelSpec>& specs);
nlohmann::json to_json(const std::vector<MelTypeRisk>& risks);

}  // namespace fleetrisk
