#include "fleetrisk/policy.hpp"

#include <algorithm>
#include <cmath>

#include "fleetrisk/csv.hpp"
#include "fleetrisk/features.hpp"
#include "fleetrisk/rng.hpp"

namespace fleetrisk {

using nlohmann::json;

namespace {

std::vector<double> score_rows(const RiskModel& model, std::vector<PanelRow> rows) {
  Panel p;
  p.rows = std::move(rows);
  return predict_proba(model, encode(p, layout_of(model)));
}

const char* policy_name(PolicyKind k) { return k == PolicyKind::HighestRisk ? "highest_risk" : "random"; }

}  // namespace

PolicyTrace simulate_policy(const RiskModel& model, const Panel& test_panel, const PolicySpec& policy) {
  if (test_panel.empty()) throw Error(ErrorCode::EmptyTestRange, "test panel has no rows");
  const auto& rows = test_panel.rows;

  std::map<WeekIndex, std::vector<std::size_t>> by_week;
  std::map<std::string, std::vector<std::size_t>> by_asset;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    by_week[rows[i].week].push_back(i);
    by_asset[rows[i].asset_id].push_back(i);
  }
  for (auto& [w, idx] : by_week) {
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return rows[a].asset_id < rows[b].asset_id; });
  }

  std::vector<std::int64_t> gap(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) gap[i] = rows[i].weeks_since_last_visit;

  PolicyTrace trace;
  trace.kind = policy.kind;
  Rng rng(policy.seed);
  std::vector<PanelRow> active;
  for (const auto& [week, idx] : by_week) {
    active.clear();
    for (auto i : idx) {
      active.push_back(rows[i]);
      active.back().weeks_since_last_visit = gap[i];
    }
    const auto scores = score_rows(model, active);
    std::size_t pick = 0;
    if (policy.kind == PolicyKind::HighestRisk) {
      for (std::size_t k = 1; k < scores.size(); ++k) {
        if (scores[k] > scores[pick]) pick = k;
      }
    } else {
      pick = static_cast<std::size_t>(rng.index(scores.size()));
    }
    const std::size_t row = idx[pick];
    const auto& chosen = rows[row];

    PolicyEntry e;
    e.week = week;
    e.chosen_asset = chosen.asset_id;
    e.score = scores[pick];
    e.weeks_since_last_actual_service = chosen.weeks_since_last_visit + 1;
    for (auto j : by_asset[chosen.asset_id]) {
      if (rows[j].week >= week && rows[j].repair_flag) {
        e.weeks_until_next_actual_service = rows[j].week - week;
        break;
      }
    }
    trace.entries.push_back(std::move(e));

    for (auto j : by_asset[chosen.asset_id]) {
      if (rows[j].week > week) gap[j] = std::min(gap[j], rows[j].week - week - 1);
    }
  }
  return trace;
}

TraceHistograms trace_histograms(const PolicyTrace& trace) {
  TraceHistograms h;
  for (const auto& e : trace.entries) {
    ++h.since_last[e.weeks_since_last_actual_service];
    if (e.weeks_until_next_actual_service) {
      ++h.until_next[*e.weeks_until_next_actual_service];
    } else {
      ++h.censored;
    }
  }
  return h;
}

TraceSummary summarize(const PolicyTrace& trace) {
  TraceSummary s;
  s.entries = trace.entries.size();
  double since = 0.0, until = 0.0;
  for (const auto& e : trace.entries) {
    since += static_cast<double>(e.weeks_since_last_actual_service);
    if (e.weeks_until_next_actual_service) {
      until += static_cast<double>(*e.weeks_until_next_actual_service);
    } else {
      ++s.censored;
    }
  }
  if (s.entries) s.mean_weeks_since_last = since / static_cast<double>(s.entries);
  if (s.entries > s.censored) s.mean_weeks_until_next = until / static_cast<double>(s.entries - s.censored);
  return s;
}

json to_json(const TraceSummary& s) {
  return {{"entries", s.entries},
          {"censored", s.censored},
          {"mean_weeks_since_last", s.mean_weeks_since_last},
          {"mean_weeks_until_next", s.mean_weeks_until_next}};
}

void write_trace_csv(std::ostream& out, const std::vector<const PolicyTrace*>& traces) {
  csv::write_row(out, {"policy", "week", "chosen_asset", "score", "weeks_since_last_actual_service",
                       "weeks_until_next_actual_service"});
  for (const auto* t : traces) {
    for (const auto& e : t->entries) {
      csv::write_row(out, {policy_name(t->kind), std::to_string(e.week), e.chosen_asset, format_double(e.score),
                           std::to_string(e.weeks_since_last_actual_service),
                           e.weeks_until_next_actual_service ? std::to_string(*e.weeks_until_next_actual_service)
                                                             : std::string()});
    }
  }
}

void write_trace_histogram_csv(std::ostream& out, const TraceHistograms& h) {
  csv::write_row(out, {"series", "weeks", "count"});
  for (const auto& [w, c] : h.since_last) csv::write_row(out, {"since_last", std::to_string(w), std::to_string(c)});
  for (const auto& [w, c] : h.until_next) csv::write_row(out, {"until_next", std::to_string(w), std::to_string(c)});
  csv::write_row(out, {"censored", "", std::to_string(h.censored)});
}

std::vector<double> failure_count_distribution(std::span<const double> probs) {
  std::vector<double> dist(probs.size() + 1, 0.0);
  dist[0] = 1.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = probs[i];
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidConfig, "probability outside [0, 1]");
    for (std::size_t k = i + 1; k > 0; --k) dist[k] = dist[k] * (1.0 - p) + dist[k - 1] * p;
    dist[0] *= 1.0 - p;
  }
  return dist;
}

double mel_risk(std::span<const double> probs, const MelSpec& spec) {
  if (spec.mel < 0 || spec.mel > spec.assigned) {
    throw Error(ErrorCode::InvalidConfig, "MEL for '" + spec.vehicle_type + "' must satisfy 0 <= mel <= assigned");
  }
  if (probs.size() != static_cast<std::size_t>(spec.assigned)) {
    throw Error(ErrorCode::LengthMismatch, "'" + spec.vehicle_type + "': " + std::to_string(probs.size()) +
                                               " probabilities for " + std::to_string(spec.assigned) + " assigned vehicles");
  }
  const auto dist = failure_count_distribution(probs);
  const auto spare = static_cast<std::size_t>(spec.assigned - spec.mel);
  double tail = 0.0;
  for (std::size_t k = spare + 1; k < dist.size(); ++k) tail += dist[k];
  return tail;
}

std::vector<MelTypeRisk> mel_risk_by_type(const RiskModel& model, const Panel& panel, WeekIndex week,
                                          const std::vector<MelSpec>& specs) {
  std::vector<PanelRow> active;
  for (const auto& r : panel.rows) {
    if (r.week == week) active.push_back(r);
  }
  if (active.empty()) throw Error(ErrorCode::EmptyTestRange, "no vehicles active in week " + std::to_string(week));
  const auto scores = score_rows(model, active);

  std::vector<MelTypeRisk> out;
  for (const auto& spec : specs) {
    MelTypeRisk r;
    r.spec = spec;
    r.week = week;
    for (std::size_t i = 0; i < active.size(); ++i) {
      if (active[i].vehicle_type != spec.vehicle_type) continue;
      r.assets.push_back(active[i].asset_id);
      r.probs.push_back(scores[i]);
    }
    if (r.spec.assigned == 0) r.spec.assigned = static_cast<int>(r.probs.size());
    r.risk = mel_risk(r.probs, r.spec);
    out.push_back(std::move(r));
  }
  return out;
}

json to_json(const std::vector<MelTypeRisk>& risks) {
  json out = json::array();
  for (const auto& r : risks) {
    json vehicles = json::array();
    for (std::size_t i = 0; i < r.assets.size(); ++i) {
      vehicles.push_back({{"asset_id", r.assets[i]}, {"breakdown_prob", r.probs[i]}});
    }
    out.push_back({{"vehicle_type", r.spec.vehicle_type},
                   {"week", r.week},
                   {"mel", r.spec.mel},
                   {"assigned", r.spec.assigned},
                   {"risk_below_mel", r.risk},
                   {"vehicles", vehicles}});
  }
  return out;
}

}  // namespace fleetrisk
