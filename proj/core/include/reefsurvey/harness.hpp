#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "reefsurvey/agent.hpp"
#include "reefsurvey/scenario.hpp"

namespace reef {

struct Confusion {
  long long tp = 0;
  long long fp = 0;
  long long tn = 0;
  long long fn = 0;

  long long total() const { return tp + fp + tn + fn; }
  Confusion& operator+=(const Confusion& o);
  bool operator==(const Confusion&) const = default;
};

struct MetricsTable {
  Confusion counts;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Rates from pooled counts; a rate with a zero denominator is 0.
MetricsTable metrics_from_counts(const Confusion& c);
/// Throws std::invalid_argument when the vectors differ in length.
Confusion confusion_of(const std::vector<bool>& truth, const std::vector<bool>& predicted);

struct AgentSpec {
  std::string label;
  AgentConfig config;
};

struct TrialResult {
  std::string scenario;
  std::string agent;
  std::string condition;
  int start_index = 0;
  Vec2 start;
  std::uint64_t seed = 0;
  std::vector<bool> classification;
  std::vector<bool> truth;
  Confusion counts;
  int arbitrations = 0;
  int arbitrations_lawful = 0;
  int formulated_chosen = 0;
  int selections = 0;
  int formulations = 0;
  int discrepancies = 0;
  int remora_cleared = 0;
  Cycle cycles_used = 0;
  std::vector<ArbitrationRecord> arbitration_log;
};

/// Pools every per-cell outcome. Throws std::invalid_argument on empty input.
MetricsTable compute_metrics(const std::vector<TrialResult>& results);

/// One trial: builds the world for (instance, experiment seed, start), runs
/// the agent with the instance threshold and scores it against ground truth.
TrialResult run_trial(const ScenarioInstance& inst, const AgentSpec& agent, const std::string& condition,
                      std::uint64_t experiment_seed, int start_index, TrialLog* log = nullptr);

struct Condition {
  std::string name;
  AnomalyConfig anomalies;
};

struct ExperimentPlan {
  std::string table;
  std::uint64_t seed = 1;
  int trials = 100;  ///< starts per scenario
  std::vector<ScenarioConfig> scenarios;
  std::vector<Condition> conditions;
  std::vector<AgentSpec> agents;
};

/// Default agent settings shared by every table.
AgentConfig default_agent_config();

/// T5: {SS, ES, ESCSS} x {selection, selection+formulation} on the three
/// multi-hotspot layouts with remora. T6: {SS, ES, ESCSS, AIGO} on the single
/// hotspot with remora. T7: AIGO under Select-1st, Formulate-1st and ASGO on
/// the single hotspot with remora+flow and remora+blockade+flow.
/// Throws ConfigError for an unknown table.
ExperimentPlan table_plan(const std::string& table, std::uint64_t seed, int trials);
Condition named_condition(const std::string& name);

struct RunOptions {
  int workers = 1;
  std::string checkpoint_path;  ///< JSONL of completed trials; empty disables
  bool keep_arbitration_log = false;
  std::function<void(std::size_t done, std::size_t total)> progress;
};

struct ResultRow {
  std::string scenario;  ///< layout name, or "pooled" across layouts
  std::string agent;
  std::string condition;
  MetricsTable metrics;
};

struct ExperimentResult {
  ExperimentPlan plan;
  std::vector<TrialResult> trials;  ///< canonical order: condition, agent, scenario, start
  std::vector<ResultRow> rows;
};

ExperimentResult run_experiment(const ExperimentPlan& plan, const RunOptions& opts = {});

/// Pooled rows per (agent, condition) plus per-scenario rows when several
/// layouts contribute. Independent of trial order.
std::vector<ResultRow> aggregate(const std::vector<TrialResult>& trials);
const ResultRow* find_row(const std::vector<ResultRow>& rows, const std::string& agent, const std::string& condition,
                          const std::string& scenario = "pooled");

// ---- serialization ----

std::string trial_to_json(const TrialResult& r);
TrialResult trial_from_json(const std::string& line);
std::string results_csv(const std::vector<ResultRow>& rows);
std::string results_json(const ExperimentResult& r);
std::string survey_log_csv(const SurveyRegion& region, const TrialLog& log);
std::string epsilon_csv(const std::vector<double>& epsilon, int window);
std::string phi_csv(const InfoMap& map);

/// Grid heatmap; values are row-major by cell row (row 0 drawn at the bottom).
std::string svg_heatmap(const std::vector<double>& values, int rows, int cols, const std::string& title);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace reef
