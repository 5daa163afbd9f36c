#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "reefsurvey/ergodic.hpp"
#include "reefsurvey/goals.hpp"
#include "reefsurvey/search.hpp"
#include "reefsurvey/sim.hpp"

namespace reef {

/// Ground STRIPS action. `duration` is the planning estimate in cycles; the
/// executed duration is fixed when the action is dispatched.
struct Action {
  std::string name;
  std::vector<std::string> params;
  std::set<std::string> pre;
  std::set<std::string> add;
  std::set<std::string> del;
  double duration = 0.0;

  std::string key() const;
};

using Plan = std::vector<Action>;
using FactAtoms = std::set<std::string>;

std::string atom(const std::string& predicate, const std::vector<std::string>& args);

struct PlannerContext {
  SurveyRegion region;
  std::set<CellEdge> known_blocked;
  double speed = 1.0;
  Strategy survey_strategy = Strategy::SS;
  NominalDurations durations;
};

/// Belief atoms for planning: at-cell, open(a,b) for every known-open
/// adjacent pair, attached(remora) for believed attachments, plus `extra`.
FactAtoms planning_state(const PlannerContext& ctx, CellIndex at, const std::set<std::string>& attached,
                         const FactAtoms& extra = {});

/// Breadth-first forward search over the fixed action vocabulary
/// {move-cell, survey-cell, survey-region, glide-backward, inspect-edge,
/// surface, report-cell, enter-safe-mode, localize}. Returns the shortest
/// plan, or an empty plan when the goal already holds or is unreachable.
Plan plan(const PlannerContext& ctx, const FactAtoms& state, const Goal& goal);

/// True when every action's preconditions hold in sequence from `state`.
bool applicable(const FactAtoms& state, const Action& a);
bool plan_valid(const FactAtoms& state, const Plan& p);
FactAtoms apply(const FactAtoms& state, const Action& a);

enum class AgentKind { SS, ES, ESCSS, AIGO };
const char* to_string(AgentKind k);
AgentKind agent_kind_from_string(const std::string& s);

enum class GoalOps { SelectionOnly, SelectionFormulation };
const char* to_string(GoalOps g);

enum class Arbitration { FormulateFirst, SelectFirst, ASGO };
const char* to_string(Arbitration a);
Arbitration arbitration_from_string(const std::string& s);

enum class Chosen { Formulated, Selected };
const char* to_string(Chosen c);

struct ArbitrationRecord {
  Cycle time = 0;
  std::string g_f;
  std::string g_s;
  std::vector<std::string> g_aff;
  Chosen chosen = Chosen::Selected;
  AnomalyCause cause = AnomalyCause::Unknown;
  /// Table-law check: chosen is Formulated exactly when g_s is in g_aff.
  bool lawful() const;
};

/// Which of the two candidates a policy picks. ASGO: formulated iff g_s is
/// affected. Baselines prefer their side and fall back to the other.
std::optional<Chosen> arbitrate(Arbitration policy, bool have_formulated, bool have_selected, bool selected_affected);

/// AIGO strategy rule from location and resource sufficiency; nullopt means
/// "abandon the cell goals and survey the whole region with ES".
struct AigoDecision {
  std::optional<Strategy> strategy;
  bool abandon = false;
};
AigoDecision aigo_select_strategy(const SurveyRegion& region, CellIndex location, Qualitative estimate,
                                  Strategy current = Strategy::ESCSS);

/// What the agent believes caused an anomaly, for affected-goal estimation.
struct AffectContext {
  AnomalyCause cause = AnomalyCause::Unknown;
  std::optional<CellEdge> edge;
  std::set<CellIndex> flow_cells;
  CellIndex location;
  SurveyRegion region;
  std::set<CellEdge> known_blocked_before;  ///< blocked edges known before this anomaly
};

/// Remora: every survey goal. Blockade: goals whose shortest path from the
/// agent's cell (before the blockade was known) crosses the edge. Flow: goals
/// whose target, or path beyond the current cell, enters a suspected flow
/// cell. Unknown: every open goal.
std::vector<std::string> all_goals_affected(const AffectContext& ctx, const GoalAgenda& agenda);

struct AgentConfig {
  AgentKind kind = AgentKind::SS;
  GoalOps ops = GoalOps::SelectionFormulation;
  Arbitration arbitration = Arbitration::FormulateFirst;
  int threshold = 1;                 ///< hotspot threshold on unique tags
  double position_tolerance = 0.5;
  double safety_factor = 0.9;
  NominalDurations durations;
  int escss_budget = 16;
  double sweep_margin = 0.5;
  double edge_fallback = 0.5;
  int glide_cycles = 8;
  int inspect_cycles = 10;
  int safe_cycles = 10;
  int surface_cycles = 2;
  int report_cycles = 1;
  double move_margin = 0.5;          ///< how far inside the next cell a move ends
  int flow_memory = 60;              ///< cycles a cell stays suspected after a flow discrepancy
  int ergodic_k = 8;
  int ergodic_horizon = 10;
  ControllerConfig controller{12, 12, 1e-6};
  InfoMapConfig info;
  bool keep_logs = true;
};

struct ActionLogEntry {
  Cycle start = 0;
  Cycle end = 0;
  std::string action;
  std::string goal;
  bool interrupted = false;
};

struct TrialLog {
  std::vector<SurveyRecord> surveys;
  std::vector<ArbitrationRecord> arbitrations;
  std::vector<GoalOperationRecord> operations;
  std::vector<ActionLogEntry> actions;
  std::vector<std::string> reported;     ///< cell ids, in report order
  std::vector<bool> classification;      ///< per cell, linear index
  std::vector<int> dwell;                ///< cycles spent per cell
  std::vector<double> epsilon;           ///< ES metric history (whole-region phases)
  std::map<std::string, std::string> final_status;  ///< goal key -> status
  int selections = 0;
  int formulations = 0;
  int discrepancies = 0;
  int remora_cleared = 0;
  Cycle cycles_used = 0;
  std::vector<Strategy> strategies_used;
  std::vector<Detection> detections;     ///< kept only with keep_logs
  Trajectory visits;                     ///< kept only with keep_logs
};

/// Goal-driven survey agent: runs the plan/execute/monitor loop with goal
/// selection, formulation and arbitration on one world.
class Agent {
 public:
  Agent(AgentConfig cfg, const SurveyRegion& shape, std::uint64_t seed);
  ~Agent();
  Agent(const Agent&) = delete;
  Agent& operator=(const Agent&) = delete;

  /// Runs until the deadline or until no goal remains. `schedule` holds the
  /// anomalies to inject, sorted by onset.
  TrialLog run(World& world, const std::vector<AnomalyEvent>& schedule);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace reef
