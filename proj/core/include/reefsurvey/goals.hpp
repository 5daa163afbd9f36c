#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "reefsurvey/geometry.hpp"
#include "reefsurvey/sim.hpp"

namespace reef {

enum class GoalStatus { Pending, Current, Achieved, Abandoned };
const char* to_string(GoalStatus s);

struct Goal {
  std::string predicate;
  std::vector<std::string> args;
  GoalStatus status = GoalStatus::Pending;

  /// "predicate(arg1,arg2)"; identifies the goal within an agenda.
  std::string key() const;
  bool operator==(const Goal& o) const { return predicate == o.predicate && args == o.args; }
};

Goal make_goal(std::string predicate, std::vector<std::string> args);

/// Predicates grouped under category classes, all under one superclass.
class ClassHierarchy {
 public:
  explicit ClassHierarchy(std::string superclass = "goal") : superclass_(std::move(superclass)) {}
  void add_class(const std::string& name);
  /// Throws std::invalid_argument if the class is unknown or the predicate exists.
  void add_predicate(const std::string& predicate, int arity, const std::string& parent_class);
  bool contains(const std::string& predicate) const { return predicates_.contains(predicate); }
  int arity(const std::string& predicate) const;
  /// Predicate, its class, the superclass.
  std::vector<std::string> path_to_root(const std::string& predicate) const;
  const std::string& superclass() const { return superclass_; }

  /// surveyed / reported (survey and report classes) and the anomaly-response
  /// predicates removed, inspected, relocalized, safe.
  static ClassHierarchy marine_survey();

 private:
  std::string superclass_;
  std::set<std::string> classes_;
  std::map<std::string, std::pair<int, std::string>> predicates_;
};

/// Domain objects (objs) with a type tag.
class ObjectRegistry {
 public:
  void add(const std::string& id, const std::string& type);
  bool contains(const std::string& id) const { return objects_.contains(id); }
  std::string type_of(const std::string& id) const;
  std::size_t size() const { return objects_.size(); }

  /// Cells, interior edges, the region and the agent.
  static ObjectRegistry for_region(const SurveyRegion& region);

 private:
  std::map<std::string, std::string> objects_;
};

std::string cell_id(CellIndex c);
std::optional<CellIndex> parse_cell_id(const std::string& id);
std::string edge_id(const CellEdge& e);
std::optional<CellEdge> parse_edge_id(const std::string& id);

class MalformedGoal : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Ordered set of goals with lifecycle status.
class GoalAgenda {
 public:
  /// Appends; throws std::invalid_argument on a duplicate key.
  Goal& add(Goal g);
  /// Inserts ahead of every other goal.
  Goal& add_front(Goal g);
  bool contains(const std::string& key) const;
  Goal* find(const std::string& key);
  const Goal* find(const std::string& key) const;
  const std::vector<Goal>& goals() const { return goals_; }
  std::vector<const Goal*> with_status(GoalStatus s) const;
  std::size_t count(GoalStatus s) const;
  const Goal* current() const;
  /// Marks `key` current, demoting any other current goal to pending.
  void make_current(const std::string& key);
  void set_status(const std::string& key, GoalStatus s);
  /// Every non-terminal goal becomes abandoned.
  void abandon_open();
  std::size_t size() const { return goals_.size(); }
  bool empty() const { return goals_.empty(); }

 private:
  std::vector<Goal> goals_;
};

enum class Qualitative { Sufficient, Insufficient };
const char* to_string(Qualitative q);

struct NominalDurations {
  double survey = 16.0;   ///< one cell sweep (SS) or ergodic cell budget (ESCSS)
  double region = 0.0;    ///< whole-region ES runs until the deadline
  double glide = 8.0;
  double inspect = 10.0;
  double report = 3.0;    ///< surface + report
  double safe = 10.0;
  double localize = 0.0;
};

/// What the resource estimator knows about the agent and the world.
struct ResourceContext {
  SurveyRegion region;
  std::set<CellEdge> known_blocked;
  CellIndex location;
  double speed = 1.0;  ///< believed effective speed
  Cycle clock = 0;
  Cycle deadline = 600;
  double safety_factor = 0.9;
  NominalDurations durations;
};

struct ResourceEstimate {
  double time_needed = 0.0;
  double budget = 0.0;  ///< (deadline - clock) * safety_factor
  Qualitative qualitative = Qualitative::Sufficient;
  std::vector<std::string> infeasible;
};

/// Shortest 4-neighbour path avoiding `blocked`; empty when unreachable, {from} when equal.
std::vector<CellIndex> shortest_cell_path(const SurveyRegion& region, const std::set<CellEdge>& blocked,
                                          CellIndex from, CellIndex to);

/// Cell a goal must be pursued in, if it has one.
std::optional<CellIndex> goal_location(const Goal& g);
double nominal_duration(const Goal& g, const NominalDurations& d);

/// Greedy nearest-neighbour tour over the goals' cells (travel at ctx.speed)
/// plus each goal's nominal duration. Unreachable goals are listed in
/// `infeasible` and excluded.
ResourceEstimate resources_for_goals(const ResourceContext& ctx, const std::vector<const Goal*>& goals);
ResourceEstimate resources_for_goals(const ResourceContext& ctx, const GoalAgenda& agenda);
Qualitative qualify(double time_needed, const ResourceContext& ctx);

/// One entry of the goal-operation audit log.
struct GoalOperationRecord {
  Cycle time = 0;
  std::string head;  ///< "selection" or "formulation"
  std::vector<std::pair<std::string, bool>> preconditions;
  std::optional<std::string> result;
  std::string note;
};

using SelectionRule = std::function<std::optional<std::string>(const GoalAgenda&)>;

struct SelectionOutcome {
  std::optional<std::string> goal;  ///< nullopt: agenda exhausted or rule declined
  ResourceEstimate estimate;
  GoalOperationRecord record;
};

/// Goal selection: validates every goal (pre1, pre2), evaluates resources
/// (pre3) and applies `rule`, which must return a pending goal's key. Throws
/// MalformedGoal naming the first offending predicate or object. The chosen
/// goal is not made current here.
SelectionOutcome select_goal(const GoalAgenda& agenda, const ClassHierarchy& cl, const ObjectRegistry& objs,
                             const ResourceContext& ctx, const SelectionRule& rule, Cycle now = 0);

/// Ground atom, optionally carrying a position value; holds=false records an
/// observed negation.
struct Fact {
  std::string predicate;
  std::vector<std::string> args;
  bool holds = true;
  std::optional<Vec2> value;

  std::string key() const;
};

using FactSet = std::vector<Fact>;

/// Motion evidence attached to a discrepancy.
struct MotionEvidence {
  Vec2 expected_displacement;
  Vec2 observed_displacement;
  std::optional<CellEdge> blocked_edge;
  double speed_factor = 1.0;  ///< believed fraction of base speed when the evidence was gathered
};

struct Discrepancy {
  FactSet expected;
  FactSet observed;
  FactSet violated;
  MotionEvidence evidence;
};

/// Violated = expected facts contradicted by an observed fact with the same
/// key: a negated symbolic fact, or a position farther than tolerance.
std::optional<Discrepancy> detect_discrepancy(const FactSet& observed, const FactSet& expected,
                                              double position_tolerance = 0.5, MotionEvidence evidence = {});

enum class AnomalyCause { Remora, Blockade, Flow, Unknown };
const char* to_string(AnomalyCause c);

struct Explanation {
  AnomalyCause cause = AnomalyCause::Unknown;
  std::string pattern;          ///< matched pattern id
  std::string response;         ///< response goal predicate
  std::optional<CellEdge> edge; ///< blockade edge
};

struct ExplainConfig {
  double position_tolerance = 0.5;
  double remora_ratio = 0.5;
  double remora_ratio_tolerance = 0.1;
};

/// Fixed-order pattern table: speed shortfall, rejected crossing, lateral
/// displacement, then Unknown.
Explanation explain(const Discrepancy& d, const ExplainConfig& cfg = {});

/// Progress along the expected displacement as a fraction of it, and the
/// perpendicular offset.
std::pair<double, double> progress_and_lateral(Vec2 expected, Vec2 observed);

struct FormulationOutcome {
  std::optional<Goal> goal;
  GoalOperationRecord record;
};

/// Goal formulation from an explained discrepancy. `instance` names the new
/// anomaly object (registered on success). Declines when the new goal does not
/// fit the remaining budget.
FormulationOutcome formulate_goal(const GoalAgenda& agenda, const std::optional<Explanation>& explanation,
                                  const ResourceContext& ctx, ObjectRegistry& objs, int instance, Cycle now = 0);

/// Opportunity formulation: reported(cell) once a surveyed count reaches the threshold.
FormulationOutcome formulate_report(const GoalAgenda& agenda, CellIndex cell, int unique_count, int threshold,
                                    const ResourceContext& ctx, Cycle now = 0);

}  // namespace reef
