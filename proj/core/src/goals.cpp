#include "reefsurvey/goals.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <cstdio>

namespace reef {

const char* to_string(GoalStatus s) {
  switch (s) {
    case GoalStatus::Pending: return "pending";
    case GoalStatus::Current: return "current";
    case GoalStatus::Achieved: return "achieved";
    case GoalStatus::Abandoned: return "abandoned";
  }
  return "?";
}

const char* to_string(Qualitative q) { return q == Qualitative::Sufficient ? "sufficient" : "insufficient"; }

const char* to_string(AnomalyCause c) {
  switch (c) {
    case AnomalyCause::Remora: return "remora";
    case AnomalyCause::Blockade: return "blockade";
    case AnomalyCause::Flow: return "flow";
    case AnomalyCause::Unknown: return "unknown";
  }
  return "?";
}

namespace {

std::string atom_key(const std::string& predicate, const std::vector<std::string>& args) {
  std::string s = predicate + "(";
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) s += ",";
    s += args[i];
  }
  return s + ")";
}

}  // namespace

std::string Goal::key() const { return atom_key(predicate, args); }
std::string Fact::key() const { return atom_key(predicate, args); }

Goal make_goal(std::string predicate, std::vector<std::string> args) {
  return Goal{std::move(predicate), std::move(args), GoalStatus::Pending};
}

void ClassHierarchy::add_class(const std::string& name) { classes_.insert(name); }

void ClassHierarchy::add_predicate(const std::string& predicate, int arity, const std::string& parent_class) {
  if (!classes_.contains(parent_class)) throw std::invalid_argument("unknown goal class: " + parent_class);
  if (predicates_.contains(predicate)) throw std::invalid_argument("predicate already declared: " + predicate);
  if (arity < 0) throw std::invalid_argument("negative arity");
  predicates_[predicate] = {arity, parent_class};
}

int ClassHierarchy::arity(const std::string& predicate) const {
  const auto it = predicates_.find(predicate);
  if (it == predicates_.end()) throw std::out_of_range("undeclared predicate: " + predicate);
  return it->second.first;
}

std::vector<std::string> ClassHierarchy::path_to_root(const std::string& predicate) const {
  const auto it = predicates_.find(predicate);
  if (it == predicates_.end()) return {};
  return {predicate, it->second.second, superclass_};
}

ClassHierarchy ClassHierarchy::marine_survey() {
  ClassHierarchy cl;
  cl.add_class("survey-goal");
  cl.add_class("report-goal");
  cl.add_class("anomaly-goal");
  cl.add_predicate("surveyed", 1, "survey-goal");
  cl.add_predicate("reported", 1, "report-goal");
  cl.add_predicate("removed", 2, "anomaly-goal");
  cl.add_predicate("inspected", 1, "anomaly-goal");
  cl.add_predicate("relocalized", 2, "anomaly-goal");
  cl.add_predicate("safe", 2, "anomaly-goal");
  return cl;
}

void ObjectRegistry::add(const std::string& id, const std::string& type) { objects_[id] = type; }

std::string ObjectRegistry::type_of(const std::string& id) const {
  const auto it = objects_.find(id);
  if (it == objects_.end()) throw std::out_of_range("unregistered object: " + id);
  return it->second;
}

ObjectRegistry ObjectRegistry::for_region(const SurveyRegion& region) {
  ObjectRegistry r;
  r.add("agent", "agent");
  r.add("region", "region");
  for (const auto& c : region.cells()) r.add(cell_id(c), "cell");
  for (const auto& e : region.interior_edges()) r.add(edge_id(e), "edge");
  return r;
}

std::string cell_id(CellIndex c) { return to_string(c); }

std::optional<CellIndex> parse_cell_id(const std::string& id) {
  int r = 0;
  int c = 0;
  char tail = 0;
  if (std::sscanf(id.c_str(), "c_%d_%d%c", &r, &c, &tail) != 2) return std::nullopt;
  return CellIndex{r, c};
}

std::string edge_id(const CellEdge& e) { return to_string(e); }

std::optional<CellEdge> parse_edge_id(const std::string& id) {
  int r1 = 0, c1 = 0, r2 = 0, c2 = 0;
  char tail = 0;
  if (std::sscanf(id.c_str(), "e_%d_%d__%d_%d%c", &r1, &c1, &r2, &c2, &tail) != 4) return std::nullopt;
  if (std::abs(r1 - r2) + std::abs(c1 - c2) != 1) return std::nullopt;
  return CellEdge::between({r1, c1}, {r2, c2});
}

Goal& GoalAgenda::add(Goal g) {
  if (contains(g.key())) throw std::invalid_argument("duplicate goal: " + g.key());
  goals_.push_back(std::move(g));
  return goals_.back();
}

Goal& GoalAgenda::add_front(Goal g) {
  if (contains(g.key())) throw std::invalid_argument("duplicate goal: " + g.key());
  goals_.insert(goals_.begin(), std::move(g));
  return goals_.front();
}

bool GoalAgenda::contains(const std::string& key) const { return find(key) != nullptr; }

Goal* GoalAgenda::find(const std::string& key) {
  for (auto& g : goals_)
    if (g.key() == key) return &g;
  return nullptr;
}

const Goal* GoalAgenda::find(const std::string& key) const {
  for (const auto& g : goals_)
    if (g.key() == key) return &g;
  return nullptr;
}

std::vector<const Goal*> GoalAgenda::with_status(GoalStatus s) const {
  std::vector<const Goal*> out;
  for (const auto& g : goals_)
    if (g.status == s) out.push_back(&g);
  return out;
}

std::size_t GoalAgenda::count(GoalStatus s) const {
  return static_cast<std::size_t>(std::count_if(goals_.begin(), goals_.end(), [s](const Goal& g) { return g.status == s; }));
}

const Goal* GoalAgenda::current() const {
  for (const auto& g : goals_)
    if (g.status == GoalStatus::Current) return &g;
  return nullptr;
}

void GoalAgenda::make_current(const std::string& key) {
  Goal* target = find(key);
  if (target == nullptr) throw std::invalid_argument("goal not on agenda: " + key);
  if (target->status == GoalStatus::Achieved || target->status == GoalStatus::Abandoned)
    throw std::logic_error("cannot make a terminal goal current: " + key);
  for (auto& g : goals_)
    if (g.status == GoalStatus::Current) g.status = GoalStatus::Pending;
  target->status = GoalStatus::Current;
}

void GoalAgenda::set_status(const std::string& key, GoalStatus s) {
  Goal* g = find(key);
  if (g == nullptr) throw std::invalid_argument("goal not on agenda: " + key);
  g->status = s;
}

void GoalAgenda::abandon_open() {
  for (auto& g : goals_)
    if (g.status == GoalStatus::Pending || g.status == GoalStatus::Current) g.status = GoalStatus::Abandoned;
}

std::vector<CellIndex> shortest_cell_path(const SurveyRegion& region, const std::set<CellEdge>& blocked,
                                          CellIndex from, CellIndex to) {
  if (!region.in_bounds(from) || !region.in_bounds(to)) return {};
  if (from == to) return {from};
  const int n = region.cell_count();
  std::vector<int> parent(static_cast<std::size_t>(n), -1);
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::deque<CellIndex> q{from};
  seen[static_cast<std::size_t>(region.linear_index(from))] = true;
  while (!q.empty()) {
    const CellIndex c = q.front();
    q.pop_front();
    for (Direction d : kDirections) {
      const auto nb = region.neighbor(c, d);
      if (!nb || blocked.contains(CellEdge::between(c, *nb))) continue;
      const auto i = static_cast<std::size_t>(region.linear_index(*nb));
      if (seen[i]) continue;
      seen[i] = true;
      parent[i] = region.linear_index(c);
      if (*nb == to) {
        std::vector<CellIndex> path{to};
        int p = parent[i];
        while (p != -1) {
          path.push_back(region.from_linear(p));
          p = parent[static_cast<std::size_t>(p)];
        }
        std::reverse(path.begin(), path.end());
        return path;
      }
      q.push_back(*nb);
    }
  }
  return {};
}

std::optional<CellIndex> goal_location(const Goal& g) {
  if ((g.predicate == "surveyed" || g.predicate == "reported") && !g.args.empty()) return parse_cell_id(g.args[0]);
  if (g.predicate == "inspected" && !g.args.empty()) {
    if (const auto e = parse_edge_id(g.args[0])) return e->a;
  }
  return std::nullopt;
}

double nominal_duration(const Goal& g, const NominalDurations& d) {
  if (g.predicate == "surveyed") return !g.args.empty() && g.args[0] == "region" ? d.region : d.survey;
  if (g.predicate == "reported") return d.report;
  if (g.predicate == "removed") return d.glide;
  if (g.predicate == "inspected") return d.inspect;
  if (g.predicate == "relocalized") return d.localize;
  if (g.predicate == "safe") return d.safe;
  return 0.0;
}

Qualitative qualify(double time_needed, const ResourceContext& ctx) {
  const double budget = static_cast<double>(ctx.deadline - ctx.clock) * ctx.safety_factor;
  return time_needed <= budget ? Qualitative::Sufficient : Qualitative::Insufficient;
}

namespace {

std::vector<int> bfs_hops(const SurveyRegion& region, const std::set<CellEdge>& blocked, CellIndex from) {
  std::vector<int> dist(static_cast<std::size_t>(region.cell_count()), -1);
  std::deque<CellIndex> q{from};
  dist[static_cast<std::size_t>(region.linear_index(from))] = 0;
  while (!q.empty()) {
    const CellIndex c = q.front();
    q.pop_front();
    const int dc = dist[static_cast<std::size_t>(region.linear_index(c))];
    for (Direction d : kDirections) {
      const auto nb = region.neighbor(c, d);
      if (!nb || blocked.contains(CellEdge::between(c, *nb))) continue;
      auto& dn = dist[static_cast<std::size_t>(region.linear_index(*nb))];
      if (dn >= 0) continue;
      dn = dc + 1;
      q.push_back(*nb);
    }
  }
  return dist;
}

}  // namespace

ResourceEstimate resources_for_goals(const ResourceContext& ctx, const std::vector<const Goal*>& goals) {
  ResourceEstimate est;
  est.budget = static_cast<double>(ctx.deadline - ctx.clock) * ctx.safety_factor;
  const double travel_per_hop = ctx.speed > 0.0 ? ctx.region.cell_edge() / ctx.speed : std::numeric_limits<double>::infinity();
  std::vector<std::pair<CellIndex, const Goal*>> targets;
  const auto from_here = bfs_hops(ctx.region, ctx.known_blocked, ctx.location);
  for (const Goal* g : goals) {
    const auto loc = goal_location(*g);
    if (loc && ctx.region.in_bounds(*loc)) {
      if (from_here[static_cast<std::size_t>(ctx.region.linear_index(*loc))] < 0) {
        est.infeasible.push_back(g->key());
        continue;
      }
      targets.emplace_back(*loc, g);
    }
    est.time_needed += nominal_duration(*g, ctx.durations);
  }
  CellIndex at = ctx.location;
  std::vector<bool> done(targets.size(), false);
  for (std::size_t step = 0; step < targets.size(); ++step) {
    const auto dist = bfs_hops(ctx.region, ctx.known_blocked, at);
    std::size_t best = targets.size();
    for (std::size_t i = 0; i < targets.size(); ++i) {
      if (done[i]) continue;
      const int d = dist[static_cast<std::size_t>(ctx.region.linear_index(targets[i].first))];
      if (best == targets.size() ||
          d < dist[static_cast<std::size_t>(ctx.region.linear_index(targets[best].first))])
        best = i;
    }
    done[best] = true;
    const int hops = dist[static_cast<std::size_t>(ctx.region.linear_index(targets[best].first))];
    if (hops > 0) est.time_needed += hops * travel_per_hop;
    at = targets[best].first;
  }
  est.qualitative = est.time_needed <= est.budget ? Qualitative::Sufficient : Qualitative::Insufficient;
  return est;
}

ResourceEstimate resources_for_goals(const ResourceContext& ctx, const GoalAgenda& agenda) {
  std::vector<const Goal*> open;
  for (const auto& g : agenda.goals())
    if (g.status == GoalStatus::Pending || g.status == GoalStatus::Current) open.push_back(&g);
  return resources_for_goals(ctx, open);
}

SelectionOutcome select_goal(const GoalAgenda& agenda, const ClassHierarchy& cl, const ObjectRegistry& objs,
                             const ResourceContext& ctx, const SelectionRule& rule, Cycle now) {
  SelectionOutcome out;
  out.record.time = now;
  out.record.head = "selection";
  for (const auto& g : agenda.goals()) {
    if (!cl.contains(g.predicate)) throw MalformedGoal("goal predicate not in class hierarchy: " + g.key());
    if (cl.arity(g.predicate) != static_cast<int>(g.args.size()))
      throw MalformedGoal("goal arity does not match its predicate: " + g.key());
  }
  out.record.preconditions.emplace_back("pre1", true);
  for (const auto& g : agenda.goals())
    for (const auto& a : g.args)
      if (!objs.contains(a)) throw MalformedGoal("goal argument is not a registered object: " + a + " in " + g.key());
  out.record.preconditions.emplace_back("pre2", true);
  out.estimate = resources_for_goals(ctx, agenda);
  out.record.preconditions.emplace_back("pre3", true);
  out.record.note = std::string("resources ") + to_string(out.estimate.qualitative);
  if (agenda.count(GoalStatus::Pending) == 0) {
    out.record.note += "; agenda exhausted";
    return out;
  }
  out.goal = rule(agenda);
  if (out.goal) {
    const Goal* g = agenda.find(*out.goal);
    if (g == nullptr || g->status != GoalStatus::Pending)
      throw std::logic_error("selection rule returned a goal that is not pending: " + *out.goal);
    out.record.result = out.goal;
  }
  return out;
}

std::optional<Discrepancy> detect_discrepancy(const FactSet& observed, const FactSet& expected,
                                              double position_tolerance, MotionEvidence evidence) {
  Discrepancy d;
  for (const auto& e : expected) {
    const std::string k = e.key();
    for (const auto& o : observed) {
      if (o.key() != k) continue;
      bool violated = false;
      if (e.value && o.value) {
        violated = distance(*e.value, *o.value) > position_tolerance;
      } else {
        violated = o.holds != e.holds;
      }
      if (violated) {
        d.violated.push_back(e);
        break;
      }
    }
  }
  if (d.violated.empty()) return std::nullopt;
  d.expected = expected;
  d.observed = observed;
  d.evidence = evidence;
  return d;
}

std::pair<double, double> progress_and_lateral(Vec2 expected, Vec2 observed) {
  const double e2 = expected.squared_norm();
  if (e2 < 1e-18) return {0.0, observed.norm()};
  const double ratio = observed.dot(expected) / e2;
  const double lateral = std::abs(observed.cross(expected)) / std::sqrt(e2);
  return {ratio, lateral};
}

Explanation explain(const Discrepancy& d, const ExplainConfig& cfg) {
  const bool at_violated = std::any_of(d.violated.begin(), d.violated.end(),
                                       [](const Fact& f) { return f.predicate == "at"; });
  const auto traversed = std::find_if(d.violated.begin(), d.violated.end(),
                                      [](const Fact& f) { return f.predicate == "traversed" && f.holds; });
  const auto [ratio, lateral] = progress_and_lateral(d.evidence.expected_displacement, d.evidence.observed_displacement);
  if (at_violated && d.evidence.expected_displacement.norm() > cfg.position_tolerance &&
      std::abs(ratio - cfg.remora_ratio) <= cfg.remora_ratio_tolerance && lateral <= cfg.position_tolerance) {
    return {AnomalyCause::Remora, "speed-shortfall", "removed", std::nullopt};
  }
  if (traversed != d.violated.end()) {
    std::optional<CellEdge> e = d.evidence.blocked_edge;
    if (!e && !traversed->args.empty()) e = parse_edge_id(traversed->args[0]);
    return {AnomalyCause::Blockade, "rejected-crossing", "inspected", e};
  }
  if (at_violated && lateral > cfg.position_tolerance) {
    return {AnomalyCause::Flow, "lateral-displacement", "relocalized", std::nullopt};
  }
  return {AnomalyCause::Unknown, "unmatched", "safe", std::nullopt};
}

namespace {

double travel_to(const ResourceContext& ctx, const Goal& g) {
  const auto loc = goal_location(g);
  if (!loc) return 0.0;
  const auto path = shortest_cell_path(ctx.region, ctx.known_blocked, ctx.location, *loc);
  if (path.empty()) return std::numeric_limits<double>::infinity();
  return static_cast<double>(path.size() - 1) * ctx.region.cell_edge() / ctx.speed;
}

}  // namespace

FormulationOutcome formulate_goal(const GoalAgenda& agenda, const std::optional<Explanation>& explanation,
                                  const ResourceContext& ctx, ObjectRegistry& objs, int instance, Cycle now) {
  FormulationOutcome out;
  out.record.time = now;
  out.record.head = "formulation";
  out.record.preconditions.emplace_back("pre1", explanation.has_value());
  if (!explanation) {
    out.record.note = "no explanation";
    return out;
  }
  Goal g;
  std::string new_object;
  std::string new_type;
  switch (explanation->cause) {
    case AnomalyCause::Remora:
      new_object = "remora_" + std::to_string(instance);
      new_type = "remora";
      g = make_goal("removed", {new_object, "agent"});
      break;
    case AnomalyCause::Blockade:
      if (!explanation->edge) {
        out.record.note = "blockade explanation without an edge";
        return out;
      }
      g = make_goal("inspected", {edge_id(*explanation->edge)});
      break;
    case AnomalyCause::Flow:
      new_object = "flow_" + std::to_string(instance);
      new_type = "flow";
      g = make_goal("relocalized", {"agent", new_object});
      break;
    case AnomalyCause::Unknown:
      new_object = "event_" + std::to_string(instance);
      new_type = "event";
      g = make_goal("safe", {"agent", new_object});
      break;
  }
  if (agenda.contains(g.key())) {
    out.record.preconditions.emplace_back("pre2", false);
    out.record.note = "already on agenda: " + g.key();
    return out;
  }
  const double need = travel_to(ctx, g) + nominal_duration(g, ctx.durations);
  const bool enough = qualify(need, ctx) == Qualitative::Sufficient;
  out.record.preconditions.emplace_back("pre2", enough);
  if (!enough) {
    out.record.note = "formulation declined: insufficient resources for " + g.key();
    return out;
  }
  if (!new_object.empty()) objs.add(new_object, new_type);
  out.record.result = g.key();
  out.goal = std::move(g);
  return out;
}

FormulationOutcome formulate_report(const GoalAgenda& agenda, CellIndex cell, int unique_count, int threshold,
                                    const ResourceContext& ctx, Cycle now) {
  FormulationOutcome out;
  out.record.time = now;
  out.record.head = "formulation";
  const bool confident = threshold > 0 && unique_count >= threshold;
  out.record.preconditions.emplace_back("pre1", confident);
  if (!confident) return out;
  Goal g = make_goal("reported", {cell_id(cell)});
  if (agenda.contains(g.key())) {
    out.record.preconditions.emplace_back("pre2", false);
    out.record.note = "already on agenda: " + g.key();
    return out;
  }
  const bool enough = qualify(nominal_duration(g, ctx.durations), ctx) == Qualitative::Sufficient;
  out.record.preconditions.emplace_back("pre2", enough);
  if (!enough) {
    out.record.note = "formulation declined: insufficient resources for " + g.key();
    return out;
  }
  out.record.result = g.key();
  out.goal = std::move(g);
  return out;
}

}  // namespace reef
