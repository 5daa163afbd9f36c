#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "reefsurvey/agent.hpp"

namespace reef {

const char* to_string(AgentKind k) {
  switch (k) {
    case AgentKind::SS: return "SS";
    case AgentKind::ES: return "ES";
    case AgentKind::ESCSS: return "ESCSS";
    case AgentKind::AIGO: return "AIGO";
  }
  return "?";
}

AgentKind agent_kind_from_string(const std::string& s) {
  if (s == "SS") return AgentKind::SS;
  if (s == "ES") return AgentKind::ES;
  if (s == "ESCSS") return AgentKind::ESCSS;
  if (s == "AIGO") return AgentKind::AIGO;
  throw std::invalid_argument("unknown agent kind: " + s);
}

const char* to_string(GoalOps g) {
  return g == GoalOps::SelectionOnly ? "selection" : "selection+formulation";
}

const char* to_string(Arbitration a) {
  switch (a) {
    case Arbitration::FormulateFirst: return "formulate-first";
    case Arbitration::SelectFirst: return "select-first";
    case Arbitration::ASGO: return "ASGO";
  }
  return "?";
}

Arbitration arbitration_from_string(const std::string& s) {
  if (s == "formulate-first") return Arbitration::FormulateFirst;
  if (s == "select-first") return Arbitration::SelectFirst;
  if (s == "ASGO" || s == "asgo") return Arbitration::ASGO;
  throw std::invalid_argument("unknown arbitration policy: " + s);
}

const char* to_string(Chosen c) { return c == Chosen::Formulated ? "formulated" : "selected"; }

bool ArbitrationRecord::lawful() const {
  const bool affected = std::find(g_aff.begin(), g_aff.end(), g_s) != g_aff.end();
  return (chosen == Chosen::Formulated) == affected;
}

std::optional<Chosen> arbitrate(Arbitration policy, bool have_formulated, bool have_selected, bool selected_affected) {
  if (!have_formulated && !have_selected) return std::nullopt;
  if (!have_formulated) return Chosen::Selected;
  if (!have_selected) return Chosen::Formulated;
  switch (policy) {
    case Arbitration::FormulateFirst: return Chosen::Formulated;
    case Arbitration::SelectFirst: return Chosen::Selected;
    case Arbitration::ASGO: return selected_affected ? Chosen::Formulated : Chosen::Selected;
  }
  return std::nullopt;
}

AigoDecision aigo_select_strategy(const SurveyRegion& region, CellIndex location, Qualitative estimate,
                                  Strategy current) {
  if (estimate == Qualitative::Insufficient) return {std::nullopt, true};
  if (region.is_corner(location)) return {Strategy::SS, false};
  if (region.is_center(location)) return {Strategy::ESCSS, false};
  return {current == Strategy::ES ? Strategy::ESCSS : current, false};
}

std::vector<std::string> all_goals_affected(const AffectContext& ctx, const GoalAgenda& agenda) {
  std::vector<std::string> out;
  for (const auto& g : agenda.goals()) {
    if (g.status != GoalStatus::Pending && g.status != GoalStatus::Current) continue;
    bool hit = false;
    switch (ctx.cause) {
      case AnomalyCause::Remora:
        hit = g.predicate == "surveyed";
        break;
      case AnomalyCause::Blockade: {
        const auto loc = goal_location(g);
        if (!loc || !ctx.edge) break;
        const auto path = shortest_cell_path(ctx.region, ctx.known_blocked_before, ctx.location, *loc);
        for (std::size_t i = 1; i < path.size() && !hit; ++i)
          hit = CellEdge::between(path[i - 1], path[i]) == *ctx.edge;
        break;
      }
      case AnomalyCause::Flow: {
        const auto loc = goal_location(g);
        if (!loc) break;
        hit = ctx.flow_cells.contains(*loc);
        const auto path = shortest_cell_path(ctx.region, ctx.known_blocked_before, ctx.location, *loc);
        for (std::size_t i = 1; i < path.size() && !hit; ++i) hit = ctx.flow_cells.contains(path[i]);
        break;
      }
      case AnomalyCause::Unknown:
        hit = true;
        break;
    }
    if (hit) out.push_back(g.key());
  }
  return out;
}

namespace {

enum class Exec { Done, Interrupted, Expired };

}  // namespace

struct Agent::Impl {
  AgentConfig cfg;
  SurveyRegion shape;
  std::uint64_t seed;

  World* world = nullptr;
  const std::vector<AnomalyEvent>* schedule = nullptr;
  std::size_t next_event = 0;
  TrialLog log;

  double base_speed = 1.0;
  double believed_speed = 1.0;
  std::set<CellEdge> known_blocked;
  std::set<std::string> attached;
  std::map<CellIndex, Cycle> flow_cells;
  int instance = 0;
  bool surfaced = false;

  GoalAgenda agenda;
  ClassHierarchy hierarchy = ClassHierarchy::marine_survey();
  ObjectRegistry objs;
  std::optional<StructuredSelector> selector;
  std::optional<StructuredSelector::Proposal> outstanding;
  std::optional<StructuredSelector::Proposal> candidate;
  std::vector<std::string> suspended;
  Strategy strategy = Strategy::SS;
  bool region_phase = false;

  std::map<CellIndex, SurveyTally> tallies;
  std::map<CellIndex, Cycle> first_entry;
  std::set<CellIndex> completed;
  std::set<CellIndex> reported;
  std::optional<CellCounts> counts;
  std::vector<Detection> detections;
  Trajectory visits;

  SurveyTally* active_tally = nullptr;
  std::optional<CellIndex> active_cell;
  ErgodicController* cell_ctrl = nullptr;
  std::unique_ptr<ErgodicController> region_ctrl;
  bool region_active = false;
  Cycle region_refit_at = 0;

  Vec2 anchor;
  Vec2 expected;
  Vec2 believed_pos;
  std::optional<Goal> report_due;

  Impl(AgentConfig c, const SurveyRegion& s, std::uint64_t sd) : cfg(std::move(c)), shape(s), seed(sd) {
    shape = SurveyRegion(s.width(), s.height(), s.rows(), s.cols());
  }

  bool monitoring() const { return cfg.ops == GoalOps::SelectionFormulation; }
  bool region_kind() const { return cfg.kind == AgentKind::ES || region_phase; }
  /// Navigation position: observed when monitoring, dead-reckoned otherwise.
  Vec2 pos() const { return monitoring() ? world->agent().position : believed_pos; }
  Cycle now() const { return world->clock(); }
  CellIndex here() const { return shape.cell_of(pos()); }

  void note_op(const GoalOperationRecord& r) {
    if (cfg.keep_logs) log.operations.push_back(r);
  }

  ResourceContext resource_ctx() const {
    ResourceContext ctx;
    ctx.region = shape;
    ctx.known_blocked = known_blocked;
    ctx.location = here();
    ctx.speed = believed_speed;
    ctx.clock = now();
    ctx.deadline = world->agent().deadline;
    ctx.safety_factor = cfg.safety_factor;
    ctx.durations = cfg.durations;
    return ctx;
  }

  PlannerContext planner_ctx() const {
    PlannerContext p;
    p.region = shape;
    p.known_blocked = known_blocked;
    p.speed = believed_speed;
    p.survey_strategy = strategy;
    p.durations = cfg.durations;
    return p;
  }

  FactAtoms belief_state() const {
    FactAtoms extra;
    for (CellIndex c : completed) extra.insert(atom("surveyed", {cell_id(c)}));
    for (CellIndex c : reported) extra.insert(atom("reported", {cell_id(c)}));
    if (surfaced) extra.insert(atom("surfaced", {}));
    return planning_state(planner_ctx(), here(), attached, extra);
  }

  std::set<CellIndex> suspected_flow() const {
    std::set<CellIndex> out;
    for (const auto& [c, until] : flow_cells)
      if (until > now()) out.insert(c);
    return out;
  }

  // ---- per-cycle stepping ----

  void inject_due() {
    while (next_event < schedule->size() && (*schedule)[next_event].onset <= now()) {
      const auto& ev = (*schedule)[next_event++];
      if (ev.onset == now()) world->inject(ev);
    }
  }

  void reanchor() { anchor = expected = pos(); }

  std::optional<Discrepancy> tick(Vec2 velocity) {
    inject_due();
    const MoveCommand cmd{clip_length(velocity, believed_speed)};
    const StepOutcome out = world->step(cmd);
    if (!monitoring()) believed_pos = shape.bounds().clamp(believed_pos + cmd.velocity);
    const Cycle t = now();
    const Vec2 p = pos();
    if (cmd.velocity.squared_norm() > 0.0) surfaced = false;

    detections.insert(detections.end(), out.detections.begin(), out.detections.end());
    visits.push_back({static_cast<double>(t), p});
    counts->observe(p, out.detections);
    if (active_tally) active_tally->observe(p, out.detections);
    if (cell_ctrl) cell_ctrl->record(static_cast<double>(t), p);
    if (region_active) region_ctrl->record(static_cast<double>(t), p);

    if (region_active && monitoring() && !report_due) {
      const CellIndex c = shape.cell_of(p);
      const int n = counts->unique_count(c);
      if (!completed.contains(c) && !reported.contains(c)) {
        const auto f = formulate_report(agenda, c, n, cfg.threshold, resource_ctx(), t);
        if (f.goal) {
          note_op(f.record);
          ++log.formulations;
          report_due = f.goal;
        }
      }
    }

    if (!monitoring()) return std::nullopt;
    if (!out.blocked) expected = shape.bounds().clamp(expected + cmd.velocity);
    FactSet exp_f{{"at", {"agent"}, true, expected}};
    FactSet obs_f{{"at", {"agent"}, true, p}};
    MotionEvidence ev;
    ev.expected_displacement = expected - anchor;
    ev.observed_displacement = p - anchor;
    ev.speed_factor = believed_speed / base_speed;
    if (out.blocked) {
      const std::string e = edge_id(out.blocked->edge);
      exp_f.push_back({"traversed", {e}, true, std::nullopt});
      obs_f.push_back({"traversed", {e}, false, std::nullopt});
      ev.blocked_edge = out.blocked->edge;
    }
    return detect_discrepancy(obs_f, exp_f, cfg.position_tolerance, ev);
  }

  // Returns true when the current action must stop.
  bool after_tick(const std::optional<Discrepancy>& d) {
    if (d) {
      handle_discrepancy(*d);
      return true;
    }
    if (report_due) {
      Goal g = *report_due;
      report_due.reset();
      suspend_current();
      agenda.add_front(g);
      agenda.make_current(g.key());
      return true;
    }
    return false;
  }

  Exec hold(int cycles) {
    for (int i = 0; i < cycles; ++i) {
      if (world->expired()) return Exec::Expired;
      if (after_tick(tick({0.0, 0.0}))) return Exec::Interrupted;
    }
    return Exec::Done;
  }

  Exec follow(const std::vector<Vec2>& path, int duration) {
    const double speed = believed_speed;
    for (int tau = 0; tau < duration; ++tau) {
      if (world->expired()) return Exec::Expired;
      const Vec2 ref = point_along(path, (tau + 1) * speed);
      if (after_tick(tick(ref - pos()))) return Exec::Interrupted;
    }
    return Exec::Done;
  }

  static int cycles_for(double length, double speed) {
    if (length <= 0.0) return 0;
    return static_cast<int>(std::ceil(length / speed - 1e-9));
  }

  // ---- actions ----

  Exec run_action(const Action& a) {
    reanchor();
    const Cycle start = now();
    const std::string goal_key = agenda.current() ? agenda.current()->key() : std::string{};
    Exec r = Exec::Done;
    if (a.name == "move-cell") {
      const CellIndex to = *parse_cell_id(a.params[1]);
      const Vec2 target = shape.cell_bounds(to).inset(cfg.move_margin).clamp(pos());
      const std::vector<Vec2> path{pos(), target};
      r = follow(path, cycles_for(distance(pos(), target), believed_speed));
    } else if (a.name == "survey-cell") {
      r = survey_cell(*parse_cell_id(a.params[0]), strategy_from_string(a.params[1]));
    } else if (a.name == "survey-region") {
      r = survey_region();
    } else if (a.name == "glide-backward") {
      r = hold(cfg.glide_cycles);
      if (r == Exec::Done) {
        world->clear_remora();
        believed_speed = base_speed;
        attached.erase(a.params[0]);
        ++log.remora_cleared;
      }
    } else if (a.name == "inspect-edge") {
      r = hold(cfg.inspect_cycles);
    } else if (a.name == "surface") {
      r = hold(cfg.surface_cycles);
      if (r == Exec::Done) surfaced = true;
    } else if (a.name == "report-cell") {
      r = hold(cfg.report_cycles);
      if (r == Exec::Done) {
        const CellIndex c = *parse_cell_id(a.params[0]);
        reported.insert(c);
        log.reported.push_back(cell_id(c));
      }
    } else if (a.name == "enter-safe-mode") {
      r = hold(cfg.safe_cycles);
    } else if (a.name == "localize") {
      reanchor();
    } else {
      throw std::logic_error("no executor for action " + a.name);
    }
    if (cfg.keep_logs) log.actions.push_back({start, now(), a.key(), goal_key, r != Exec::Done});
    return r;
  }

  SurveyTally& tally_for(CellIndex c) {
    auto it = tallies.find(c);
    if (it == tallies.end()) it = tallies.emplace(c, SurveyTally(shape.cell_bounds(c), world->sensor_radius())).first;
    return it->second;
  }

  Exec survey_cell(CellIndex c, Strategy s) {
    SurveyTally& tally = tally_for(c);
    first_entry.try_emplace(c, now());
    active_tally = &tally;
    active_cell = c;
    Exec r;
    if (s == Strategy::ESCSS) {
      ErgodicController ctrl(ErgodicSpec(shape.cell_bounds(c), cfg.ergodic_k, cfg.ergodic_horizon),
                             derive_seed(seed, {static_cast<std::uint64_t>(now()), 0xE5C55ULL}), cfg.controller);
      ctrl.set_map(fit_info_map(detections, visits, shape.bounds(), shape.cell_bounds(c), cfg.info));
      ctrl.record(static_cast<double>(now()), pos());
      cell_ctrl = &ctrl;
      r = Exec::Done;
      for (int i = 0; i < cfg.escss_budget; ++i) {
        if (world->expired()) {
          r = Exec::Expired;
          break;
        }
        const MoveCommand u = ctrl.step(pos(), believed_speed);
        if (after_tick(tick(u.velocity))) {
          r = Exec::Interrupted;
          break;
        }
      }
      cell_ctrl = nullptr;
    } else {
      std::vector<Vec2> path{pos()};
      const auto sweep = lawnmower_path(shape.cell_bounds(c), pos(), world->sensor_radius(), cfg.sweep_margin);
      path.insert(path.end(), sweep.begin(), sweep.end());
      r = follow(path, cycles_for(path_length(path), believed_speed));
    }
    active_tally = nullptr;
    active_cell.reset();
    if (r == Exec::Done) finish_survey(c, s);
    return r;
  }

  void finish_survey(CellIndex c, Strategy s) {
    const SurveyTally& tally = tallies.at(c);
    completed.insert(c);
    SurveyRecord rec;
    rec.cell = c;
    rec.entry = first_entry.at(c);
    rec.exit = now();
    rec.unique_count = tally.unique_count();
    rec.edges = tally.edges(cfg.edge_fallback);
    rec.strategy = s;
    rec.hotspot = cfg.threshold > 0 && rec.unique_count >= cfg.threshold;
    log.surveys.push_back(rec);
    if (selector) {
      if (outstanding && outstanding->cell == c) selector->accept(*outstanding, rec.unique_count, rec.edges);
      else selector->accept_unproposed(c, rec.unique_count, rec.edges);
    }
    outstanding.reset();
  }

  Exec survey_region() {
    if (!region_ctrl) {
      region_ctrl = std::make_unique<ErgodicController>(
          ErgodicSpec(shape.bounds(), cfg.ergodic_k, cfg.ergodic_horizon),
          derive_seed(seed, {0x2E610EULL}), cfg.controller);
      region_ctrl->record(static_cast<double>(now()), pos());
      region_refit_at = now();
    }
    region_active = true;
    Exec r = Exec::Expired;
    while (!world->expired()) {
      if (now() >= region_refit_at) {
        region_ctrl->set_map(fit_info_map(detections, visits, shape.bounds(), shape.bounds(), cfg.info));
        region_refit_at = now() + cfg.info.window;
        log.epsilon.push_back(region_ctrl->history_metric());
      }
      const MoveCommand u = region_ctrl->step(pos(), believed_speed);
      if (after_tick(tick(u.velocity))) {
        r = Exec::Interrupted;
        break;
      }
    }
    region_active = false;
    return r;
  }

  // ---- goal operations ----

  void suspend_current() {
    const Goal* cur = agenda.current();
    if (!cur) return;
    if (std::find(suspended.begin(), suspended.end(), cur->key()) == suspended.end()) suspended.push_back(cur->key());
  }

  void switch_to_region() {
    for (const auto& g : agenda.goals())
      if (g.predicate == "surveyed" && g.status == GoalStatus::Pending) agenda.set_status(g.key(), GoalStatus::Abandoned);
    const Goal region = make_goal("surveyed", {"region"});
    if (!agenda.contains(region.key())) agenda.add(region);
    region_phase = true;
    strategy = Strategy::ES;
    if (log.strategies_used.empty() || log.strategies_used.back() != Strategy::ES)
      log.strategies_used.push_back(Strategy::ES);
  }

  std::optional<std::string> nearest_pending_survey(const std::set<CellIndex>& excluded) const {
    std::optional<std::string> best;
    std::size_t best_len = 0;
    for (const auto& g : agenda.goals()) {
      if (g.status != GoalStatus::Pending || g.predicate != "surveyed") continue;
      const auto loc = goal_location(g);
      if (!loc || excluded.contains(*loc)) continue;
      const auto path = shortest_cell_path(shape, known_blocked, here(), *loc);
      if (path.empty()) continue;
      if (!best || path.size() < best_len) {
        best = g.key();
        best_len = path.size();
      }
    }
    return best;
  }

  /// Goal selection with the agent's rule; `exclude_current` keeps the goal
  /// being pursued out of the candidates.
  std::optional<std::string> select(bool exclude_current) {
    ++log.selections;
    candidate.reset();
    if (cfg.kind == AgentKind::AIGO && !region_phase) {
      const auto est = resources_for_goals(resource_ctx(), agenda);
      const auto d = aigo_select_strategy(shape, here(), est.qualitative, strategy);
      if (d.abandon) {
        switch_to_region();
      } else {
        strategy = *d.strategy;
        if (log.strategies_used.empty() || log.strategies_used.back() != strategy)
          log.strategies_used.push_back(strategy);
      }
    }
    const Goal* cur = agenda.current();
    std::set<CellIndex> excluded;
    for (const auto& g : agenda.goals()) {
      if (g.predicate != "surveyed") continue;
      const auto loc = goal_location(g);
      if (loc && g.status != GoalStatus::Pending) excluded.insert(*loc);
    }
    if (exclude_current && cur) {
      if (const auto loc = goal_location(*cur)) excluded.insert(*loc);
    }
    const std::string region_key = atom("surveyed", {"region"});
    const SelectionRule rule = [&](const GoalAgenda& ag) -> std::optional<std::string> {
      const Goal* rg = ag.find(region_key);
      if (rg) return rg->status == GoalStatus::Pending ? std::optional<std::string>(region_key) : std::nullopt;
      if (!selector) return std::nullopt;
      if (auto p = selector->propose(excluded)) {
        const std::string key = atom("surveyed", {cell_id(p->cell)});
        const Goal* g = ag.find(key);
        if (g && g->status == GoalStatus::Pending) {
          candidate = std::move(*p);
          return key;
        }
      }
      return nearest_pending_survey(excluded);
    };
    const auto out = select_goal(agenda, hierarchy, objs, resource_ctx(), rule, now());
    note_op(out.record);
    return out.goal;
  }

  void handle_discrepancy(const Discrepancy& d) {
    ++log.discrepancies;
    const Explanation ex = explain(d, {cfg.position_tolerance, 0.5, 0.1});
    const std::set<CellEdge> blocked_before = known_blocked;
    switch (ex.cause) {
      case AnomalyCause::Remora: believed_speed *= 0.5; break;
      case AnomalyCause::Blockade:
        if (ex.edge) known_blocked.insert(*ex.edge);
        break;
      case AnomalyCause::Flow: flow_cells[here()] = now() + cfg.flow_memory; break;
      case AnomalyCause::Unknown: break;
    }

    const auto f = formulate_goal(agenda, ex, resource_ctx(), objs, ++instance, now());
    note_op(f.record);
    if (f.goal) {
      ++log.formulations;
      if (f.goal->predicate == "removed") attached.insert(f.goal->args[0]);
    }

    std::optional<std::string> gs;
    const bool can_select = !region_kind() && (cfg.arbitration != Arbitration::FormulateFirst || !f.goal);
    if (can_select) gs = select(true);

    AffectContext actx;
    actx.cause = ex.cause;
    actx.edge = ex.edge;
    actx.flow_cells = suspected_flow();
    actx.location = here();
    actx.region = shape;
    actx.known_blocked_before = blocked_before;
    const auto aff = all_goals_affected(actx, agenda);
    const bool s_aff = gs && std::find(aff.begin(), aff.end(), *gs) != aff.end();
    const auto choice = arbitrate(cfg.arbitration, f.goal.has_value(), gs.has_value(), s_aff);

    if (f.goal && gs) log.arbitrations.push_back({now(), f.goal->key(), *gs, aff, *choice, ex.cause});

    if (choice == Chosen::Formulated) {
      suspend_current();
      agenda.add_front(*f.goal);
      agenda.make_current(f.goal->key());
    } else if (choice == Chosen::Selected) {
      if (f.goal) agenda.add_front(*f.goal);
      suspended.clear();
      agenda.make_current(*gs);
      outstanding = candidate;
    }
    reanchor();
  }

  bool choose_next() {
    while (!suspended.empty()) {
      const std::string key = suspended.back();
      suspended.pop_back();
      const Goal* g = agenda.find(key);
      if (g && g->status == GoalStatus::Pending) {
        agenda.make_current(key);
        return true;
      }
    }
    const auto gs = select(false);
    if (!gs) return false;
    agenda.make_current(*gs);
    outstanding = candidate;
    return true;
  }

  void on_achieved(const Goal& g) {
    agenda.set_status(g.key(), GoalStatus::Achieved);
    if (g.predicate == "surveyed" && monitoring()) {
      const auto loc = goal_location(g);
      if (loc && completed.contains(*loc) && !reported.contains(*loc)) {
        const auto f = formulate_report(agenda, *loc, tallies.at(*loc).unique_count(), cfg.threshold,
                                        resource_ctx(), now());
        note_op(f.record);
        if (f.goal) {
          ++log.formulations;
          agenda.add_front(*f.goal);
          agenda.make_current(f.goal->key());
        }
      }
    }
  }

  // ---- trial ----

  TrialLog run(World& w, const std::vector<AnomalyEvent>& sched) {
    world = &w;
    schedule = &sched;
    if (w.region().rows() != shape.rows() || w.region().cols() != shape.cols())
      throw std::invalid_argument("agent and world regions differ");
    base_speed = w.agent().base_speed;
    believed_speed = base_speed;
    objs = ObjectRegistry::for_region(shape);
    counts.emplace(shape);
    believed_pos = w.agent().position;
    visits.push_back({static_cast<double>(now()), pos()});
    reanchor();

    const CellIndex start = here();
    switch (cfg.kind) {
      case AgentKind::ES:
        agenda.add(make_goal("surveyed", {"region"}));
        strategy = Strategy::ES;
        log.strategies_used.push_back(Strategy::ES);
        break;
      case AgentKind::SS:
      case AgentKind::ESCSS:
      case AgentKind::AIGO:
        for (CellIndex c : shape.cells()) agenda.add(make_goal("surveyed", {cell_id(c)}));
        selector.emplace(shape, start);
        strategy = cfg.kind == AgentKind::ESCSS ? Strategy::ESCSS : Strategy::SS;
        if (cfg.kind != AgentKind::AIGO) log.strategies_used.push_back(strategy);
        if (cfg.kind == AgentKind::AIGO) strategy = Strategy::ESCSS;
        break;
    }

    while (!w.expired()) {
      if (!agenda.current() && !choose_next()) break;
      const Goal goal = *agenda.current();
      const FactAtoms state = belief_state();
      const Plan p = plan(planner_ctx(), state, goal);
      if (p.empty()) {
        if (state.contains(atom(goal.predicate, goal.args))) {
          agenda.set_status(goal.key(), GoalStatus::Achieved);
        } else {
          agenda.set_status(goal.key(), GoalStatus::Abandoned);
          if (selector && outstanding && goal_location(goal) == outstanding->cell) {
            selector->skip(*outstanding);
            outstanding.reset();
          }
        }
        continue;
      }
      Exec r = Exec::Done;
      for (const auto& a : p) {
        r = run_action(a);
        if (r != Exec::Done) break;
      }
      if (r == Exec::Done) on_achieved(goal);
      if (r == Exec::Expired) break;
    }
    finish();
    return std::move(log);
  }

  void finish() {
    for (const auto& [c, tally] : tallies) {
      if (completed.contains(c) || tally.dwell() == 0) continue;
      SurveyRecord rec;
      rec.cell = c;
      rec.entry = first_entry.contains(c) ? first_entry.at(c) : 0;
      rec.exit = now();
      rec.unique_count = tally.unique_count();
      rec.edges = tally.edges(cfg.edge_fallback);
      rec.strategy = strategy;
      rec.partial = true;
      log.surveys.push_back(rec);
    }
    const Goal* cur = agenda.current();
    if (cur && cur->predicate == "surveyed" && cur->args[0] == "region")
      agenda.set_status(cur->key(), GoalStatus::Achieved);
    agenda.abandon_open();
    for (const auto& g : agenda.goals()) log.final_status[g.key()] = to_string(g.status);

    const auto n = static_cast<std::size_t>(shape.cell_count());
    log.classification.assign(n, false);
    if (monitoring()) {
      for (CellIndex c : reported) log.classification[static_cast<std::size_t>(shape.linear_index(c))] = true;
    } else if (cfg.kind == AgentKind::ES) {
      for (CellIndex c : shape.cells())
        log.classification[static_cast<std::size_t>(shape.linear_index(c))] =
            cfg.threshold > 0 && counts->unique_count(c) >= cfg.threshold;
    } else {
      for (const auto& rec : log.surveys)
        if (!rec.partial && rec.hotspot) log.classification[static_cast<std::size_t>(shape.linear_index(rec.cell))] = true;
    }
    log.dwell = counts->dwell_all();
    log.cycles_used = now();
    if (cfg.keep_logs) {
      log.detections = detections;
      log.visits = visits;
    }
  }
};

Agent::Agent(AgentConfig cfg, const SurveyRegion& shape, std::uint64_t seed)
    : impl_(std::make_unique<Impl>(std::move(cfg), shape, seed)) {}

Agent::~Agent() = default;

TrialLog Agent::run(World& world, const std::vector<AnomalyEvent>& schedule) {
  if (impl_->world) throw std::logic_error("an Agent runs a single trial");
  return impl_->run(world, schedule);
}

}  // namespace reef
