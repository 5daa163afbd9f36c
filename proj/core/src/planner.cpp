#include <algorithm>
#include <deque>
#include <map>
#include <stdexcept>

#include "reefsurvey/agent.hpp"

namespace reef {

std::string atom(const std::string& predicate, const std::vector<std::string>& args) {
  std::string s = predicate + "(";
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) s += ",";
    s += args[i];
  }
  return s + ")";
}

std::string Action::key() const { return atom(name, params); }

FactAtoms planning_state(const PlannerContext& ctx, CellIndex at, const std::set<std::string>& attached,
                         const FactAtoms& extra) {
  FactAtoms s = extra;
  s.insert(atom("at-cell", {cell_id(at)}));
  for (const auto& e : ctx.region.interior_edges()) {
    if (ctx.known_blocked.contains(e)) continue;
    s.insert(atom("open", {cell_id(e.a), cell_id(e.b)}));
    s.insert(atom("open", {cell_id(e.b), cell_id(e.a)}));
  }
  for (const auto& r : attached) s.insert(atom("attached", {r}));
  return s;
}

bool applicable(const FactAtoms& state, const Action& a) {
  return std::all_of(a.pre.begin(), a.pre.end(), [&](const std::string& p) { return state.contains(p); });
}

FactAtoms apply(const FactAtoms& state, const Action& a) {
  if (!applicable(state, a)) throw std::logic_error("action not applicable: " + a.key());
  FactAtoms next = state;
  for (const auto& d : a.del) next.erase(d);
  next.insert(a.add.begin(), a.add.end());
  return next;
}

bool plan_valid(const FactAtoms& state, const Plan& p) {
  FactAtoms s = state;
  for (const auto& a : p) {
    if (!applicable(s, a)) return false;
    s = reef::apply(s, a);
  }
  return true;
}

namespace {

std::vector<Action> ground(const PlannerContext& ctx, const Goal& goal) {
  std::vector<Action> acts;
  const double hop = ctx.speed > 0.0 ? ctx.region.cell_edge() / ctx.speed : 1e9;
  const auto add_moves = [&] {
    for (const auto& e : ctx.region.interior_edges()) {
      if (ctx.known_blocked.contains(e)) continue;
      for (const auto& [from, to] : {std::pair{e.a, e.b}, std::pair{e.b, e.a}}) {
        const std::string f = cell_id(from);
        const std::string t = cell_id(to);
        acts.push_back({"move-cell", {f, t}, {atom("at-cell", {f}), atom("open", {f, t})},
                        {atom("at-cell", {t})}, {atom("at-cell", {f}), "surfaced()"}, hop});
      }
    }
  };
  const std::string& p = goal.predicate;
  if (p == "surveyed" && goal.args.size() == 1 && goal.args[0] == "region") {
    acts.push_back({"survey-region", {"region"}, {}, {atom("surveyed", {"region"})}, {"surfaced()"},
                    ctx.durations.region});
  } else if (p == "surveyed" && goal.args.size() == 1) {
    add_moves();
    const std::string c = goal.args[0];
    acts.push_back({"survey-cell", {c, to_string(ctx.survey_strategy)}, {atom("at-cell", {c})},
                    {atom("surveyed", {c})}, {"surfaced()"}, ctx.durations.survey});
  } else if (p == "reported" && goal.args.size() == 1) {
    const std::string c = goal.args[0];
    acts.push_back({"surface", {}, {}, {"surfaced()"}, {}, ctx.durations.report - 1.0});
    acts.push_back({"report-cell", {c}, {"surfaced()"}, {atom("reported", {c})}, {}, 1.0});
  } else if (p == "removed" && goal.args.size() == 2) {
    const std::string r = goal.args[0];
    acts.push_back({"glide-backward", {r}, {atom("attached", {r})}, {atom("removed", {r, goal.args[1]})},
                    {atom("attached", {r})}, ctx.durations.glide});
  } else if (p == "inspected" && goal.args.size() == 1) {
    add_moves();
    if (const auto e = parse_edge_id(goal.args[0])) {
      for (CellIndex side : {e->a, e->b}) {
        const std::string s = cell_id(side);
        acts.push_back({"inspect-edge", {goal.args[0], s}, {atom("at-cell", {s})},
                        {atom("inspected", {goal.args[0]})}, {}, ctx.durations.inspect});
      }
    }
  } else if (p == "relocalized" && goal.args.size() == 2) {
    acts.push_back({"localize", {goal.args[1]}, {}, {atom("relocalized", goal.args)}, {}, ctx.durations.localize});
  } else if (p == "safe" && goal.args.size() == 2) {
    acts.push_back({"enter-safe-mode", {goal.args[1]}, {}, {atom("safe", goal.args)}, {}, ctx.durations.safe});
  }
  return acts;
}

}  // namespace

Plan plan(const PlannerContext& ctx, const FactAtoms& state, const Goal& goal) {
  const std::string target = atom(goal.predicate, goal.args);
  if (state.contains(target)) return {};
  const auto acts = ground(ctx, goal);
  if (acts.empty()) return {};

  struct Node {
    FactAtoms state;
    int parent;
    int action;
  };
  std::vector<Node> nodes{{state, -1, -1}};
  std::map<FactAtoms, int> seen{{state, 0}};
  std::deque<int> frontier{0};
  while (!frontier.empty()) {
    const int n = frontier.front();
    frontier.pop_front();
    for (std::size_t i = 0; i < acts.size(); ++i) {
      if (!applicable(nodes[static_cast<std::size_t>(n)].state, acts[i])) continue;
      FactAtoms next = reef::apply(nodes[static_cast<std::size_t>(n)].state, acts[i]);
      if (seen.contains(next)) continue;
      const bool done = next.contains(target);
      nodes.push_back({std::move(next), n, static_cast<int>(i)});
      const int id = static_cast<int>(nodes.size()) - 1;
      if (done) {
        Plan out;
        for (int k = id; nodes[static_cast<std::size_t>(k)].parent >= 0; k = nodes[static_cast<std::size_t>(k)].parent)
          out.push_back(acts[static_cast<std::size_t>(nodes[static_cast<std::size_t>(k)].action)]);
        std::reverse(out.begin(), out.end());
        return out;
      }
      seen.emplace(nodes.back().state, id);
      frontier.push_back(id);
    }
  }
  return {};
}

}  // namespace reef
