#include "reefsurvey/harness.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

#include "reefsurvey/rng.hpp"

namespace reef {

Confusion& Confusion::operator+=(const Confusion& o) {
  tp += o.tp;
  fp += o.fp;
  tn += o.tn;
  fn += o.fn;
  return *this;
}

MetricsTable metrics_from_counts(const Confusion& c) {
  MetricsTable m;
  m.counts = c;
  const auto ratio = [](long long a, long long b) { return b > 0 ? static_cast<double>(a) / static_cast<double>(b) : 0.0; };
  m.accuracy = ratio(c.tp + c.tn, c.total());
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

Confusion confusion_of(const std::vector<bool>& truth, const std::vector<bool>& predicted) {
  if (truth.size() != predicted.size()) throw std::invalid_argument("truth and prediction sizes differ");
  Confusion c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] && predicted[i]) ++c.tp;
    else if (!truth[i] && predicted[i]) ++c.fp;
    else if (truth[i]) ++c.fn;
    else ++c.tn;
  }
  return c;
}

MetricsTable compute_metrics(const std::vector<TrialResult>& results) {
  if (results.empty()) throw std::invalid_argument("compute_metrics needs at least one trial");
  Confusion c;
  for (const auto& r : results) c += r.counts;
  return metrics_from_counts(c);
}

TrialResult run_trial(const ScenarioInstance& inst, const AgentSpec& agent, const std::string& condition,
                      std::uint64_t experiment_seed, int start_index, TrialLog* log) {
  const TrialSetup setup = make_trial(inst, experiment_seed, start_index);
  World world = build_world(inst, setup);
  AgentConfig cfg = agent.config;
  cfg.threshold = inst.threshold;
  cfg.keep_logs = log != nullptr;
  Agent a(cfg, inst.region, setup.seed);
  TrialLog out = a.run(world, setup.schedule);

  TrialResult r;
  r.scenario = inst.config.name;
  r.agent = agent.label;
  r.condition = condition;
  r.start_index = start_index;
  r.start = setup.start;
  r.seed = experiment_seed;
  r.classification = out.classification;
  r.truth = inst.truth;
  r.counts = confusion_of(r.truth, r.classification);
  r.arbitrations = static_cast<int>(out.arbitrations.size());
  for (const auto& rec : out.arbitrations) {
    r.arbitrations_lawful += rec.lawful() ? 1 : 0;
    r.formulated_chosen += rec.chosen == Chosen::Formulated ? 1 : 0;
  }
  r.arbitration_log = out.arbitrations;
  r.selections = out.selections;
  r.formulations = out.formulations;
  r.discrepancies = out.discrepancies;
  r.remora_cleared = out.remora_cleared;
  r.cycles_used = out.cycles_used;
  if (log) *log = std::move(out);
  return r;
}

AgentConfig default_agent_config() { return AgentConfig{}; }

Condition named_condition(const std::string& name) {
  Condition c{name, {}};
  if (name == "none") return c;
  if (name == "remora" || name == "remora+flow" || name == "remora+blockade+flow") {
    c.anomalies.remora_rate = 0.002;
    if (name != "remora") c.anomalies.flow_zones = 2;
    if (name == "remora+blockade+flow") c.anomalies.blockades = 3;
    return c;
  }
  throw ConfigError("unknown condition: " + name);
}

ExperimentPlan table_plan(const std::string& table, std::uint64_t seed, int trials) {
  if (trials <= 0) throw ConfigError("trials must be positive");
  ExperimentPlan p;
  p.table = table;
  p.seed = seed;
  p.trials = trials;
  const auto agent = [](std::string label, AgentKind kind, GoalOps ops, Arbitration arb) {
    AgentConfig c = default_agent_config();
    c.kind = kind;
    c.ops = ops;
    c.arbitration = arb;
    return AgentSpec{std::move(label), c};
  };
  if (table == "T5") {
    for (const auto& s : {"outer-corners-4", "inner-corners-4", "inner-5"}) p.scenarios.push_back(named_scenario(s));
    p.conditions = {named_condition("remora")};
    for (const auto& [name, kind] : {std::pair{"SS", AgentKind::SS}, {"ES", AgentKind::ES}, {"ESCSS", AgentKind::ESCSS}}) {
      p.agents.push_back(agent(std::string(name) + "/selection", kind, GoalOps::SelectionOnly, Arbitration::FormulateFirst));
      p.agents.push_back(agent(std::string(name) + "/selection+formulation", kind, GoalOps::SelectionFormulation,
                               Arbitration::FormulateFirst));
    }
  } else if (table == "T6") {
    p.scenarios = {named_scenario("single-hotspot")};
    p.conditions = {named_condition("remora")};
    for (const auto& [name, kind] : {std::pair{"SS", AgentKind::SS}, {"ES", AgentKind::ES}, {"ESCSS", AgentKind::ESCSS},
                                     {"AIGO", AgentKind::AIGO}})
      p.agents.push_back(agent(name, kind, GoalOps::SelectionFormulation, Arbitration::FormulateFirst));
  } else if (table == "T7") {
    p.scenarios = {named_scenario("single-hotspot")};
    p.conditions = {named_condition("remora+flow"), named_condition("remora+blockade+flow")};
    p.agents.push_back(agent("Select-1st", AgentKind::AIGO, GoalOps::SelectionFormulation, Arbitration::SelectFirst));
    p.agents.push_back(agent("Formulate-1st", AgentKind::AIGO, GoalOps::SelectionFormulation, Arbitration::FormulateFirst));
    p.agents.push_back(agent("ASGO", AgentKind::AIGO, GoalOps::SelectionFormulation, Arbitration::ASGO));
  } else {
    throw ConfigError("unknown table: " + table);
  }
  return p;
}

namespace {

std::string trial_key(const std::string& condition, const std::string& agent, const std::string& scenario, int start,
                      std::uint64_t seed) {
  return condition + "|" + agent + "|" + scenario + "|" + std::to_string(start) + "|" + std::to_string(seed);
}

}  // namespace

std::vector<ResultRow> aggregate(const std::vector<TrialResult>& trials) {
  using Key = std::tuple<std::string, std::string, std::string>;  // condition, agent, scenario
  std::map<Key, Confusion> per_scenario;
  std::map<std::pair<std::string, std::string>, Confusion> pooled;
  std::map<std::pair<std::string, std::string>, std::set<std::string>> layouts;
  std::vector<std::pair<std::string, std::string>> order;
  for (const auto& t : trials) {
    const auto ac = std::pair{t.condition, t.agent};
    if (!pooled.contains(ac)) order.push_back(ac);
    per_scenario[{t.condition, t.agent, t.scenario}] += t.counts;
    pooled[ac] += t.counts;
    layouts[ac].insert(t.scenario);
  }
  std::sort(order.begin(), order.end());
  std::vector<ResultRow> rows;
  for (const auto& ac : order) {
    rows.push_back({"pooled", ac.second, ac.first, metrics_from_counts(pooled[ac])});
    if (layouts[ac].size() > 1)
      for (const auto& s : layouts[ac])
        rows.push_back({s, ac.second, ac.first, metrics_from_counts(per_scenario[{ac.first, ac.second, s}])});
  }
  return rows;
}

const ResultRow* find_row(const std::vector<ResultRow>& rows, const std::string& agent, const std::string& condition,
                          const std::string& scenario) {
  for (const auto& r : rows)
    if (r.agent == agent && r.condition == condition && r.scenario == scenario) return &r;
  return nullptr;
}

ExperimentResult run_experiment(const ExperimentPlan& plan, const RunOptions& opts) {
  struct Task {
    std::size_t condition;
    std::size_t agent;
    std::size_t scenario;
    int start;
  };
  // instances[condition][scenario]
  std::vector<std::vector<ScenarioInstance>> instances;
  for (const auto& cond : plan.conditions) {
    auto& row = instances.emplace_back();
    for (const auto& sc : plan.scenarios) {
      ScenarioConfig cfg = sc;
      cfg.anomalies = cond.anomalies;
      row.push_back(generate_scenario(cfg, plan.seed));
    }
  }
  std::vector<Task> tasks;
  for (std::size_t c = 0; c < plan.conditions.size(); ++c)
    for (std::size_t a = 0; a < plan.agents.size(); ++a)
      for (std::size_t s = 0; s < plan.scenarios.size(); ++s)
        for (int i = 0; i < plan.trials; ++i) tasks.push_back({c, a, s, i});

  std::vector<std::optional<TrialResult>> results(tasks.size());
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const Task& t = tasks[i];
    index[trial_key(plan.conditions[t.condition].name, plan.agents[t.agent].label, plan.scenarios[t.scenario].name,
                    t.start, plan.seed)] = i;
  }

  if (!opts.checkpoint_path.empty()) {
    std::ifstream in(opts.checkpoint_path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      TrialResult r;
      try {
        r = trial_from_json(line);
      } catch (const std::exception&) {
        continue;  // torn final line from an interrupted write
      }
      const auto it = index.find(trial_key(r.condition, r.agent, r.scenario, r.start_index, r.seed));
      if (it != index.end()) results[it->second] = std::move(r);
    }
  }

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < tasks.size(); ++i)
    if (!results[i]) pending.push_back(i);

  std::mutex mu;
  std::ofstream ckpt;
  if (!opts.checkpoint_path.empty()) ckpt.open(opts.checkpoint_path, std::ios::app);
  std::atomic<std::size_t> next{0};
  std::size_t done = tasks.size() - pending.size();
  std::exception_ptr failure;

  const auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= pending.size()) return;
      const std::size_t i = pending[k];
      const Task& t = tasks[i];
      TrialResult r;
      try {
        r = run_trial(instances[t.condition][t.scenario], plan.agents[t.agent], plan.conditions[t.condition].name,
                      plan.seed, t.start);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next.store(pending.size());
        return;
      }
      std::lock_guard lock(mu);
      if (ckpt.is_open()) {
        ckpt << trial_to_json(r) << '\n';
        ckpt.flush();
      }
      results[i] = std::move(r);
      ++done;
      if (opts.progress) opts.progress(done, tasks.size());
    }
  };
  const int n = std::max(1, std::min<int>(opts.workers, static_cast<int>(std::max<std::size_t>(pending.size(), 1))));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  ExperimentResult out;
  out.plan = plan;
  out.trials.reserve(tasks.size());
  for (auto& r : results) {
    if (!opts.keep_arbitration_log) r->arbitration_log.clear();
    out.trials.push_back(std::move(*r));
  }
  out.rows = aggregate(out.trials);
  return out;
}

}  // namespace reef
