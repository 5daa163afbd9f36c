#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "reefsurvey/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace reef;

namespace {

constexpr int kConfigExit = 2;

ScenarioConfig resolve_scenario(const std::string& arg) {
  if (arg.ends_with(".json") || fs::exists(arg)) return load_scenario(arg);
  return named_scenario(arg);
}

GoalOps ops_from_string(const std::string& s) {
  if (s == "selection") return GoalOps::SelectionOnly;
  if (s == "selection+formulation") return GoalOps::SelectionFormulation;
  throw ConfigError("unknown goal operations: " + s);
}

AgentSpec make_agent(const std::string& kind, const std::string& ops, const std::string& arbitration) {
  AgentSpec a{kind, default_agent_config()};
  try {
    a.config.kind = agent_kind_from_string(kind);
    a.config.arbitration = arbitration_from_string(arbitration);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  a.config.ops = ops_from_string(ops);
  if (a.config.ops == GoalOps::SelectionOnly) a.label += "/selection";
  if (a.config.arbitration != Arbitration::FormulateFirst) a.label += "/" + std::string(to_string(a.config.arbitration));
  return a;
}

struct RunRequest {
  std::string scenario = "single-hotspot";
  std::string agent = "SS";
  std::string ops = "selection+formulation";
  std::string arbitration = "formulate-first";
  std::string condition;
  int start = 0;
  std::uint64_t seed = 1;
};

json request_json(const RunRequest& r, const ScenarioConfig& cfg) {
  return {{"scenario", json::parse(scenario_to_json(cfg))},
          {"agent", r.agent},
          {"ops", r.ops},
          {"arbitration", r.arbitration},
          {"condition", r.condition},
          {"start", r.start},
          {"seed", r.seed}};
}

struct RunOutput {
  TrialResult result;
  TrialLog log;
  ScenarioInstance instance;
};

RunOutput execute(const ScenarioConfig& base, const RunRequest& r) {
  ScenarioConfig cfg = base;
  if (!r.condition.empty()) cfg.anomalies = named_condition(r.condition).anomalies;
  if (r.start < 0) throw ConfigError("start index must be non-negative");
  RunOutput out;
  out.instance = generate_scenario(cfg, r.seed);
  const AgentSpec agent = make_agent(r.agent, r.ops, r.arbitration);
  out.result = run_trial(out.instance, agent, r.condition.empty() ? "custom" : r.condition, r.seed, r.start, &out.log);
  return out;
}

std::vector<double> to_doubles(const std::vector<bool>& v) {
  std::vector<double> d;
  for (bool b : v) d.push_back(b ? 1.0 : 0.0);
  return d;
}

std::vector<double> to_doubles(const std::vector<int>& v) { return {v.begin(), v.end()}; }

std::string action_log_jsonl(const TrialLog& log) {
  std::ostringstream out;
  for (const auto& a : log.actions)
    out << json{{"start", a.start}, {"end", a.end}, {"action", a.action}, {"goal", a.goal},
                {"interrupted", a.interrupted}}.dump()
        << '\n';
  return out.str();
}

std::string operations_jsonl(const TrialLog& log) {
  std::ostringstream out;
  for (const auto& o : log.operations) {
    json pre = json::array();
    for (const auto& [name, ok] : o.preconditions) pre.push_back({{"name", name}, {"holds", ok}});
    json rec = {{"t", o.time}, {"head", o.head}, {"preconditions", pre}, {"note", o.note}};
    rec["result"] = o.result ? json(*o.result) : json(nullptr);
    out << rec.dump() << '\n';
  }
  return out.str();
}

std::string arbitration_jsonl(const TrialLog& log) {
  std::ostringstream out;
  for (const auto& a : log.arbitrations)
    out << json{{"t", a.time},          {"g_f", a.g_f},
                {"g_s", a.g_s},         {"g_aff", a.g_aff},
                {"chosen", to_string(a.chosen)}, {"cause", to_string(a.cause)},
                {"lawful", a.lawful()}}.dump()
        << '\n';
  return out.str();
}

InfoMap final_phi(const RunOutput& o) {
  const Rect b = o.instance.region.bounds();
  return fit_info_map(o.log.detections, o.log.visits, b, b);
}

int cmd_run(const RunRequest& r, const std::string& out_dir) {
  const ScenarioConfig cfg = resolve_scenario(r.scenario);
  const RunOutput o = execute(cfg, r);
  fs::create_directories(out_dir);
  const fs::path d(out_dir);
  json req = request_json(r, cfg);
  req["dwell"] = o.log.dwell;
  req["rows"] = o.instance.region.rows();
  req["cols"] = o.instance.region.cols();
  req["threshold"] = o.instance.threshold;
  write_text((d / "run.json").string(), req.dump(2) + "\n");
  write_text((d / "trial.json").string(), trial_to_json(o.result) + "\n");
  write_text((d / "survey_log.csv").string(), survey_log_csv(o.instance.region, o.log));
  write_text((d / "actions.jsonl").string(), action_log_jsonl(o.log));
  write_text((d / "operations.jsonl").string(), operations_jsonl(o.log));
  write_text((d / "arbitrations.jsonl").string(), arbitration_jsonl(o.log));
  write_text((d / "epsilon.csv").string(), epsilon_csv(o.log.epsilon, default_agent_config().info.window));
  write_text((d / "phi.csv").string(), phi_csv(final_phi(o)));
  const auto& c = o.result.counts;
  std::printf("%s %s start=%d seed=%llu TP=%lld FP=%lld TN=%lld FN=%lld cycles=%lld\n", o.result.scenario.c_str(),
              o.result.agent.c_str(), r.start, static_cast<unsigned long long>(r.seed), c.tp, c.fp, c.tn, c.fn,
              static_cast<long long>(o.result.cycles_used));
  return 0;
}

int cmd_sweep(const std::string& table, int trials, int workers, std::uint64_t seed, const std::string& out_dir,
              bool quiet) {
  const ExperimentPlan plan = table_plan(table, seed, trials);
  fs::create_directories(out_dir);
  const fs::path d(out_dir);
  RunOptions opts;
  opts.workers = workers;
  opts.checkpoint_path = (d / "trials.jsonl").string();
  opts.keep_arbitration_log = true;
  if (!quiet) {
    opts.progress = [](std::size_t done, std::size_t total) {
      if (done % 50 == 0 || done == total) std::fprintf(stderr, "\r%zu/%zu trials", done, total);
      if (done == total) std::fprintf(stderr, "\n");
    };
  }
  const ExperimentResult res = run_experiment(plan, opts);
  write_text((d / "sweep.json").string(),
             json{{"table", table}, {"trials", trials}, {"seed", seed}}.dump(2) + "\n");
  write_text((d / "results.csv").string(), results_csv(res.rows));
  write_text((d / "results.json").string(), results_json(res));
  std::cout << results_csv(res.rows);
  return 0;
}

std::vector<double> read_phi_grid(const std::string& text, int& res) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  std::vector<double> v;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    v.push_back(std::stod(line.substr(line.rfind(',') + 1)));
  }
  res = 0;
  while (res * res < static_cast<int>(v.size())) ++res;
  if (res * res != static_cast<int>(v.size())) throw ConfigError("phi.csv is not a square grid");
  return v;
}

int cmd_report(const std::string& in_dir, const std::string& out_dir) {
  const fs::path in(in_dir);
  const fs::path out(out_dir.empty() ? in_dir : out_dir);
  fs::create_directories(out);
  if (fs::exists(in / "run.json")) {
    const json req = json::parse(read_text((in / "run.json").string()));
    const TrialResult t = trial_from_json(read_text((in / "trial.json").string()));
    const int rows = req.at("rows").get<int>();
    const int cols = req.at("cols").get<int>();
    const auto dwell = req.at("dwell").get<std::vector<int>>();
    write_text((out / "dwell.svg").string(), svg_heatmap(to_doubles(dwell), rows, cols, "dwell (cycles)"));
    write_text((out / "classification.svg").string(),
               svg_heatmap(to_doubles(t.classification), rows, cols, "classified hotspot"));
    int res = 0;
    const auto phi = read_phi_grid(read_text((in / "phi.csv").string()), res);
    write_text((out / "phi.svg").string(), svg_heatmap(phi, res, res, "phi"));
    std::printf("wrote dwell.svg classification.svg phi.svg to %s\n", out.string().c_str());
    return 0;
  }
  if (!fs::exists(in / "trials.jsonl")) throw ConfigError(in_dir + " holds neither run.json nor trials.jsonl");
  const json meta = json::parse(read_text((in / "sweep.json").string()));
  ExperimentResult res;
  res.plan.table = meta.at("table").get<std::string>();
  res.plan.trials = meta.at("trials").get<int>();
  res.plan.seed = meta.at("seed").get<std::uint64_t>();
  std::istringstream lines(read_text((in / "trials.jsonl").string()));
  std::string line;
  while (std::getline(lines, line))
    if (!line.empty()) res.trials.push_back(trial_from_json(line));
  if (res.trials.empty()) throw ConfigError("no trials recorded");
  res.rows = aggregate(res.trials);
  write_text((out / "results.csv").string(), results_csv(res.rows));
  write_text((out / "results.json").string(), results_json(res));

  // hotspot classification frequency per cell, one map per (condition, agent)
  std::map<std::string, std::pair<std::vector<double>, int>> freq;
  for (const auto& t : res.trials) {
    auto& [v, n] = freq[t.condition + "_" + t.agent];
    if (v.empty()) v.assign(t.classification.size(), 0.0);
    for (std::size_t i = 0; i < v.size() && i < t.classification.size(); ++i) v[i] += t.classification[i] ? 1.0 : 0.0;
    ++n;
  }
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(res.trials.front().classification.size()))));
  for (auto& [key, vn] : freq) {
    auto& [v, n] = vn;
    for (auto& x : v) x /= n;
    std::string file = key;
    for (auto& ch : file)
      if (ch == '/' || ch == '+') ch = '_';
    if (side * side == static_cast<int>(v.size()))
      write_text((out / ("classification_" + file + ".svg")).string(), svg_heatmap(v, side, side, key));
  }
  std::cout << results_csv(res.rows);
  return 0;
}

int cmd_replay(const std::string& log_dir) {
  const fs::path d(log_dir);
  const json req = json::parse(read_text((d / "run.json").string()));
  RunRequest r;
  r.agent = req.at("agent").get<std::string>();
  r.ops = req.at("ops").get<std::string>();
  r.arbitration = req.at("arbitration").get<std::string>();
  r.condition = req.at("condition").get<std::string>();
  r.start = req.at("start").get<int>();
  r.seed = req.at("seed").get<std::uint64_t>();
  const ScenarioConfig cfg = scenario_from_json(req.at("scenario").dump());
  const RunOutput o = execute(cfg, r);
  const std::string recorded = read_text((d / "trial.json").string());
  const std::string replayed = trial_to_json(o.result) + "\n";
  const bool same_trial = recorded == replayed;
  const bool same_actions = !fs::exists(d / "actions.jsonl") || read_text((d / "actions.jsonl").string()) == action_log_jsonl(o.log);
  if (same_trial && same_actions) {
    std::printf("replay identical: %zu actions, TP=%lld FP=%lld TN=%lld FN=%lld\n", o.log.actions.size(),
                o.result.counts.tp, o.result.counts.fp, o.result.counts.tn, o.result.counts.fn);
    return 0;
  }
  std::printf("replay differs:%s%s\n", same_trial ? "" : " trial", same_actions ? "" : " actions");
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Marine hotspot survey simulator and experiment runner"};
  app.require_subcommand(1);

  RunRequest req;
  std::string run_out = "run-out";
  auto* run = app.add_subcommand("run", "Run a single trial");
  run->add_option("--scenario", req.scenario, "Named layout or scenario JSON file");
  run->add_option("--agent", req.agent, "SS, ES, ESCSS or AIGO");
  run->add_option("--ops", req.ops, "selection or selection+formulation");
  run->add_option("--arbitration", req.arbitration, "formulate-first, select-first or ASGO");
  run->add_option("--condition", req.condition, "none, remora, remora+flow or remora+blockade+flow");
  run->add_option("--start", req.start, "Start index (stratified over cells)");
  run->add_option("--seed", req.seed, "Experiment seed");
  run->add_option("--out", run_out, "Output directory");

  std::string table = "T5";
  int trials = 100;
  int workers = 1;
  std::uint64_t seed = 1;
  std::string out_dir = "sweep-out";
  bool quiet = false;
  auto* sweep = app.add_subcommand("sweep", "Run a full results table");
  sweep->add_option("--table", table, "T5, T6 or T7")->check(CLI::IsMember({"T5", "T6", "T7"}));
  sweep->add_option("--trials", trials, "Starts per scenario");
  sweep->add_option("--workers", workers, "Worker threads");
  sweep->add_option("--seed", seed, "Experiment seed");
  sweep->add_option("--out-dir", out_dir, "Output directory (resumes from its trials.jsonl)");
  sweep->add_flag("--quiet", quiet, "No progress output");

  std::string report_in;
  std::string report_out;
  auto* report = app.add_subcommand("report", "Tables and SVG heatmaps from a run or sweep directory");
  report->add_option("--in", report_in, "Directory written by run or sweep")->required();
  report->add_option("--out-dir", report_out, "Output directory (defaults to --in)");

  std::string replay_dir;
  auto* replay = app.add_subcommand("replay", "Re-execute a logged run and compare");
  replay->add_option("--log", replay_dir, "Directory written by run")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigExit;
  }

  try {
    if (*run) return cmd_run(req, run_out);
    if (*sweep) return cmd_sweep(table, trials, workers, seed, out_dir, quiet);
    if (*report) return cmd_report(report_in, report_out);
    if (*replay) return cmd_replay(replay_dir);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigExit;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
