#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "../support/oracles.hpp"
#include "reefsurvey/harness.hpp"

using namespace reef;
namespace fs = std::filesystem;

namespace {

TrialResult with_counts(long long tp, long long fp, long long tn, long long fn) {
  TrialResult r;
  r.counts = {tp, fp, tn, fn};
  return r;
}

AgentSpec agent_of(AgentKind kind) {
  AgentConfig c = default_agent_config();
  c.kind = kind;
  return {to_string(kind), c};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("reefsurvey_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ExperimentPlan small_plan(std::uint64_t seed) {
  ExperimentPlan p = table_plan("T6", seed, 3);
  p.agents.resize(2);
  return p;
}

}  // namespace

TEST(Metrics, HandExample) {
  const auto m = compute_metrics({with_counts(4, 0, 20, 1)});
  EXPECT_EQ(m.precision, 1.0);
  EXPECT_DOUBLE_EQ(m.recall, 0.8);
  EXPECT_NEAR(m.f1, 0.8889, 1e-4);
  EXPECT_DOUBLE_EQ(m.accuracy, 24.0 / 25.0);
}

TEST(Metrics, AllCorrect) {
  const auto m = compute_metrics({with_counts(1, 0, 24, 0), with_counts(2, 0, 23, 0)});
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_EQ(m.f1, 1.0);
}

TEST(Metrics, ThreeHundredTrialsGive7500Outcomes) {
  std::vector<TrialResult> rs;
  std::vector<bool> truth(25, false);
  truth[16] = true;
  for (int i = 0; i < 300; ++i) {
    TrialResult r;
    std::vector<bool> pred(25, false);
    pred[static_cast<std::size_t>(i % 25)] = true;
    r.counts = confusion_of(truth, pred);
    rs.push_back(r);
  }
  EXPECT_EQ(compute_metrics(rs).counts.total(), 7500);
}

TEST(Metrics, EmptyInputThrows) { EXPECT_THROW(compute_metrics({}), std::invalid_argument); }

TEST(Metrics, ZeroDenominatorsAreZero) {
  const auto m = metrics_from_counts({0, 0, 25, 0});
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_EQ(m.recall, 0.0);
  EXPECT_EQ(m.f1, 0.0);
  EXPECT_EQ(m.accuracy, 1.0);
}

TEST(Metrics, ConfusionOf) {
  const std::vector<bool> t{true, true, false, false};
  const std::vector<bool> p{true, false, true, false};
  EXPECT_EQ(confusion_of(t, p), (Confusion{1, 1, 1, 1}));
  EXPECT_THROW(confusion_of(t, {true}), std::invalid_argument);
}

TEST(Scenario, SingleHotspotHasExactlyOneTrueCell) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto inst = generate_scenario(named_scenario("single-hotspot"), seed);
    const auto counts = count_tags_per_cell(inst.region, inst.tags);
    EXPECT_EQ(counts, inst.true_counts);
    int hot = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      const bool h = counts[i] >= inst.threshold;
      EXPECT_EQ(h, inst.truth[i]);
      hot += h ? 1 : 0;
    }
    EXPECT_EQ(hot, 1) << "seed " << seed;
    EXPECT_TRUE(inst.truth[static_cast<std::size_t>(inst.region.linear_index({3, 1}))]);
    EXPECT_EQ(inst.tags.size(), 1000u);
  }
}

TEST(Scenario, OuterCornersHaveFourCornerCells) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto inst = generate_scenario(named_scenario("outer-corners-4"), seed);
    std::vector<bool> want(25, false);
    for (CellIndex c : {CellIndex{0, 0}, CellIndex{0, 4}, CellIndex{4, 0}, CellIndex{4, 4}})
      want[static_cast<std::size_t>(inst.region.linear_index(c))] = true;
    EXPECT_EQ(inst.truth, want) << "seed " << seed;
  }
}

TEST(Scenario, ThresholdLeavesTwentyPercentMargin) {
  for (const auto& name : {"single-hotspot", "outer-corners-4", "inner-corners-4", "inner-5"}) {
    const auto inst = generate_scenario(named_scenario(name), 1);
    int max_bg = 0;
    int min_hot = 1 << 30;
    for (std::size_t i = 0; i < 25; ++i) {
      if (inst.truth[i]) min_hot = std::min(min_hot, inst.true_counts[i]);
      else max_bg = std::max(max_bg, inst.true_counts[i]);
    }
    EXPECT_GE(min_hot, 1.2 * max_bg) << name;
    EXPECT_GT(inst.threshold, max_bg) << name;
    EXPECT_LE(inst.threshold, min_hot) << name;
  }
}

TEST(Scenario, EmptyBudgetHasNoHotspots) {
  ScenarioConfig cfg = named_scenario("single-hotspot");
  cfg.tag_budget = 0;
  const auto inst = generate_scenario(cfg, 1);
  EXPECT_TRUE(inst.tags.empty());
  EXPECT_EQ(std::count(inst.truth.begin(), inst.truth.end(), true), 0);
}

TEST(Scenario, CentreOutsideRegionIsConfigError) {
  ScenarioConfig cfg = named_scenario("single-hotspot");
  cfg.hotspot_centers = {{25.0, 3.0}};
  EXPECT_THROW(generate_scenario(cfg, 1), ConfigError);
  EXPECT_THROW(named_scenario("nowhere"), ConfigError);
}

TEST(Scenario, CalibrateThreshold) {
  EXPECT_EQ(calibrate_threshold({10, 30, 50}, {false, false, true}, 0.5, 1.2), 40);
  EXPECT_EQ(calibrate_threshold({10, 30, 50}, {false, false, true}, 0.2, 1.2), 34);
  EXPECT_EQ(calibrate_threshold({10, 30}, {false, false}, 0.5, 1.2), 31);
  EXPECT_THROW(calibrate_threshold({10, 30, 33}, {false, false, true}, 0.5, 1.2), ConfigError);
}

TEST(Scenario, FixedThresholdOverridesCalibration) {
  ScenarioConfig cfg = named_scenario("single-hotspot");
  cfg.threshold = 1;
  const auto inst = generate_scenario(cfg, 3);
  EXPECT_EQ(inst.threshold, 1);
  for (std::size_t i = 0; i < inst.truth.size(); ++i) EXPECT_EQ(inst.truth[i], inst.true_counts[i] >= 1);
  EXPECT_EQ(scenario_from_json(scenario_to_json(cfg)).threshold, 1);
  EXPECT_THROW(scenario_from_json(R"({"threshold": -2})"), ConfigError);
}

TEST(Scenario, GenerationIsDeterministic) {
  const auto a = generate_scenario(named_scenario("inner-5"), 9);
  const auto b = generate_scenario(named_scenario("inner-5"), 9);
  ASSERT_EQ(a.tags.size(), b.tags.size());
  for (std::size_t i = 0; i < a.tags.size(); ++i) {
    EXPECT_EQ(a.tags[i].position, b.tags[i].position);
    EXPECT_EQ(a.tags[i].phase, b.tags[i].phase);
  }
  EXPECT_NE(generate_scenario(named_scenario("inner-5"), 10).tags[0].position, a.tags[0].position);
}

TEST(Scenario, StartsAreStratifiedFourPerCell) {
  const ScenarioConfig cfg = named_scenario("single-hotspot");
  const SurveyRegion r;
  std::vector<int> per_cell(25, 0);
  for (int i = 0; i < 100; ++i) {
    const Vec2 p = start_position(cfg, 1, i);
    ++per_cell[static_cast<std::size_t>(r.linear_index(r.cell_of(p)))];
    EXPECT_EQ(r.cell_of(p), r.from_linear(i % 25));
  }
  for (int n : per_cell) EXPECT_EQ(n, 4);
}

TEST(Scenario, JsonRoundTripAndErrors) {
  ScenarioConfig cfg = named_scenario("inner-corners-4");
  cfg.anomalies.blockades = 2;
  cfg.deadline = 321;
  const auto back = scenario_from_json(scenario_to_json(cfg));
  EXPECT_EQ(back.name, cfg.name);
  EXPECT_EQ(back.deadline, 321);
  EXPECT_EQ(back.anomalies.blockades, 2);
  EXPECT_EQ(back.hotspot_centers.size(), 4u);
  EXPECT_EQ(scenario_from_json(R"({"base":"outer-corners-4","tag_budget":500})").tag_budget, 500);
  EXPECT_THROW(scenario_from_json("{"), ConfigError);
  EXPECT_THROW(scenario_from_json("[1,2]"), ConfigError);
  EXPECT_THROW(scenario_from_json(R"({"deadline":"soon"})"), ConfigError);
}

TEST(Scenario, TrialScheduleIsSharedAcrossAgents) {
  ScenarioConfig cfg = named_scenario("single-hotspot");
  cfg.anomalies = named_condition("remora+blockade+flow").anomalies;
  const auto inst = generate_scenario(cfg, 1);
  const auto a = make_trial(inst, 1, 17);
  const auto b = make_trial(inst, 1, 17);
  ASSERT_EQ(a.schedule.size(), b.schedule.size());
  EXPECT_EQ(a.flow_zones.size(), 2u);
  int blockades = 0;
  for (std::size_t i = 0; i < a.schedule.size(); ++i) {
    EXPECT_EQ(a.schedule[i].onset, b.schedule[i].onset);
    if (i) EXPECT_LE(a.schedule[i - 1].onset, a.schedule[i].onset);
    blockades += a.schedule[i].kind == AnomalyKind::Blockade ? 1 : 0;
  }
  EXPECT_EQ(blockades, 3);
}

TEST(RunTrial, DeadlineZeroClassifiesNothing) {
  ScenarioConfig cfg = named_scenario("single-hotspot");
  cfg.deadline = 0;
  const auto inst = generate_scenario(cfg, 1);
  for (AgentKind k : {AgentKind::SS, AgentKind::ES, AgentKind::ESCSS, AgentKind::AIGO}) {
    const auto r = run_trial(inst, agent_of(k), "none", 1, 0);
    EXPECT_EQ(r.classification, std::vector<bool>(25, false));
    EXPECT_EQ(r.counts, (Confusion{0, 0, 24, 1}));
  }
}

TEST(RunTrial, SameInputsSameResult) {
  const auto inst = generate_scenario(named_scenario("single-hotspot"), 3);
  EXPECT_EQ(trial_to_json(run_trial(inst, agent_of(AgentKind::ESCSS), "none", 3, 40)),
            trial_to_json(run_trial(inst, agent_of(AgentKind::ESCSS), "none", 3, 40)));
}

TEST(RunTrial, StructuredSearchFindsTheHotspotGivenTime) {
  ScenarioConfig cfg = named_scenario("single-hotspot");
  cfg.deadline = 5000;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto inst = generate_scenario(cfg, seed);
    for (int start : {0, 12, 24}) {
      const auto r = run_trial(inst, agent_of(AgentKind::SS), "none", seed, start);
      EXPECT_EQ(r.counts.tp, 1) << "seed " << seed << " start " << start;
      EXPECT_EQ(r.counts.fn, 0);
      EXPECT_EQ(r.counts.total(), 25);
    }
  }
}

TEST(Serialization, TrialJsonRoundTrip) {
  ScenarioConfig cfg = named_scenario("single-hotspot");
  cfg.anomalies = named_condition("remora+blockade+flow").anomalies;
  const auto inst = generate_scenario(cfg, 2);
  AgentConfig c = default_agent_config();
  c.kind = AgentKind::AIGO;
  c.arbitration = Arbitration::ASGO;
  const auto r = run_trial(inst, {"ASGO", c}, "remora+blockade+flow", 2, 8);
  const auto back = trial_from_json(trial_to_json(r));
  EXPECT_EQ(trial_to_json(back), trial_to_json(r));
  EXPECT_EQ(back.counts, r.counts);
  EXPECT_EQ(back.classification, r.classification);
  EXPECT_THROW(trial_from_json("not json"), std::exception);
}

TEST(Serialization, ResultsCsvHeader) {
  const auto csv = results_csv({{"pooled", "SS", "remora", metrics_from_counts({4, 0, 20, 1})}});
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "scenario,agent,condition,TP,FP,TN,FN,accuracy,precision,recall,f1");
  EXPECT_NE(csv.find("pooled,SS,remora,4,0,20,1,"), std::string::npos);
}

TEST(Aggregate, PooledAndPerScenarioRows) {
  std::vector<TrialResult> ts;
  for (const char* sc : {"a", "b"})
    for (int i = 0; i < 2; ++i) {
      TrialResult t = with_counts(1, i, 23 - i, 1);
      t.scenario = sc;
      t.agent = "SS";
      t.condition = "remora";
      ts.push_back(t);
    }
  const auto rows = aggregate(ts);
  const auto* pooled = find_row(rows, "SS", "remora");
  ASSERT_NE(pooled, nullptr);
  EXPECT_EQ(pooled->metrics.counts, (Confusion{4, 2, 90, 4}));
  const auto* a = find_row(rows, "SS", "remora", "a");
  ASSERT_NE(a, nullptr);
  EXPECT_EQ(a->metrics.counts, (Confusion{2, 1, 45, 2}));
  EXPECT_EQ(find_row(rows, "ES", "remora"), nullptr);
}

TEST(Aggregate, TrialOrderDoesNotMatter) {
  const auto res = run_experiment(small_plan(5));
  auto shuffled = res.trials;
  Rng rng(1);
  for (std::size_t i = shuffled.size(); i > 1; --i) std::swap(shuffled[i - 1], shuffled[rng.below(i)]);
  EXPECT_EQ(results_csv(aggregate(shuffled)), results_csv(res.rows));
  for (const auto& t : res.trials) EXPECT_EQ(t.counts.total(), 25);
}

TEST(Experiment, ReportsAreByteIdenticalAcrossRunsAndWorkers) {
  const auto a = run_experiment(small_plan(7));
  RunOptions opts;
  opts.workers = 3;
  const auto b = run_experiment(small_plan(7), opts);
  EXPECT_EQ(results_json(a), results_json(b));
  EXPECT_EQ(results_csv(a.rows), results_csv(b.rows));
}

TEST(Experiment, ResumesFromCheckpoint) {
  const fs::path dir = scratch("ckpt");
  const std::string path = (dir / "trials.jsonl").string();
  RunOptions opts;
  opts.checkpoint_path = path;
  const auto full = run_experiment(small_plan(8), opts);
  const auto lines = [&] {
    std::ifstream in(path);
    std::vector<std::string> v;
    for (std::string l; std::getline(in, l);) v.push_back(l);
    return v;
  }();
  ASSERT_EQ(lines.size(), full.trials.size());

  // keep half the trials plus a torn line, then resume
  {
    std::ofstream out(path, std::ios::trunc);
    for (std::size_t i = 0; i < lines.size() / 2; ++i) out << lines[i] << "\n";
    out << lines.back().substr(0, lines.back().size() / 2);
  }
  std::size_t reported_done = 0;
  opts.progress = [&](std::size_t done, std::size_t) { reported_done = std::max(reported_done, done); };
  const auto resumed = run_experiment(small_plan(8), opts);
  EXPECT_EQ(results_json(resumed), results_json(full));
  EXPECT_EQ(reported_done, full.trials.size());
  fs::remove_all(dir);
}

TEST(Experiment, TablePlans) {
  EXPECT_EQ(table_plan("T5", 1, 100).agents.size(), 6u);
  EXPECT_EQ(table_plan("T5", 1, 100).scenarios.size(), 3u);
  EXPECT_EQ(table_plan("T6", 1, 100).agents.size(), 4u);
  const auto t7 = table_plan("T7", 1, 100);
  EXPECT_EQ(t7.agents.size(), 3u);
  EXPECT_EQ(t7.conditions.size(), 2u);
  EXPECT_THROW(table_plan("T9", 1, 100), ConfigError);
  EXPECT_THROW(table_plan("T5", 1, 0), ConfigError);
  EXPECT_THROW(named_condition("storm"), ConfigError);
}

TEST(Report, SvgHeatmapShape) {
  const std::vector<double> v(25, 1.0);
  const auto svg = svg_heatmap(v, 5, 5, "dwell");
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_EQ(static_cast<int>(std::count(svg.begin(), svg.end(), '\n') > 0), 1);
  std::size_t rects = 0;
  for (std::size_t p = svg.find("<rect"); p != std::string::npos; p = svg.find("<rect", p + 1)) ++rects;
  EXPECT_GE(rects, 25u);
}
