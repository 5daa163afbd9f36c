#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "../support/oracles.hpp"
#include "reefsurvey/harness.hpp"
#include "reefsurvey/search.hpp"

using namespace reef;

namespace {

EdgeLookup constant_edges(EdgeEstimates e) {
  return [e](CellIndex) { return e; };
}

double coefficient_of_variation(const std::vector<int>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double var = 0.0;
  for (int x : v) var += (x - mean) * (x - mean);
  return std::sqrt(var / static_cast<double>(v.size())) / mean;
}

AgentSpec agent_of(AgentKind kind) {
  AgentConfig c = default_agent_config();
  c.kind = kind;
  return {to_string(kind), c};
}

}  // namespace

TEST(VisitedStackTest, PushPopAndUniqueness) {
  VisitedStack s;
  s.push({0, 0}, 3);
  s.push({0, 1}, 7);
  EXPECT_THROW(s.push({0, 0}, 1), std::invalid_argument);
  EXPECT_EQ(s.top().cell, (CellIndex{0, 1}));
  EXPECT_EQ(s.pop().count, 7);
  EXPECT_EQ(s.pop().count, 3);
  EXPECT_THROW(s.pop(), std::logic_error);
}

TEST(VisitedStackTest, SortPutsBestOnTopAndLowerCellFirstOnTies) {
  VisitedStack s;
  s.push({1, 1}, 5);
  s.push({0, 2}, 9);
  s.push({0, 1}, 5);
  s.push({2, 0}, 1);
  s.sort_by_max_unique_tags();
  const auto& e = s.entries();
  EXPECT_EQ(e[0].cell, (CellIndex{2, 0}));
  EXPECT_EQ(e[1].cell, (CellIndex{1, 1}));
  EXPECT_EQ(e[2].cell, (CellIndex{0, 1}));
  EXPECT_EQ(e[3].cell, (CellIndex{0, 2}));
}

TEST(CSearch, ReturnsStrictMaxNeighbour) {
  const SurveyRegion r(12.0, 12.0, 3, 3);
  VisitedStack v;
  v.push({1, 1}, 4);
  EdgeEstimates e{1.0, 2.0, 9.0, 3.0};
  const auto out = csearch(r, {1, 1}, v, {{1, 1}}, constant_edges(e));
  ASSERT_TRUE(out.cell);
  EXPECT_EQ(*out.cell, (CellIndex{1, 2}));
  EXPECT_EQ(out.pops, 0);
  EXPECT_EQ(out.visited.size(), 1u);
}

TEST(CSearch, TiesBreakNorthSouthEastWest) {
  const SurveyRegion r(12.0, 12.0, 3, 3);
  const auto out = csearch(r, {1, 1}, {}, {{1, 1}}, constant_edges({}));
  EXPECT_EQ(*out.cell, (CellIndex{2, 1}));
  const auto south = csearch(r, {1, 1}, {}, {{1, 1}, {2, 1}}, constant_edges({}));
  EXPECT_EQ(*south.cell, (CellIndex{0, 1}));
}

TEST(CSearch, PopsAndRecursesFromStart) {
  const SurveyRegion r(12.0, 12.0, 3, 3);
  VisitedStack v;
  v.push({0, 0}, 2);
  // (1,1) is boxed in; popping the stack moves the search to (0,0) whose west/south are off-grid
  std::set<CellIndex> surveyed{{0, 0}, {1, 1}, {0, 1}, {2, 1}, {1, 2}, {1, 0}};
  const auto out = csearch(r, {1, 1}, v, surveyed, constant_edges({}));
  EXPECT_EQ(out.pops, 1);
  EXPECT_TRUE(out.visited.empty());
  EXPECT_EQ(out.origin, (CellIndex{0, 0}));
  EXPECT_FALSE(out.cell);
}

TEST(CSearch, PopRevealsFreshNeighbour) {
  const SurveyRegion r(12.0, 12.0, 3, 3);
  VisitedStack v;
  v.push({2, 2}, 2);
  std::set<CellIndex> surveyed{{0, 0}, {1, 0}, {0, 1}, {2, 2}};
  const auto out = csearch(r, {0, 0}, v, surveyed, constant_edges({}));
  EXPECT_EQ(out.pops, 1);
  EXPECT_EQ(out.origin, (CellIndex{2, 2}));
  ASSERT_TRUE(out.cell);
  EXPECT_EQ(*out.cell, (CellIndex{1, 2}));
}

TEST(CSearch, ExhaustedGridReturnsNoneAndEmptyStack) {
  const SurveyRegion r(8.0, 8.0, 2, 2);
  VisitedStack v;
  std::set<CellIndex> all;
  for (auto c : r.cells()) {
    v.push(c, 1);
    all.insert(c);
  }
  const auto out = csearch(r, {1, 1}, v, all, constant_edges({}));
  EXPECT_FALSE(out.cell);
  EXPECT_TRUE(out.visited.empty());
  EXPECT_EQ(out.pops, 4);
}

TEST(Structured, TwoByTwoScriptedOrder) {
  // A=(0,0) 10, B=(0,1) 5, C=(1,0) 3, D=(1,1) 1; each edge estimate is the neighbour's count.
  oracle::Grid g;
  g.rows = 2;
  g.cols = 2;
  g.count = {{{0, 0}, 10}, {{0, 1}, 5}, {{1, 0}, 3}, {{1, 1}, 1}};
  for (auto& [c, n] : g.count) {
    std::array<int, 4> e{};
    for (int d = 0; d < 4; ++d)
      if (auto nb = oracle::step(g, c, d)) e[static_cast<std::size_t>(d)] = g.count.at(*nb);
    g.expected[c] = e;
  }
  const std::vector<oracle::Cell> want{{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  EXPECT_EQ(oracle::structured_search(g, {0, 0}), want);
  EXPECT_EQ(oracle::selector_order(g, {0, 0}), want);
}

TEST(Structured, MonotoneRidgeNeverBacktracks) {
  const SurveyRegion r(20.0, 4.0, 1, 5);
  StructuredSelector sel(r, {0, 0});
  int pings = 1;
  std::vector<CellIndex> order;
  while (auto p = sel.propose()) {
    EdgeEstimates e;
    e.east = 100.0;  // the ridge keeps rising eastward
    sel.accept(*p, pings++, e);
    order.push_back(p->cell);
  }
  EXPECT_EQ(sel.backtracks(), 0);
  ASSERT_EQ(order.size(), 5u);
  for (int c = 0; c < 5; ++c) EXPECT_EQ(order[static_cast<std::size_t>(c)], (CellIndex{0, c}));
}

TEST(Structured, SnakeRidgeOnSquareGridNeverBacktracks) {
  const SurveyRegion r(12.0, 12.0, 3, 3);
  const std::vector<CellIndex> snake{{0, 0}, {0, 1}, {0, 2}, {1, 2}, {1, 1}, {1, 0}, {2, 0}, {2, 1}, {2, 2}};
  StructuredSelector sel(r, snake.front());
  std::size_t i = 0;
  while (auto p = sel.propose()) {
    ASSERT_LT(i, snake.size());
    EXPECT_EQ(p->cell, snake[i]);
    EdgeEstimates e;
    if (i + 1 < snake.size()) {
      for (Direction d : kDirections)
        if (r.neighbor(snake[i], d) == snake[i + 1]) e.set(d, 50.0);
    }
    sel.accept(*p, static_cast<int>(i) + 1, e);
    ++i;
  }
  EXPECT_EQ(i, snake.size());
  EXPECT_EQ(sel.backtracks(), 0);
}

TEST(Structured, SingleCellGrid) {
  const SurveyRegion r(4.0, 4.0, 1, 1);
  StructuredSelector sel(r, {0, 0});
  auto p = sel.propose();
  ASSERT_TRUE(p);
  EXPECT_TRUE(p->first);
  sel.accept(*p, 3, {});
  EXPECT_FALSE(sel.propose());
}

TEST(Structured, SkippedCellIsNeverOffered) {
  const SurveyRegion r(8.0, 4.0, 1, 2);
  StructuredSelector sel(r, {0, 0});
  sel.accept(*sel.propose(), 1, {});
  auto p = sel.propose();
  ASSERT_TRUE(p);
  sel.skip(*p);
  EXPECT_FALSE(sel.propose());
}

TEST(Structured, MatchesLiteralTranscriptionOnRandomGrids) {
  Rng rng(123);
  for (int n = 0; n < 200; ++n) {
    const int rows = 1 + static_cast<int>(rng.below(4));
    const int cols = 1 + static_cast<int>(rng.below(4));
    const auto g = oracle::random_grid(rng, rows, cols, 6);
    const oracle::Cell start{static_cast<int>(rng.below(static_cast<std::uint64_t>(rows))),
                             static_cast<int>(rng.below(static_cast<std::uint64_t>(cols)))};
    const auto want = oracle::structured_search(g, start);
    ASSERT_EQ(oracle::selector_order(g, start), want) << "grid " << n;
    ASSERT_LE(want.size(), static_cast<std::size_t>(rows * cols));
  }
}

TEST(Lawnmower, PathLengthOfAFourUnitCell) {
  const Rect cell{0.0, 0.0, 4.0, 4.0};
  const auto path = lawnmower_path(cell, {0.0, 0.0}, 2.0, 0.5);
  // two lanes at y=1 and y=3 from x=0.5 to 3.5, then the same route back
  EXPECT_DOUBLE_EQ(path_length(path), 16.0);
  EXPECT_EQ(path.front(), (Vec2{0.5, 1.0}));
  for (const auto& p : path) EXPECT_TRUE(cell.contains(p));
}

TEST(Lawnmower, StartsAtNearestCorner) {
  const Rect cell{8.0, 8.0, 12.0, 12.0};
  const auto path = lawnmower_path(cell, {13.0, 13.0});
  EXPECT_EQ(path.front(), (Vec2{11.5, 11.0}));
  EXPECT_EQ(path.back(), path.front());
}

TEST(Lawnmower, LaneSpacingNeverExceedsRadius) {
  const Rect cell{0.0, 0.0, 4.0, 4.0};
  for (double radius : {0.7, 1.0, 1.5, 2.0, 3.0}) {
    const auto path = lawnmower_path(cell, {0.0, 0.0}, radius);
    std::set<double> ys;
    for (const auto& p : path) ys.insert(p.y);
    std::vector<double> lanes(ys.begin(), ys.end());
    for (std::size_t i = 1; i < lanes.size(); ++i) EXPECT_LE(lanes[i] - lanes[i - 1], radius + 1e-12);
    EXPECT_LE(lanes.front() - cell.y0, radius / 2.0 + 1e-12);
  }
}

TEST(PointAlong, InterpolatesAndClamps) {
  const std::vector<Vec2> p{{0, 0}, {3, 0}, {3, 4}};
  EXPECT_EQ(point_along(p, -1.0), (Vec2{0, 0}));
  EXPECT_EQ(point_along(p, 1.5), (Vec2{1.5, 0}));
  EXPECT_EQ(point_along(p, 5.0), (Vec2{3, 2}));
  EXPECT_EQ(point_along(p, 99.0), (Vec2{3, 4}));
  EXPECT_THROW(point_along(std::vector<Vec2>{}, 0.0), std::invalid_argument);
}

TEST(Tally, EmptyCellGivesZeroEverywhere) {
  const Rect cell{8.0, 8.0, 12.0, 12.0};
  SurveyTally t(cell, 2.0);
  for (const auto& p : lawnmower_path(cell, cell.center())) t.observe(p, {});
  EXPECT_EQ(t.unique_count(), 0);
  EXPECT_EQ(t.edges(), (EdgeEstimates{0, 0, 0, 0}));
}

TEST(Tally, NoObservationFallsBackToEqualEdges) {
  SurveyTally t(Rect{0, 0, 4, 4}, 2.0);
  const auto e = t.edges(0.5);
  EXPECT_EQ(e.north, e.south);
  EXPECT_EQ(e.east, e.west);
  EXPECT_EQ(e.north, 0.0);
}

TEST(Tally, NorthClusterGivesNorthTheStrictMax) {
  const Rect cell{8.0, 8.0, 12.0, 12.0};
  std::vector<FishTag> tags;
  for (int i = 0; i < 12; ++i) tags.push_back({i, {8.3 + 0.3 * i, 11.8}, 1, 0});
  AgentState a;
  const auto path = lawnmower_path(cell, {8.0, 8.0});
  a.position = path.front();
  World w(SurveyRegion{}, tags, a);
  SurveyTally t(cell, 2.0);
  const double len = path_length(path);
  for (double s = 1.0; s <= len; s += 1.0) {
    const Vec2 target = point_along(path, s);
    const auto out = w.step({target - w.agent().position});
    t.observe(w.agent().position, out.detections);
  }
  const auto e = t.edges();
  EXPECT_EQ(t.unique_count(), 12);
  EXPECT_GT(e.north, e.south);
  EXPECT_GT(e.north, e.east);
  EXPECT_GT(e.north, e.west);
}

TEST(Tally, UntouchedEdgesUseFallbackFraction) {
  const Rect cell{0.0, 0.0, 4.0, 4.0};
  SurveyTally t(cell, 1.0);
  const std::vector<Detection> d{{1, 0, {3.5, 3.5}}, {2, 0, {3.5, 3.5}}, {3, 0, {3.5, 3.5}}, {4, 0, {3.5, 3.5}}};
  t.observe({3.5, 3.5}, d);
  EXPECT_TRUE(t.edge_approached(Direction::North));
  EXPECT_TRUE(t.edge_approached(Direction::East));
  EXPECT_FALSE(t.edge_approached(Direction::South));
  const auto e = t.edges(0.5);
  EXPECT_EQ(e.north, 4.0);
  EXPECT_EQ(e.east, 4.0);
  EXPECT_EQ(e.south, 2.0);
  EXPECT_EQ(e.west, 2.0);
}

TEST(Tally, DistanceToEdge) {
  const Rect cell{0.0, 0.0, 4.0, 4.0};
  EXPECT_DOUBLE_EQ(distance_to_edge(cell, Direction::North, {1.0, 1.0}), 3.0);
  EXPECT_DOUBLE_EQ(distance_to_edge(cell, Direction::West, {1.0, 1.0}), 1.0);
  EXPECT_DOUBLE_EQ(distance_to_edge(cell, Direction::East, {6.0, 7.0}), std::hypot(2.0, 3.0));
}

TEST(ErgodicSearch, DeadlineZeroLeavesEmptyLog) {
  ScenarioConfig cfg = named_scenario("single-hotspot");
  cfg.deadline = 0;
  const auto inst = generate_scenario(cfg, 1);
  TrialLog log;
  const auto r = run_trial(inst, agent_of(AgentKind::ES), "none", 1, 0, &log);
  EXPECT_TRUE(log.surveys.empty());
  EXPECT_TRUE(log.detections.empty());
  EXPECT_EQ(r.cycles_used, 0);
}

TEST(ErgodicSearch, UniformFieldSpreadsDwell) {
  ScenarioConfig cfg = named_scenario("single-hotspot");
  cfg.hotspot_centers.clear();
  double total = 0.0;
  int below = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto inst = generate_scenario(cfg, seed);
    TrialLog log;
    run_trial(inst, agent_of(AgentKind::ES), "none", seed, static_cast<int>(seed), &log);
    ASSERT_EQ(log.dwell.size(), 25u);
    const double cv = coefficient_of_variation(log.dwell);
    RecordProperty("cv_seed_" + std::to_string(seed), std::to_string(cv));
    total += cv;
    if (cv < 0.5) ++below;
  }
  EXPECT_LT(total / 20.0, 0.5);
  EXPECT_GE(below, 18);
}

TEST(ErgodicSearch, ClusterCellGetsTheMostDwell) {
  const ScenarioConfig cfg = named_scenario("single-hotspot");
  const SurveyRegion r;
  const int hot = r.linear_index(r.cell_of(cfg.hotspot_centers.front()));
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto inst = generate_scenario(cfg, seed);
    TrialLog log;
    run_trial(inst, agent_of(AgentKind::ES), "none", seed, 12, &log);
    const auto it = std::max_element(log.dwell.begin(), log.dwell.end());
    EXPECT_EQ(static_cast<int>(it - log.dwell.begin()), hot) << "seed " << seed;
  }
}

TEST(CellSelection, SsAndEscssFollowTheSameOrderingRule) {
  // Replaying each agent's own survey results through a fresh selector reproduces its cell order.
  const auto inst = generate_scenario(named_scenario("inner-5"), 3);
  for (AgentKind kind : {AgentKind::SS, AgentKind::ESCSS}) {
    TrialLog log;
    run_trial(inst, agent_of(kind), "none", 3, 7, &log);
    ASSERT_FALSE(log.surveys.empty());
    StructuredSelector sel(inst.region, log.surveys.front().cell);
    for (const auto& rec : log.surveys) {
      if (rec.partial) break;
      auto p = sel.propose();
      ASSERT_TRUE(p) << to_string(kind);
      ASSERT_EQ(p->cell, rec.cell) << to_string(kind);
      sel.accept(*p, rec.unique_count, rec.edges);
    }
  }
}
