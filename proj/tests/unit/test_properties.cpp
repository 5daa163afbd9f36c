#include <gtest/gtest.h>

#include <algorithm>

#include "../support/oracles.hpp"
#include "../support/quadrature.hpp"
#include "reefsurvey/ergodic.hpp"
#include "reefsurvey/harness.hpp"

using namespace reef;

namespace {

constexpr int kCases = 1000;

Confusion random_confusion(Rng& rng) {
  // mix of tiny and large counts so zero denominators show up
  const auto draw = [&] {
    return rng.bernoulli(0.2) ? 0LL : static_cast<long long>(rng.below(rng.bernoulli(0.5) ? 5 : 100000));
  };
  return {draw(), draw(), draw(), draw()};
}

}  // namespace

TEST(MetricProperties, MatchFirstPrinciplesOracle) {
  Rng rng(1001);
  for (int i = 0; i < kCases; ++i) {
    const Confusion c = random_confusion(rng);
    const auto m = metrics_from_counts(c);
    const auto o = oracle::rates(c.tp, c.fp, c.tn, c.fn);
    ASSERT_NEAR(m.accuracy, o.accuracy, 1e-12) << i;
    ASSERT_NEAR(m.precision, o.precision, 1e-12) << i;
    ASSERT_NEAR(m.recall, o.recall, 1e-12) << i;
    ASSERT_NEAR(m.f1, o.f1, 1e-12) << i;
  }
}

TEST(MetricProperties, F1LiesBetweenPrecisionAndRecall) {
  Rng rng(1002);
  int checked = 0;
  for (int i = 0; i < kCases; ++i) {
    const auto m = metrics_from_counts(random_confusion(rng));
    for (double v : {m.accuracy, m.precision, m.recall, m.f1}) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
    if (m.precision > 0.0 && m.recall > 0.0) {
      ++checked;
      ASSERT_GE(m.f1, std::min(m.precision, m.recall) - 1e-15) << i;
      ASSERT_LE(m.f1, std::max(m.precision, m.recall) + 1e-15) << i;
      ASSERT_NEAR(m.f1, 2.0 * m.precision * m.recall / (m.precision + m.recall), 1e-15);
    } else {
      ASSERT_EQ(m.f1, 0.0);
    }
  }
  EXPECT_GT(checked, kCases / 4);
}

TEST(MetricProperties, AccuracyInvariantUnderLabelSwap) {
  Rng rng(1003);
  for (int i = 0; i < kCases; ++i) {
    const Confusion c = random_confusion(rng);
    const Confusion swapped{c.tn, c.fn, c.tp, c.fp};
    ASSERT_EQ(metrics_from_counts(c).accuracy, metrics_from_counts(swapped).accuracy) << i;
  }
}

TEST(MetricProperties, PoolingIsOrderFreeAndAdditive) {
  Rng rng(1004);
  for (int i = 0; i < kCases; ++i) {
    std::vector<TrialResult> rs(1 + rng.below(6));
    Confusion sum;
    for (auto& r : rs) {
      std::vector<bool> t(25), p(25);
      for (std::size_t k = 0; k < 25; ++k) {
        t[k] = rng.bernoulli(0.2);
        p[k] = rng.bernoulli(0.3);
      }
      r.counts = confusion_of(t, p);
      ASSERT_EQ(r.counts.total(), 25);
      sum += r.counts;
    }
    const auto m = compute_metrics(rs);
    std::reverse(rs.begin(), rs.end());
    ASSERT_EQ(m.counts, sum);
    ASSERT_EQ(compute_metrics(rs).f1, m.f1);
  }
}

TEST(ErgodicProperties, MetricIsNonNegative) {
  const Rect d{0, 0, 20, 20};
  const ErgodicSpec spec(d, 6, 10);
  Rng rng(1005);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> v(16 * 16);
    for (auto& x : v) x = rng.uniform();
    const auto map = InfoMap::from_unnormalized(d, 16, v);
    std::vector<TrajectorySample> s;
    const auto n = 1 + rng.below(20);
    for (std::uint64_t k = 0; k < n; ++k) s.push_back({static_cast<double>(k), {rng.uniform(0, 20), rng.uniform(0, 20)}});
    const Trajectory traj(s);
    ASSERT_GE(ergodic_metric(spec, traj, map), 0.0);
    const auto phi = phi_coeffs(spec, map);
    ASSERT_EQ(ergodic_metric(spec, phi, phi), 0.0);
  }
}

TEST(ErgodicProperties, BasisBoundedByInverseNorm) {
  const Rect d{0, 0, 20, 20};
  const ErgodicSpec spec(d, 8, 10);
  Rng rng(1006);
  std::vector<double> f(static_cast<std::size_t>(spec.count()));
  for (int i = 0; i < kCases; ++i) {
    basis_all(spec, {rng.uniform(0, 20), rng.uniform(0, 20)}, f);
    for (int k = 0; k < spec.count(); ++k)
      ASSERT_LE(std::abs(f[static_cast<std::size_t>(k)]), 1.0 / spec.norm_factor(spec.unflat(k)) + 1e-15);
  }
}

TEST(SearchProperties, SelectorVisitsCellsAtMostOnceAndMatchesTranscription) {
  Rng rng(1007);
  for (int i = 0; i < 300; ++i) {
    const int rows = 1 + static_cast<int>(rng.below(5));
    const int cols = 1 + static_cast<int>(rng.below(5));
    const auto g = oracle::random_grid(rng, rows, cols, 1 + static_cast<int>(rng.below(30)));
    const oracle::Cell start{static_cast<int>(rng.below(static_cast<std::uint64_t>(rows))),
                             static_cast<int>(rng.below(static_cast<std::uint64_t>(cols)))};
    auto order = oracle::selector_order(g, start);
    ASSERT_EQ(order, oracle::structured_search(g, start)) << i;
    ASSERT_EQ(order.front(), start);
    std::sort(order.begin(), order.end());
    ASSERT_EQ(std::adjacent_find(order.begin(), order.end()), order.end());
    ASSERT_LE(order.size(), static_cast<std::size_t>(rows * cols));
  }
}

TEST(SearchProperties, SortedStackIsAscendingWithCellTieBreak) {
  Rng rng(1008);
  for (int i = 0; i < kCases; ++i) {
    VisitedStack s;
    const SurveyRegion r;
    for (auto c : r.cells())
      if (rng.bernoulli(0.5)) s.push(c, static_cast<int>(rng.below(5)));
    s.sort_by_max_unique_tags();
    const auto& e = s.entries();
    for (std::size_t k = 1; k < e.size(); ++k) {
      ASSERT_LE(e[k - 1].count, e[k].count);
      if (e[k - 1].count == e[k].count) ASSERT_GT(e[k - 1].cell, e[k].cell);
    }
  }
}

TEST(SimProperties, ClassificationIsMonotoneInCount) {
  Rng rng(1009);
  for (int i = 0; i < kCases; ++i) {
    const int theta = 1 + static_cast<int>(rng.below(100));
    const int a = static_cast<int>(rng.below(200));
    const int b = a + static_cast<int>(rng.below(50));
    if (classify_cell(a, theta) == CellClass::Hotspot) ASSERT_EQ(classify_cell(b, theta), CellClass::Hotspot);
    ASSERT_EQ(classify_cell(a, theta) == CellClass::Hotspot, a >= theta);
  }
}

TEST(SimProperties, DisplacementNeverExceedsEffectiveSpeedWithoutFlow) {
  Rng rng(1010);
  AgentState a;
  a.position = {10, 10};
  a.deadline = kCases;
  World w(SurveyRegion{}, {}, a);
  for (int i = 0; i < kCases; ++i) {
    if (rng.bernoulli(0.01)) w.inject(AnomalyEvent::remora(w.clock()));
    if (rng.bernoulli(0.01)) w.clear_remora();
    const double speed = w.agent().effective_speed();
    const Vec2 before = w.agent().position;
    w.step({{rng.uniform(-3, 3), rng.uniform(-3, 3)}});
    ASSERT_LE(distance(before, w.agent().position), speed + 1e-12);
    ASSERT_TRUE(w.region().bounds().contains(w.agent().position));
  }
}
