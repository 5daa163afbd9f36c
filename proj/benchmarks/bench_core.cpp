#include <benchmark/benchmark.h>

#include "reefsurvey/ergodic.hpp"
#include "reefsurvey/harness.hpp"

using namespace reef;

namespace {

const Rect kDomain{0.0, 0.0, 20.0, 20.0};

void BM_BasisAll(benchmark::State& state) {
  const ErgodicSpec spec(kDomain, static_cast<int>(state.range(0)), 10);
  std::vector<double> v(static_cast<std::size_t>(spec.count())), gx(v.size()), gy(v.size());
  Vec2 p{3.1, 7.7};
  for (auto _ : state) {
    basis_all(spec, p, v, gx, gy);
    benchmark::DoNotOptimize(v.data());
    p.x = p.x > 19.0 ? 0.5 : p.x + 0.37;
  }
}
BENCHMARK(BM_BasisAll)->Arg(4)->Arg(8);

void BM_PhiCoeffs(benchmark::State& state) {
  const ErgodicSpec spec(kDomain, 8, 10);
  std::vector<double> v(64 * 64);
  Rng rng(1);
  for (auto& x : v) x = rng.uniform();
  const auto map = InfoMap::from_unnormalized(kDomain, 64, v);
  for (auto _ : state) benchmark::DoNotOptimize(phi_coeffs(spec, map));
}
BENCHMARK(BM_PhiCoeffs);

void BM_ControllerStep(benchmark::State& state) {
  const ErgodicSpec spec(kDomain, 8, 10);
  ErgodicController ctl(spec, 1, {static_cast<int>(state.range(0)), 12, 1e-6});
  Vec2 p{4.0, 4.0};
  double t = 0.0;
  for (auto _ : state) {
    ctl.record(t, p);
    p = kDomain.clamp(p + ctl.step(p, 1.0).velocity);
    t += 1.0;
  }
}
BENCHMARK(BM_ControllerStep)->Arg(12)->Arg(50);

void BM_FitInfoMap(benchmark::State& state) {
  const auto inst = generate_scenario(named_scenario("single-hotspot"), 1);
  AgentConfig c = default_agent_config();
  c.kind = AgentKind::ES;
  TrialLog log;
  run_trial(inst, {"ES", c}, "none", 1, 0, &log);
  for (auto _ : state)
    benchmark::DoNotOptimize(fit_info_map(log.detections, log.visits, kDomain, kDomain));
}
BENCHMARK(BM_FitInfoMap)->Unit(benchmark::kMillisecond);

void BM_Trial(benchmark::State& state) {
  ScenarioConfig cfg = named_scenario("single-hotspot");
  cfg.anomalies = named_condition("remora+blockade+flow").anomalies;
  const auto inst = generate_scenario(cfg, 1);
  AgentConfig c = default_agent_config();
  c.kind = static_cast<AgentKind>(state.range(0));
  c.arbitration = Arbitration::ASGO;
  int start = 0;
  for (auto _ : state) benchmark::DoNotOptimize(run_trial(inst, {"bench", c}, "bench", 1, start++ % 100));
  state.SetLabel(to_string(c.kind));
}
BENCHMARK(BM_Trial)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
