#include <numeric>
#include <random>

#include <benchmark/benchmark.h>

#include "keyrep/matching.h"
#include "keyrep/protocol.h"
#include "keyrep/synthetic.h"

namespace keyrep {
namespace {

void BM_FindCorrespondences(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> x(0, 640), y(0, 480), jitter(-2, 2);
  KeypointSet k2;
  k2.width = 640;
  k2.height = 480;
  std::vector<Vec2> mapped;
  for (int i = 0; i < n; ++i) {
    const Vec2 p(x(rng), y(rng));
    k2.points.push_back({p.x() + jitter(rng), p.y() + jitter(rng), 1.0, {}});
    mapped.push_back(p);
  }
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (auto _ : state) benchmark::DoNotOptimize(find_correspondences(k2, idx, mapped, idx, 2.5));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_FindCorrespondences)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

SceneSpec corridor(int frames) {
  SceneSpec s;
  s.kind = SceneKind::kCorridor;
  s.trajectory = linear_trajectory(Vec3::Zero(), Vec3(0, 0, 1), frames);
  return s;
}

void BM_EvaluateKeypointsDepth(benchmark::State& state) {
  const SceneSpec s = corridor(2);
  const FrameBundle a = render(s, 0), b = render(s, 1);
  DetectorConfig det;
  const KeypointSet ka = detect(a.image, det), kb = detect(b.image, det);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_keypoints(a, ka, b, kb, {}));
}
BENCHMARK(BM_EvaluateKeypointsDepth)->Unit(benchmark::kMicrosecond);

void BM_RunSequence(benchmark::State& state) {
  const SceneSource src(corridor(21));
  ProtocolConfig cfg;
  cfg.detectors = {DetectorConfig{}};
  cfg.workers = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_sequence(src, cfg));
}
BENCHMARK(BM_RunSequence)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace
}  // namespace keyrep
