#include <random>

#include <benchmark/benchmark.h>

#include "keyrep/detectors.h"
#include "keyrep/image.h"
#include "keyrep/synthetic.h"

namespace keyrep {
namespace {

ImageGray noise_image(int width, int height) {
  std::mt19937 rng(1);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<float> px(static_cast<std::size_t>(width) * height);
  for (float& v : px) v = u(rng);
  return gaussian_blur(ImageGray(width, height, std::move(px)), 1.0);
}

void BM_Fast(benchmark::State& state) {
  const ImageGray img = noise_image(static_cast<int>(state.range(0)),
                                    static_cast<int>(state.range(0)) * 3 / 4);
  for (auto _ : state) benchmark::DoNotOptimize(detect_fast(img));
  state.SetItemsProcessed(state.iterations() * img.width() * img.height());
}
BENCHMARK(BM_Fast)->Arg(320)->Arg(640)->Unit(benchmark::kMillisecond);

void BM_Harris(benchmark::State& state) {
  const ImageGray img = noise_image(static_cast<int>(state.range(0)),
                                    static_cast<int>(state.range(0)) * 3 / 4);
  for (auto _ : state) benchmark::DoNotOptimize(detect_harris(img));
  state.SetItemsProcessed(state.iterations() * img.width() * img.height());
}
BENCHMARK(BM_Harris)->Arg(320)->Arg(640)->Unit(benchmark::kMillisecond);

void BM_Dog(benchmark::State& state) {
  const ImageGray img = noise_image(static_cast<int>(state.range(0)),
                                    static_cast<int>(state.range(0)) * 3 / 4);
  for (auto _ : state) benchmark::DoNotOptimize(detect_dog(img));
  state.SetItemsProcessed(state.iterations() * img.width() * img.height());
}
BENCHMARK(BM_Dog)->Arg(320)->Arg(640)->Unit(benchmark::kMillisecond);

void BM_GaussianBlur(benchmark::State& state) {
  const ImageGray img = noise_image(640, 480);
  const double sigma = static_cast<double>(state.range(0)) / 10.0;
  for (auto _ : state) benchmark::DoNotOptimize(gaussian_blur(img, sigma));
}
BENCHMARK(BM_GaussianBlur)->Arg(10)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_RenderCorridor(benchmark::State& state) {
  SceneSpec s;
  s.kind = SceneKind::kCorridor;
  s.trajectory = linear_trajectory(Vec3::Zero(), Vec3(0, 0, 1), 1);
  for (auto _ : state) benchmark::DoNotOptimize(render(s, 0));
}
BENCHMARK(BM_RenderCorridor)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace keyrep
