#include <benchmark/benchmark.h>

#include "seld/features.hpp"
#include "seld/linalg.hpp"
#include "seld/simulate.hpp"

namespace {

const seld::MultichannelAudio& clip() {
  static const seld::MultichannelAudio audio = [] {
    seld::SceneSpec scene;
    scene.duration = 10.0;
    scene.snr_db = 20.0;
    scene.sources.push_back({30.0, 10.0, seld::WhiteNoise{1}, 0.0, 10.0, 0, 0.1});
    scene.sources.push_back({-120.0, -20.0, seld::WhiteNoise{2}, 0.0, 10.0, 1, 0.05});
    return seld::synthesize(scene).audio;
  }();
  return audio;
}

void BM_Feature(benchmark::State& state) {
  const auto kind = static_cast<seld::FeatureKind>(state.range(0));
  const auto cfg = seld::FeatureConfig::defaults(kind);
  const auto geom = seld::ArrayGeometry::tetrahedral();
  for (auto _ : state) {
    auto feat = seld::build_feature(clip(), cfg, geom);
    benchmark::DoNotOptimize(feat.data.data().data());
  }
  state.SetLabel(std::string(seld::to_string(kind)) + ", 10 s clip");
}
BENCHMARK(BM_Feature)
    ->Arg(static_cast<int>(seld::FeatureKind::kSalsaLite))
    ->Arg(static_cast<int>(seld::FeatureKind::kSalsaIpd))
    ->Arg(static_cast<int>(seld::FeatureKind::kMelSpecGcc))
    ->Arg(static_cast<int>(seld::FeatureKind::kSalsa))
    ->Unit(benchmark::kMillisecond);

void BM_Stft(benchmark::State& state) {
  const seld::StftConfig cfg;
  for (auto _ : state) {
    auto spec = seld::stft(clip(), cfg);
    benchmark::DoNotOptimize(spec.data.data().data());
  }
}
BENCHMARK(BM_Stft)->Unit(benchmark::kMillisecond);

void BM_PrincipalEigen4(benchmark::State& state) {
  const auto h = seld::steering_vector(seld::ArrayGeometry::tetrahedral(), 1000.0, 20.0, 5.0);
  seld::SmallMatrix r = seld::SmallMatrix::outer(h);
  for (std::size_t i = 0; i < 4; ++i) r(i, i) += 0.01;
  for (auto _ : state) {
    auto e = seld::principal_eigenvector(r);
    benchmark::DoNotOptimize(e.value);
  }
}
BENCHMARK(BM_PrincipalEigen4);

}  // namespace

BENCHMARK_MAIN();
