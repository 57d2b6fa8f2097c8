#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "horizon/aggregation.hpp"
#include "horizon/evaluation.hpp"
#include "horizon/pano_sampler.hpp"
#include "horizon/sfm_labeler.hpp"
#include "horizon/synthetic.hpp"

using namespace horizon;

namespace {

void BM_RenderCutout(benchmark::State& state) {
  static const Panorama pano = make_painted_panorama(512);
  const int size = static_cast<int>(state.range(0));
  const CameraSample cam{1.0, 0.05, 0.02, 60.0};
  for (auto _ : state) benchmark::DoNotOptimize(render_cutout(pano, cam, size));
  state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_RenderCutout)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

std::shared_ptr<const LabelSpace> uniform_space(std::size_t n) {
  std::vector<double> t, r;
  for (std::size_t i = 0; i <= 10 * n; ++i) {
    t.push_back(kPi / 2 - 0.3 + 0.6 * i / (10.0 * n));
    r.push_back(-0.6 + 1.2 * i / (10.0 * n));
  }
  return std::make_shared<LabelSpace>(LabelSpace{build_bins(LabelParameter::kTheta, t, n, true),
                                                 build_bins(LabelParameter::kRho, r, n)});
}

void BM_AggregateNll(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const auto space = uniform_space(n);
  const ImageFrame frame{640, 480};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SubwindowSet set{frame, {}};
  for (const Window& w : make_crop_grid(frame)) {
    std::vector<double> grid(n * n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double di = (double(i) - n / 2.0) / (n / 8.0), dj = (double(j) - n / 2.0) / (n / 8.0);
        sum += grid[i * n + j] = std::exp(-0.5 * (di * di + dj * dj)) + 0.01 * u(rng);
      }
    }
    for (double& g : grid) g /= sum;
    set.subwindows.emplace_back(space, grid, w);
  }
  for (auto _ : state) benchmark::DoNotOptimize(aggregate_nll(set));
}
BENCHMARK(BM_AggregateNll)->Arg(40)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_Auc(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::exponential_distribution<double> e(20.0);
  std::vector<double> errors(static_cast<std::size_t>(state.range(0)));
  for (double& v : errors) v = e(rng);
  for (auto _ : state) benchmark::DoNotOptimize(auc(errors));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Auc)->Arg(1000)->Arg(100000);

void BM_FitHorizonPlane(benchmark::State& state) {
  SyntheticSfmOptions o;
  o.cameras = static_cast<int>(state.range(0));
  o.outlier_fraction = 0.1;
  const SyntheticSfm s = make_synthetic_sfm(o);
  const std::vector<Vec3> dirs = collect_lateral_directions(s.model);
  for (auto _ : state) benchmark::DoNotOptimize(fit_horizon_plane(dirs));
}
BENCHMARK(BM_FitHorizonPlane)->Arg(50)->Arg(1000)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
