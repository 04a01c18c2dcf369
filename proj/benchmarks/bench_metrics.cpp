#include <benchmark/benchmark.h>

#include "volsr/metrics.hpp"
#include "volsr/rng.hpp"
#include "volsr/volume.hpp"

using namespace volsr;

namespace {

Volume3D bench_volume(int nx, int ny, int nz, std::uint64_t seed) {
  Volume3D v(nx, ny, nz);
  Rng rng(seed);
  for (double &x : v.data)
    x = rng.uniform(0.0, 1.0);
  return v;
}

} // namespace

static void BM_ssim(benchmark::State &state) {
  const int n = static_cast<int>(state.range(0));
  const Volume3D a = bench_volume(n, n, n / 2, 1);
  const Volume3D b = bench_volume(n, n, n / 2, 2);
  for (auto _ : state) {
    const double s = ssim(a, b);
    benchmark::DoNotOptimize(s);
  }
  state.SetItemsProcessed(state.iterations() * a.voxels());
}
BENCHMARK(BM_ssim)->Arg(64)->Arg(128);

static void BM_mse(benchmark::State &state) {
  const int n = static_cast<int>(state.range(0));
  const Volume3D a = bench_volume(n, n, n / 2, 1);
  const Volume3D b = bench_volume(n, n, n / 2, 2);
  for (auto _ : state) {
    const double s = mse(a, b);
    benchmark::DoNotOptimize(s);
  }
  state.SetItemsProcessed(state.iterations() * a.voxels());
}
BENCHMARK(BM_mse)->Arg(64)->Arg(128);

static void BM_edge_sharpness(benchmark::State &state) {
  Volume3D v(64, 64, 32, 1.0, 1.0, 1.0);
  for (int z = 0; z < v.nz; ++z)
    for (int y = 0; y < v.ny; ++y)
      for (int x = 0; x < v.nx; ++x) {
        const double dx = x - 31.5, dy = y - 31.5;
        v.at(x, y, z) =
            dx * dx + dy * dy < 12.0 * 12.0 ? 0.9f : 0.1f;
      }
  const Contour c = circle_contour({32.0, 32.0, 16.0}, {0.0, 0.0, 1.0}, 12.0,
                                   60);
  for (auto _ : state) {
    const double s = edge_sharpness(v, c);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_edge_sharpness);

BENCHMARK_MAIN();
