#include <benchmark/benchmark.h>

#include "volsr/fft.hpp"
#include "volsr/kspace.hpp"
#include "volsr/rng.hpp"
#include "volsr/volume.hpp"

using namespace volsr;

namespace {

Volume3D bench_volume(int nx, int ny, int nz) {
  Volume3D v(nx, ny, nz);
  Rng rng(1);
  for (double &x : v.data)
    x = rng.uniform(0.0, 1.0);
  return v;
}

} // namespace

static void BM_fft3d_forward(benchmark::State &state) {
  const int n = static_cast<int>(state.range(0));
  const Volume3D v = bench_volume(n, n, n);
  std::vector<std::complex<double>> buf(v.data.begin(), v.data.end());
  for (auto _ : state) {
    auto work = buf;
    fft3d(work, v.nx, v.ny, v.nz, false);
    benchmark::DoNotOptimize(work.data());
  }
  state.SetItemsProcessed(state.iterations() * v.voxels());
}
BENCHMARK(BM_fft3d_forward)->Arg(32)->Arg(64)->Arg(96);

static void BM_degrade(benchmark::State &state) {
  const int n = static_cast<int>(state.range(0));
  const Volume3D v = bench_volume(n, n, n / 2);
  DegradeConfig cfg;
  cfg.frac_y = cfg.frac_z = 0.5;
  cfg.pf_y = cfg.pf_z = 0.75;
  for (auto _ : state) {
    Volume3D out = degrade(v, cfg);
    benchmark::DoNotOptimize(out.data.data());
  }
  state.SetItemsProcessed(state.iterations() * v.voxels());
}
BENCHMARK(BM_degrade)->Arg(64)->Arg(128);
