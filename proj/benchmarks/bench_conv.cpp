#include <benchmark/benchmark.h>

#include "volsr/net.hpp"
#include "volsr/rng.hpp"
#include "volsr/tensor.hpp"
#include "volsr/unet.hpp"
#include "volsr/volume.hpp"

using namespace volsr;

namespace {

template <typename T>
Tensor5<T> random_tensor(int n, int c, int nx, int ny, int nz,
                         std::uint64_t seed) {
  Tensor5<T> t(n, c, nx, ny, nz);
  Rng rng(seed);
  for (T &x : t.data)
    x = static_cast<T>(rng.uniform(-1.0, 1.0));
  return t;
}

} // namespace

static void BM_conv3d_forward(benchmark::State &state) {
  const int n = static_cast<int>(state.range(0));
  const int c = static_cast<int>(state.range(1));
  const Tensor5<float> in = random_tensor<float>(1, c, n, n, n / 2, 1);
  const Tensor5<float> kernel = random_tensor<float>(c, c, 3, 3, 3, 2);
  const std::vector<float> bias(static_cast<std::size_t>(c), 0.1f);
  for (auto _ : state) {
    Tensor5<float> out = conv3d_forward(in, kernel, bias);
    benchmark::DoNotOptimize(out.data.data());
  }
  state.SetItemsProcessed(state.iterations() * in.size() * c * 27);
}
BENCHMARK(BM_conv3d_forward)->Args({32, 8})->Args({64, 8})->Args({32, 16});

static void BM_unet_forward(benchmark::State &state) {
  const int n = static_cast<int>(state.range(0));
  NetworkConfig cfg;
  cfg.levels = 2;
  cfg.base_channels = 8;
  const UNetWeights<float> w = init_weights<float>(cfg, 3);
  Volume3D v(n, n, n / 2);
  Rng rng(4);
  for (double &x : v.data)
    x = rng.uniform(0.0, 1.0);
  for (auto _ : state) {
    Volume3D out = unet_forward(v, w);
    benchmark::DoNotOptimize(out.data.data());
  }
  state.SetItemsProcessed(state.iterations() * v.voxels());
}
BENCHMARK(BM_unet_forward)->Arg(32)->Arg(64);
