#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "helpers.hpp"
#include "volsr/errors.hpp"
#include "volsr/fft.hpp"
#include "volsr/rng.hpp"

using namespace volsr;

namespace {

std::vector<cplx> random_signal(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<cplx> x(n);
  for (cplx &c : x) c = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
  return x;
}

double max_cplx_diff(const std::vector<cplx> &a, const std::vector<cplx> &b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

} // namespace

TEST_SUITE_BEGIN("fft");

TEST_CASE("1d transform matches the direct DFT across lengths") {
  // covers radix-2 (powers of two) and Bluestein (everything else)
  for (int n : {1, 2, 3, 4, 5, 7, 8, 12, 16, 31, 32, 63, 100}) {
    std::vector<cplx> x = random_signal(n, 1000 + n);
    std::vector<cplx> want = vt::naive_dft(x, false);
    Fft1d plan(n);
    plan.forward(x.data());
    CHECK_MESSAGE(max_cplx_diff(x, want) < 1e-10, "forward n=", n);

    std::vector<cplx> y = random_signal(n, 2000 + n);
    want = vt::naive_dft(y, true);
    plan.inverse(y.data());
    CHECK_MESSAGE(max_cplx_diff(y, want) < 1e-10, "inverse n=", n);
  }
}

TEST_CASE("inverse undoes forward") {
  for (int n : {2, 6, 17, 32, 45}) {
    const std::vector<cplx> x = random_signal(n, 300 + n);
    std::vector<cplx> y = x;
    Fft1d plan(n);
    plan.forward(y.data());
    plan.inverse(y.data());
    CHECK(max_cplx_diff(y, x) < 1e-12);
  }
}

TEST_CASE("forward satisfies Parseval with the 1/n convention") {
  for (int n : {8, 13, 32}) {
    std::vector<cplx> x = random_signal(n, 50 + n);
    double time_energy = 0.0;
    for (const cplx &c : x) time_energy += std::norm(c);
    Fft1d plan(n);
    plan.forward(x.data());
    double freq_energy = 0.0;
    for (const cplx &c : x) freq_energy += std::norm(c);
    freq_energy /= n;
    CHECK(std::abs(time_energy - freq_energy) < 1e-12 * time_energy);
  }
}

TEST_CASE("unit impulse transforms to a flat spectrum") {
  std::vector<cplx> x(16, 0.0);
  x[0] = 1.0;
  Fft1d plan(16);
  plan.forward(x.data());
  for (const cplx &c : x) CHECK(std::abs(c - cplx(1.0, 0.0)) < 1e-13);
}

TEST_CASE("3d transform equals the separable direct DFT") {
  const int nx = 4, ny = 6, nz = 5;
  std::vector<cplx> a = random_signal(nx * ny * nz, 77);
  std::vector<cplx> want = a;
  for (int axis : {0, 1, 2}) vt::naive_dft_axis(want, nx, ny, nz, axis, false);
  fft3d(a, nx, ny, nz, false);
  CHECK(max_cplx_diff(a, want) < 1e-10);

  fft3d(a, nx, ny, nz, true);
  for (int axis : {0, 1, 2}) vt::naive_dft_axis(want, nx, ny, nz, axis, true);
  CHECK(max_cplx_diff(a, want) < 1e-10);
}

TEST_CASE("3d round trip restores the input") {
  const int nx = 8, ny = 3, nz = 7;
  const std::vector<cplx> x = random_signal(nx * ny * nz, 9);
  std::vector<cplx> a = x;
  fft3d(a, nx, ny, nz, false);
  fft3d(a, nx, ny, nz, true);
  CHECK(max_cplx_diff(a, x) < 1e-12);
}

TEST_CASE("fft3d validates the buffer size") {
  std::vector<cplx> a(7);
  CHECK_THROWS_AS(fft3d(a, 2, 2, 2, false), shape_error);
}

TEST_CASE("plans are cached and shared") {
  const auto p1 = fft_plan(24);
  const auto p2 = fft_plan(24);
  CHECK(p1.get() == p2.get());
  CHECK(p1->size() == 24);
}

TEST_SUITE_END();
