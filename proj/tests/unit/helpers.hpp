#pragma once

// Shared test scaffolding: scratch directories, random fixtures, and the
// slow reference implementations the fast paths are checked against.

#include <complex>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "volsr/rng.hpp"
#include "volsr/tensor.hpp"
#include "volsr/volume.hpp"

namespace vt {

/// Fresh per-test scratch directory under the system temp root. Wiped on
/// construction, left behind on failure for post-mortems.
inline std::filesystem::path scratch_dir(const std::string &name) {
  namespace fs = std::filesystem;
  const fs::path p = fs::temp_directory_path() / ("volsr_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

inline volsr::Volume3D random_volume(int nx, int ny, int nz,
                                     std::uint64_t seed, double lo = 0.0,
                                     double hi = 1.0, double sx = 1.0,
                                     double sy = 1.0, double sz = 1.0) {
  volsr::Volume3D v(nx, ny, nz, sx, sy, sz);
  volsr::Rng rng(seed);
  for (double &x : v.data) x = rng.uniform(lo, hi);
  return v;
}

// Snap values to float32 so volume files round trip bit exactly.
inline void snap_f32(volsr::Volume3D &v) {
  for (double &x : v.data) x = static_cast<float>(x);
}

template <typename T>
volsr::Tensor5<T> random_tensor(int n, int c, int nx, int ny, int nz,
                                std::uint64_t seed, double lo = -1.0,
                                double hi = 1.0) {
  volsr::Tensor5<T> t(n, c, nx, ny, nz);
  volsr::Rng rng(seed);
  for (T &x : t.data) x = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

/// O(n^2) reference DFT, the oracle for every FFT-path test.
inline std::vector<std::complex<double>>
naive_dft(const std::vector<std::complex<double>> &in, bool inverse) {
  const std::size_t n = in.size();
  const double sign = inverse ? 1.0 : -1.0;
  const double pi = 3.14159265358979323846;
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double ang = sign * 2.0 * pi * static_cast<double>(k * j % n) /
                         static_cast<double>(n);
      acc += in[j] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = inverse ? acc / static_cast<double>(n) : acc;
  }
  return out;
}

/// Applies naive_dft along one axis of an x-fastest 3D array.
inline void naive_dft_axis(std::vector<std::complex<double>> &a, int nx,
                           int ny, int nz, int axis, bool inverse) {
  const int dims[3] = {nx, ny, nz};
  const std::int64_t stride[3] = {1, nx, static_cast<std::int64_t>(nx) * ny};
  const int n = dims[axis];
  const int u = (axis + 1) % 3, w = (axis + 2) % 3;
  std::vector<std::complex<double>> line(n);
  for (int i = 0; i < dims[u]; ++i)
    for (int j = 0; j < dims[w]; ++j) {
      const std::int64_t base = i * stride[u] + j * stride[w];
      for (int k = 0; k < n; ++k) line[k] = a[base + k * stride[axis]];
      line = naive_dft(line, inverse);
      for (int k = 0; k < n; ++k) a[base + k * stride[axis]] = line[k];
    }
}

inline double max_abs_diff(const std::vector<double> &a,
                           const std::vector<double> &b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs(const std::vector<double> &a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

} // namespace vt
