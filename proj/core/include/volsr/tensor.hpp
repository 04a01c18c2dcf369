#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "volsr/errors.hpp"

namespace volsr {

/// Activation container: batch x channel x spatial, x-fastest within a
/// channel (same spatial layout as Volume3D).
template <typename T> struct Tensor5 {
  int n = 0, c = 0, nx = 0, ny = 0, nz = 0;
  std::vector<T> data;

  Tensor5() = default;
  Tensor5(int n_, int c_, int nx_, int ny_, int nz_)
      : n(n_), c(c_), nx(nx_), ny(ny_), nz(nz_) {
    if (n <= 0 || c <= 0 || nx <= 0 || ny <= 0 || nz <= 0)
      throw shape_error("tensor dims must be positive");
    data.assign(size(), T(0));
  }

  std::size_t size() const {
    return static_cast<std::size_t>(n) * c * nx * ny * nz;
  }
  std::size_t index(int b, int ch, int x, int y, int z) const {
    return ((((static_cast<std::size_t>(b) * c + ch) * nz + z) * ny + y) *
            nx) +
           x;
  }
  T &at(int b, int ch, int x, int y, int z) {
    return data[index(b, ch, x, y, z)];
  }
  T at(int b, int ch, int x, int y, int z) const {
    return data[index(b, ch, x, y, z)];
  }

  bool same_shape(const Tensor5 &o) const {
    return n == o.n && c == o.c && nx == o.nx && ny == o.ny && nz == o.nz;
  }
  std::string shape_str() const {
    return std::to_string(n) + "x" + std::to_string(c) + "x" +
           std::to_string(nx) + "x" + std::to_string(ny) + "x" +
           std::to_string(nz);
  }
};

} // namespace volsr
