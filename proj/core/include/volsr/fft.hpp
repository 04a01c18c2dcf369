#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <vector>

namespace volsr {

using cplx = std::complex<double>;

/// Planned 1D complex DFT of fixed length. Power-of-two lengths run an
/// iterative radix-2 Cooley-Tukey; everything else goes through Bluestein's
/// chirp-z algorithm on a padded power-of-two grid. Forward is unnormalized,
/// inverse carries the 1/n factor, so inverse(forward(x)) == x.
class Fft1d {
public:
  explicit Fft1d(int n);

  int size() const { return n_; }
  void forward(cplx *line) const;
  void inverse(cplx *line) const;

private:
  void radix2(cplx *line, bool inverse) const;
  void bluestein_forward(cplx *line) const;

  int n_;
  bool pow2_;
  // radix-2 tables
  std::vector<std::uint32_t> bitrev_;
  std::vector<cplx> twiddle_fwd_, twiddle_inv_;
  // Bluestein machinery (chirp and the padded kernel's spectrum)
  int m_ = 0;
  std::unique_ptr<Fft1d> pad_;
  std::vector<cplx> chirp_;
  std::vector<cplx> kernel_fft_;
};

/// Shared plan lookup (thread-safe).
std::shared_ptr<const Fft1d> fft_plan(int n);

/// In-place 3D DFT of an x-fastest array with dims (nx, ny, nz).
void fft3d(std::vector<cplx> &a, int nx, int ny, int nz, bool inverse);

} // namespace volsr
