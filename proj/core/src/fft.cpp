#include "volsr/fft.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "volsr/errors.hpp"
#include "volsr/parallel.hpp"

namespace volsr {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

int next_pow2(int n) {
  int m = 1;
  while (m < n) m <<= 1;
  return m;
}

} // namespace

Fft1d::Fft1d(int n) : n_(n), pow2_(is_pow2(n)) {
  if (n < 1) throw config_error("fft length must be >= 1");
  if (pow2_) {
    bitrev_.resize(n_);
    int levels = 0;
    while ((1 << levels) < n_) ++levels;
    for (int i = 0; i < n_; ++i) {
      std::uint32_t r = 0;
      for (int b = 0; b < levels; ++b)
        if (i & (1 << b)) r |= 1u << (levels - 1 - b);
      bitrev_[i] = r;
    }
    twiddle_fwd_.resize(n_ / 2);
    twiddle_inv_.resize(n_ / 2);
    for (int k = 0; k < n_ / 2; ++k) {
      const double a = -2.0 * kPi * k / n_;
      twiddle_fwd_[k] = cplx(std::cos(a), std::sin(a));
      twiddle_inv_[k] = std::conj(twiddle_fwd_[k]);
    }
  } else {
    // chirp_[k] = exp(-i*pi*k^2/n); k^2 taken mod 2n in exact integer
    // arithmetic so the angle stays small for large k.
    m_ = next_pow2(2 * n_ - 1);
    pad_ = std::make_unique<Fft1d>(m_);
    chirp_.resize(n_);
    for (int k = 0; k < n_; ++k) {
      const std::uint64_t sq =
          (static_cast<std::uint64_t>(k) * k) % (2ull * n_);
      const double a = -kPi * static_cast<double>(sq) / n_;
      chirp_[k] = cplx(std::cos(a), std::sin(a));
    }
    std::vector<cplx> kernel(m_, cplx(0.0, 0.0));
    kernel[0] = std::conj(chirp_[0]);
    for (int k = 1; k < n_; ++k) {
      kernel[k] = std::conj(chirp_[k]);
      kernel[m_ - k] = std::conj(chirp_[k]);
    }
    pad_->forward(kernel.data());
    kernel_fft_ = std::move(kernel);
  }
}

void Fft1d::radix2(cplx *a, bool inverse) const {
  const auto &tw = inverse ? twiddle_inv_ : twiddle_fwd_;
  for (int i = 0; i < n_; ++i) {
    const int j = static_cast<int>(bitrev_[i]);
    if (j > i) std::swap(a[i], a[j]);
  }
  for (int len = 2; len <= n_; len <<= 1) {
    const int half = len >> 1;
    const int step = n_ / len;
    for (int i = 0; i < n_; i += len) {
      for (int k = 0; k < half; ++k) {
        const cplx w = tw[static_cast<std::size_t>(k) * step];
        const cplx u = a[i + k];
        const cplx t = w * a[i + k + half];
        a[i + k] = u + t;
        a[i + k + half] = u - t;
      }
    }
  }
  if (inverse) {
    const double s = 1.0 / n_;
    for (int i = 0; i < n_; ++i) a[i] *= s;
  }
}

void Fft1d::bluestein_forward(cplx *x) const {
  std::vector<cplx> buf(m_, cplx(0.0, 0.0));
  for (int k = 0; k < n_; ++k) buf[k] = x[k] * chirp_[k];
  pad_->forward(buf.data());
  for (int k = 0; k < m_; ++k) buf[k] *= kernel_fft_[k];
  pad_->inverse(buf.data());
  for (int k = 0; k < n_; ++k) x[k] = buf[k] * chirp_[k];
}

void Fft1d::forward(cplx *line) const {
  if (n_ == 1) return;
  if (pow2_) {
    radix2(line, false);
  } else {
    bluestein_forward(line);
  }
}

void Fft1d::inverse(cplx *line) const {
  if (n_ == 1) return;
  if (pow2_) {
    radix2(line, true);
    return;
  }
  for (int i = 0; i < n_; ++i) line[i] = std::conj(line[i]);
  bluestein_forward(line);
  const double s = 1.0 / n_;
  for (int i = 0; i < n_; ++i) line[i] = std::conj(line[i]) * s;
}

std::shared_ptr<const Fft1d> fft_plan(int n) {
  static std::mutex mu;
  static std::map<int, std::shared_ptr<const Fft1d>> cache;
  std::lock_guard<std::mutex> lk(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  auto plan = std::make_shared<const Fft1d>(n);
  cache.emplace(n, plan);
  return plan;
}

void fft3d(std::vector<cplx> &a, int nx, int ny, int nz, bool inverse) {
  if (static_cast<std::int64_t>(a.size()) !=
      static_cast<std::int64_t>(nx) * ny * nz)
    throw shape_error("fft3d: buffer size does not match dims");

  const auto px = fft_plan(nx);
  const auto py = fft_plan(ny);
  const auto pz = fft_plan(nz);
  const std::int64_t sx = 1;
  const std::int64_t sy = nx;
  const std::int64_t sz = static_cast<std::int64_t>(nx) * ny;

  // x lines are contiguous; y and z lines are gathered into a scratch
  // buffer per line. Lines are independent, so the loop parallelizes.
  parallel_for(static_cast<std::int64_t>(ny) * nz, [&](std::int64_t b,
                                                       std::int64_t e) {
    for (std::int64_t i = b; i < e; ++i) {
      cplx *line = a.data() + i * nx;
      inverse ? px->inverse(line) : px->forward(line);
    }
  });

  parallel_for(static_cast<std::int64_t>(nx) * nz, [&](std::int64_t b,
                                                       std::int64_t e) {
    std::vector<cplx> tmp(ny);
    for (std::int64_t i = b; i < e; ++i) {
      const std::int64_t x = i % nx;
      const std::int64_t z = i / nx;
      cplx *base = a.data() + z * sz + x * sx;
      for (int y = 0; y < ny; ++y) tmp[y] = base[y * sy];
      inverse ? py->inverse(tmp.data()) : py->forward(tmp.data());
      for (int y = 0; y < ny; ++y) base[y * sy] = tmp[y];
    }
  });

  parallel_for(static_cast<std::int64_t>(nx) * ny, [&](std::int64_t b,
                                                       std::int64_t e) {
    std::vector<cplx> tmp(nz);
    for (std::int64_t i = b; i < e; ++i) {
      cplx *base = a.data() + i;
      for (int z = 0; z < nz; ++z) tmp[z] = base[z * sz];
      inverse ? pz->inverse(tmp.data()) : pz->forward(tmp.data());
      for (int z = 0; z < nz; ++z) base[z * sz] = tmp[z];
    }
  });
}

} // namespace volsr
