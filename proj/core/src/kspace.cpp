#include "volsr/kspace.hpp"

#include <cmath>
#include <string>

#include "volsr/errors.hpp"
#include "volsr/fft.hpp"
#include "volsr/parallel.hpp"

namespace volsr {

void DegradeConfig::validate() const {
  auto check_frac = [](double f, const char *name) {
    if (!(f > 0.0) || f > 1.0)
      throw config_error(std::string(name) + " must be in (0, 1], got " +
                         std::to_string(f));
  };
  auto check_pf = [](double p, const char *name) {
    if (!(p > 0.5) || p > 1.0)
      throw config_error(std::string(name) + " must be in (0.5, 1], got " +
                         std::to_string(p));
  };
  check_frac(frac_y, "frac_y");
  check_frac(frac_z, "frac_z");
  check_pf(pf_y, "pf_y");
  check_pf(pf_z, "pf_z");
}

int SamplingMask::kept_count() const {
  int c = 0;
  for (bool k : keep)
    c += k ? 1 : 0;
  return c;
}

bool SamplingMask::keep_centered(int c) const {
  int bin = c % n;
  if (bin < 0)
    bin += n;
  return keep[static_cast<size_t>(bin)];
}

SamplingMask build_mask(int n, double frac, double pf) {
  if (n <= 0)
    throw config_error("mask length must be positive");
  // Small bias absorbs float error when frac*n/2 lands on an integer.
  int h = static_cast<int>(std::floor(frac * n / 2.0 + 1e-9));
  if (h < 1)
    throw config_error("resolution fraction " + std::to_string(frac) +
                       " keeps no central band at n=" + std::to_string(n));
  int band = 2 * h;
  int kept = static_cast<int>(std::ceil(pf * band - 1e-9));

  SamplingMask m;
  m.n = n;
  m.keep.assign(static_cast<size_t>(n), false);
  // Kept centered range: [h - kept, h - 1]. pf > 0.5 guarantees DC inside.
  for (int c = h - kept; c < h; ++c) {
    int bin = c % n;
    if (bin < 0)
      bin += n;
    m.keep[static_cast<size_t>(bin)] = true;
  }
  return m;
}

std::vector<cplx> degrade_complex(const Volume3D &v, const DegradeConfig &cfg) {
  v.validate();
  cfg.validate();
  SamplingMask my = build_mask(v.ny, cfg.frac_y, cfg.pf_y);
  SamplingMask mz = build_mask(v.nz, cfg.frac_z, cfg.pf_z);

  std::vector<cplx> a(v.data.begin(), v.data.end());
  fft3d(a, v.nx, v.ny, v.nz, false);

  const size_t nx = static_cast<size_t>(v.nx);
  parallel_for(static_cast<size_t>(v.ny) * v.nz, [&](size_t b, size_t e) {
    for (size_t i = b; i < e; ++i) {
      int y = static_cast<int>(i % v.ny);
      int z = static_cast<int>(i / v.ny);
      if (my.keep[static_cast<size_t>(y)] && mz.keep[static_cast<size_t>(z)])
        continue;
      cplx *line = a.data() + i * nx;
      for (size_t x = 0; x < nx; ++x)
        line[x] = cplx{0.0, 0.0};
    }
  });

  fft3d(a, v.nx, v.ny, v.nz, true);
  return a;
}

Volume3D degrade(const Volume3D &v, const DegradeConfig &cfg) {
  v.validate();
  cfg.validate();
  // Full sampling is an exact identity on the magnitude; skip the
  // transform so the control case is bit-clean.
  if (build_mask(v.ny, cfg.frac_y, cfg.pf_y).kept_count() == v.ny &&
      build_mask(v.nz, cfg.frac_z, cfg.pf_z).kept_count() == v.nz) {
    Volume3D out = v;
    for (double &x : out.data)
      x = std::abs(x);
    return out;
  }
  std::vector<cplx> field = degrade_complex(v, cfg);
  Volume3D out = v;
  for (size_t i = 0; i < field.size(); ++i)
    out.data[i] = std::abs(field[i]);
  return out;
}

void PairConfig::validate() const {
  if (canon_nx <= 0 || canon_ny <= 0 || canon_nz <= 0)
    throw config_error("canonical grid dims must be positive");
  if (window_nx <= 0 || window_ny <= 0)
    throw config_error("training window dims must be positive");
  if (window_nx > canon_nx || window_ny > canon_ny)
    throw config_error("training window exceeds canonical grid");
  degrade.validate();
}

std::pair<Volume3D, Volume3D> make_training_pair(const Volume3D &hr,
                                                 const PairConfig &cfg) {
  cfg.validate();
  Volume3D canon = crop_pad(hr, cfg.canon_nx, cfg.canon_ny, cfg.canon_nz);
  Volume3D low = degrade(canon, cfg.degrade);
  Volume3D in =
      normalize(crop_pad(low, cfg.window_nx, cfg.window_ny, cfg.canon_nz));
  Volume3D tgt =
      normalize(crop_pad(canon, cfg.window_nx, cfg.window_ny, cfg.canon_nz));
  return {std::move(in), std::move(tgt)};
}

} // namespace volsr
