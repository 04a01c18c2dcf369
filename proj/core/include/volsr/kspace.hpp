#pragma once

#include <utility>
#include <vector>

#include "volsr/fft.hpp"
#include "volsr/volume.hpp"

namespace volsr {

/// Forward model for synthetic low-resolution volumes. The readout axis (x)
/// is never degraded; the phase (y) and slice (z) axes each get a centered
/// truncation to a resolution fraction f, then one-sided partial-Fourier
/// zeroing keeping a fraction p of the truncated band.
struct DegradeConfig {
  double frac_y = 0.5, frac_z = 0.5; ///< resolution fraction f in (0, 1]
  double pf_y = 0.75, pf_z = 0.75;   ///< partial-Fourier fraction p in (0.5, 1]

  void validate() const;
};

/// Per-axis keep/zero decision over DFT bins (unshifted order, DC at bin 0).
struct SamplingMask {
  int n = 0;
  std::vector<bool> keep; // indexed by DFT bin

  int kept_count() const;
  /// Keep flag for a centered (fftshifted) line index c in
  /// [-floor(n/2), ceil(n/2)-1].
  bool keep_centered(int c) const;
};

/// Build the keep mask for one axis of n lines.
///
/// In centered coordinates c with DC at c=0, truncation keeps the band
/// c in [-h, h-1] with h = floor(f*n/2) (B = 2h lines); partial Fourier then
/// drops lines from the negative-frequency edge, keeping the ceil(p*B)
/// highest-index lines, i.e. c in [h - ceil(p*B), h-1]. DC always survives
/// because p > 0.5. Throws config_error when f*n < 2 (the band would lose
/// the DC neighborhood).
SamplingMask build_mask(int n, double frac, double pf);

/// Degraded complex image-space field (before the magnitude step):
/// forward 3D DFT, multiply by the y and z masks, inverse DFT.
std::vector<cplx> degrade_complex(const Volume3D &v, const DegradeConfig &cfg);

/// The full forward model: degrade_complex followed by per-voxel magnitude.
/// Dims, spacing, and matrix size equal the input's.
Volume3D degrade(const Volume3D &v, const DegradeConfig &cfg);

/// Canonical-grid + training-window configuration for paired data.
struct PairConfig {
  int canon_nx = 256, canon_ny = 256, canon_nz = 96;
  int window_nx = 192, window_ny = 192; // in-plane crop, all slices kept
  DegradeConfig degrade;

  void validate() const;
};

/// One (input, target) training pair from a high-resolution volume:
/// crop/pad to the canonical grid, degrade, crop both volumes in-plane to
/// the training window, then normalize each to [0, 1] independently.
/// Returns (low-resolution input, high-resolution target).
std::pair<Volume3D, Volume3D> make_training_pair(const Volume3D &hr,
                                                 const PairConfig &cfg);

} // namespace volsr
