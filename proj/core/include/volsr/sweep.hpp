#pragma once

#include <string>
#include <vector>

#include "volsr/kspace.hpp"
#include "volsr/unet.hpp"
#include "volsr/volume.hpp"

namespace volsr {

struct SweepStats {
  double ssim_mean = 0;
  double ssim_sd = 0;
  double mse_mean = 0;
  double mse_sd = 0;
};

struct SweepRow {
  double fraction = 0;
  SweepStats lr; // degraded input vs truth, before inference
  SweepStats sr; // network output vs truth
  // Full-sampling control (partial Fourier also lifted to 1), emitted on
  // the fraction-1.0 row only.
  bool has_control = false;
  SweepStats control_lr;
  SweepStats control_sr;
};

struct SweepReport {
  std::vector<SweepRow> rows;

  void validate() const; // exactly 10 rows, fractions strictly increasing
};

/// Degrades every corpus volume at resolution fractions 0.1 to 1.0 in 0.1
/// steps (partial Fourier held at the base value), super-resolves with the
/// given weights, and scores SSIM/MSE against the normalized truth. The
/// 1.0 row additionally carries a full-sampling control where the input is
/// the truth itself.
SweepReport run_sweep(const UNetWeights<float> &weights,
                      const std::vector<Volume3D> &corpus,
                      const DegradeConfig &base);

/// Columns: fraction, then {lr,sr}x{ssim,mse}x{mean,sd}, then the same
/// four stats for the control pair (blank off the 1.0 row).
void write_sweep_csv(const SweepReport &report, const std::string &path);

} // namespace volsr
