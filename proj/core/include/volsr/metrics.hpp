#pragma once

#include <optional>
#include <string>
#include <vector>

#include "volsr/volume.hpp"

namespace volsr {

struct SsimConfig {
  int window = 7;     // odd, >= 3, per axis, uniform weights
  double k1 = 0.01;
  double k2 = 0.03;
  double range = 1.0; // data range of normalized volumes

  void validate() const;
};

/// Mean over voxels of the squared difference.
double mse(const Volume3D &a, const Volume3D &b);

/// Mean over voxels of the local SSIM map. Windows are edge-clamped (the
/// output is same-size; border windows shrink), moments are population
/// moments over the window, stabilizers C1=(k1*range)^2, C2=(k2*range)^2.
double ssim(const Volume3D &a, const Volume3D &b, const SsimConfig &cfg = {});

/// Sampled closed boundary: positions with matching outward unit normals.
struct Contour {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;

  void validate() const;
};

/// Planar circle sampled at n equally spaced positions (the measurement
/// protocol's 60-position default).
Contour circle_contour(Vec3 center, Vec3 plane_normal, double radius,
                       int n_positions = 60);

/// Mean over contour positions of the steepest normalized intensity slope
/// along the outward normal: profiles span +-3 mm at 0.1 * min-spacing
/// steps (trilinear samples), each profile is min-max normalized, and the
/// slope is the largest |central difference| / (2 * step), in 1/mm.
/// Constant-profile rays are skipped; if every ray is skipped the contour
/// has no edge and measurement_error is thrown.
double edge_sharpness(const Volume3D &v, const Contour &contour);

/// Blood-to-lung and blood-to-myocardium mean-intensity ratios.
double snr(const Volume3D &v, const Roi3D &blood, const Roi3D &lung);
double cnr(const Volume3D &v, const Roi3D &blood, const Roi3D &myocardium);

struct MetricReport {
  std::string id;
  double ssim = 0;
  double mse = 0;
  std::optional<double> edge_sharpness_mm_inv;
  std::optional<double> snr;
  std::optional<double> cnr;
};

/// CSV columns: id, ssim, mse, edge_sharpness_mm_inv, snr, cnr. Optional
/// fields render as empty cells.
void write_metric_report_csv(const std::vector<MetricReport> &rows,
                             const std::string &path);

} // namespace volsr
