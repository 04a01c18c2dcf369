#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "volsr/errors.hpp"

namespace volsr {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double s, Vec3 v) { return {s * v.x, s * v.y, s * v.z}; }
inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
double norm(Vec3 v);
Vec3 normalized(Vec3 v);
/// Deterministic right-handed frame (u, w) spanning the plane normal to
/// `axis` (need not be unit length).
std::pair<Vec3, Vec3> orthonormal_basis(Vec3 axis);

/// A 3D scalar field with voxel spacing. Data is laid out x-fastest, then y,
/// then z. The center of voxel (i,j,k) sits at physical coordinate
/// ((i+0.5)*sx, (j+0.5)*sy, (k+0.5)*sz), so the physical extent of the
/// volume is exactly (nx*sx, ny*sy, nz*sz).
struct Volume3D {
  int nx = 0, ny = 0, nz = 0;
  double spacing_x = 1.0, spacing_y = 1.0, spacing_z = 1.0;
  std::vector<double> data;

  Volume3D() = default;
  Volume3D(int nx_, int ny_, int nz_, double sx = 1.0, double sy = 1.0,
           double sz = 1.0);

  std::int64_t voxels() const {
    return static_cast<std::int64_t>(nx) * ny * nz;
  }
  std::int64_t index(int x, int y, int z) const {
    return (static_cast<std::int64_t>(z) * ny + y) * nx + x;
  }
  double &at(int x, int y, int z) { return data[index(x, y, z)]; }
  double at(int x, int y, int z) const { return data[index(x, y, z)]; }

  double min_spacing() const;
  /// Throws shape_error if dims/spacings/data size are inconsistent.
  void validate() const;
};

/// Axis-aligned voxel-index box, inclusive lo, exclusive hi.
struct Roi3D {
  int lo_x = 0, hi_x = 0;
  int lo_y = 0, hi_y = 0;
  int lo_z = 0, hi_z = 0;

  std::int64_t voxels() const {
    return static_cast<std::int64_t>(hi_x - lo_x) * (hi_y - lo_y) *
           (hi_z - lo_z);
  }
  bool contained_in(const Volume3D &v) const;
  bool overlaps(const Roi3D &o) const;
  /// Throws shape_error when empty or outside the host volume.
  void validate_in(const Volume3D &v) const;
};

/// Min-max rescale to [0, 1]. A constant input maps to all-zeros.
Volume3D normalize(const Volume3D &v);

/// Center crop and/or zero-pad to the target dims. When the size difference
/// along an axis is odd, the extra voxel is removed from (or added to) the
/// high-index side. Spacing is preserved.
Volume3D crop_pad(const Volume3D &v, int target_nx, int target_ny,
                  int target_nz);

/// Trilinear interpolation at a physical point (mm). Points must lie inside
/// the volume's bounding box [0, n*spacing) per axis; within half a voxel of
/// the box faces the value is linearly extrapolated from the outermost voxel
/// centers, which keeps affine fields exact everywhere in the box.
/// Throws bounds_error for points outside the box.
double sample_trilinear(const Volume3D &v, Vec3 point_mm);

/// Mean over an ROI (used by SNR/CNR).
double roi_mean(const Volume3D &v, const Roi3D &roi);

// SRV1 container: bytes 0-3 "SRV1"; u32 nx, ny, nz; f32 spacing x/y/z (mm);
// then nx*ny*nz f32 scalars, x-fastest. All fields little-endian, no padding.
Volume3D read_volume(const std::string &path);
void write_volume(const Volume3D &v, const std::string &path);

} // namespace volsr
