#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "volsr/volume.hpp"

namespace volsr {

enum class PrimitiveKind { ellipsoid, cylinder };

/// Analytic solid painted into the volume. Ellipsoids are axis-aligned with
/// semi-axes `radii`; cylinders are capped, oriented along `axis`, with
/// cross-section `radius` and half-extent `half_length`. All lengths in mm.
struct Primitive {
  PrimitiveKind kind = PrimitiveKind::ellipsoid;
  Vec3 center{};
  Vec3 radii{};     // ellipsoid semi-axes
  Vec3 axis{0, 0, 1};
  double radius = 0;
  double half_length = 0;
  double intensity = 0.5;

  /// Signed distance, negative inside. Exact for cylinders, first-order
  /// accurate near the boundary for ellipsoids (sign always exact).
  double sdf(const Vec3 &p) const;
  bool contains(const Vec3 &p) const;
};

Primitive make_ellipsoid(Vec3 center, Vec3 semi_axes, double intensity);
Primitive make_cylinder(Vec3 center, Vec3 axis, double radius,
                        double half_length, double intensity);

struct NamedRoi {
  std::string name;
  Roi3D box;
};

struct PhantomSpec {
  int nx = 64, ny = 64, nz = 32;
  double spacing_x = 1.6, spacing_y = 1.6, spacing_z = 1.6;
  uint64_t seed = 0;
  double background = 0.05;
  double edge_softness_mm = 0.0; // 0 = hard boundaries
  double noise_sigma = 0.0;      // additive Gaussian, applied last
  std::vector<Primitive> primitives;
  std::vector<NamedRoi> rois;

  Vec3 extent_mm() const;
  /// Throws config_error on out-of-range intensities, primitives or ROIs
  /// leaving the grid, overlapping ROIs, or negative noise.
  void validate() const;
};

struct CylinderTruth {
  int id = 0; // index among the spec's cylinders, in declaration order
  Vec3 center{};
  Vec3 axis{}; // unit
  double diameter_mm = 0;
};

struct PhantomTruth {
  std::vector<CylinderTruth> cylinders;
  std::vector<NamedRoi> rois;
};

/// Renders the spec: background, then primitives painted in declaration
/// order with a Gaussian-CDF edge profile of width edge_softness_mm, then
/// seeded Gaussian noise, then a clamp to [0, 1]. Pure function of the spec.
std::pair<Volume3D, PhantomTruth> generate(const PhantomSpec &spec);

/// Full width at half maximum of the intensity profile through `center`
/// perpendicular to `axis`, averaged over two orthogonal directions like a
/// two-caliper protocol. Half maximum sits between the central plateau and
/// the per-side background plateau; crossings are found walking outward from
/// the center with linear sub-step interpolation. Throws measurement_error
/// when a profile has no contrast or never crosses the half level.
double measure_diameter(const Volume3D &v, const Vec3 &center,
                        const Vec3 &axis);

/// Randomized "cardiac-like" spec scaled to the grid: a two-shell chamber
/// pair (muscle around blood pool), three or four bright vessels in the
/// periphery, labeled blood/myocardium/lung ROIs, soft edges, mild noise.
/// Every seed yields a valid spec with vessel radii of at least two voxels.
PhantomSpec random_phantom_spec(int nx, int ny, int nz, double sx, double sy,
                                double sz, uint64_t seed);

} // namespace volsr
