#include "volsr/phantom.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "volsr/errors.hpp"
#include "volsr/parallel.hpp"
#include "volsr/rng.hpp"

namespace volsr {

namespace {

// Standard normal CDF; the edge profile of a softened boundary.
double gauss_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Half-extent of the primitive's axis-aligned bounding box.
Vec3 bbox_half_extent(const Primitive &p) {
  if (p.kind == PrimitiveKind::ellipsoid)
    return p.radii;
  Vec3 a = normalized(p.axis);
  auto ext = [&](double ai) {
    return std::abs(ai) * p.half_length +
           p.radius * std::sqrt(std::max(0.0, 1.0 - ai * ai));
  };
  return {ext(a.x), ext(a.y), ext(a.z)};
}

} // namespace

double Primitive::sdf(const Vec3 &p) const {
  Vec3 d = p - center;
  if (kind == PrimitiveKind::cylinder) {
    Vec3 a = normalized(axis);
    double t = dot(d, a);
    double radial = norm(d - t * a);
    double dr = radial - radius;
    double dl = std::abs(t) - half_length;
    double outside = std::hypot(std::max(dr, 0.0), std::max(dl, 0.0));
    return std::min(std::max(dr, dl), 0.0) + outside;
  }
  // Ellipsoid: scaled-space distance estimate, exact sign.
  Vec3 q{d.x / radii.x, d.y / radii.y, d.z / radii.z};
  double k0 = norm(q);
  if (k0 < 1e-12)
    return -std::min({radii.x, radii.y, radii.z});
  Vec3 q2{q.x / radii.x, q.y / radii.y, q.z / radii.z};
  return k0 * (k0 - 1.0) / norm(q2);
}

bool Primitive::contains(const Vec3 &p) const {
  Vec3 d = p - center;
  if (kind == PrimitiveKind::cylinder) {
    Vec3 a = normalized(axis);
    double t = dot(d, a);
    return std::abs(t) <= half_length && norm(d - t * a) <= radius;
  }
  Vec3 q{d.x / radii.x, d.y / radii.y, d.z / radii.z};
  return dot(q, q) <= 1.0;
}

Primitive make_ellipsoid(Vec3 center, Vec3 semi_axes, double intensity) {
  Primitive p;
  p.kind = PrimitiveKind::ellipsoid;
  p.center = center;
  p.radii = semi_axes;
  p.intensity = intensity;
  return p;
}

Primitive make_cylinder(Vec3 center, Vec3 axis, double radius,
                        double half_length, double intensity) {
  Primitive p;
  p.kind = PrimitiveKind::cylinder;
  p.center = center;
  p.axis = normalized(axis);
  p.radius = radius;
  p.half_length = half_length;
  p.intensity = intensity;
  return p;
}

Vec3 PhantomSpec::extent_mm() const {
  return {nx * spacing_x, ny * spacing_y, nz * spacing_z};
}

void PhantomSpec::validate() const {
  if (nx <= 0 || ny <= 0 || nz <= 0)
    throw config_error("phantom grid dims must be positive");
  if (spacing_x <= 0 || spacing_y <= 0 || spacing_z <= 0)
    throw config_error("phantom spacing must be positive");
  if (background < 0.0 || background > 1.0)
    throw config_error("background intensity outside [0, 1]");
  if (edge_softness_mm < 0.0)
    throw config_error("edge softness must be non-negative");
  if (noise_sigma < 0.0)
    throw config_error("noise sigma must be non-negative");

  Vec3 ext = extent_mm();
  for (size_t i = 0; i < primitives.size(); ++i) {
    const Primitive &p = primitives[i];
    if (p.intensity < 0.0 || p.intensity > 1.0)
      throw config_error("primitive " + std::to_string(i) +
                         " intensity outside [0, 1]");
    if (p.kind == PrimitiveKind::ellipsoid) {
      if (p.radii.x <= 0 || p.radii.y <= 0 || p.radii.z <= 0)
        throw config_error("primitive " + std::to_string(i) +
                           " has non-positive semi-axes");
    } else {
      if (p.radius <= 0 || p.half_length <= 0)
        throw config_error("primitive " + std::to_string(i) +
                           " has non-positive cylinder dims");
      if (norm(p.axis) < 1e-12)
        throw config_error("primitive " + std::to_string(i) +
                           " has zero axis");
    }
    Vec3 h = bbox_half_extent(p);
    if (p.center.x - h.x < 0 || p.center.x + h.x > ext.x ||
        p.center.y - h.y < 0 || p.center.y + h.y > ext.y ||
        p.center.z - h.z < 0 || p.center.z + h.z > ext.z)
      throw config_error("primitive " + std::to_string(i) +
                         " extends outside the grid");
  }

  Volume3D shape(nx, ny, nz, spacing_x, spacing_y, spacing_z);
  for (size_t i = 0; i < rois.size(); ++i) {
    rois[i].box.validate_in(shape);
    for (size_t j = i + 1; j < rois.size(); ++j)
      if (rois[i].box.overlaps(rois[j].box))
        throw config_error("ROIs '" + rois[i].name + "' and '" +
                           rois[j].name + "' overlap");
  }
}

std::pair<Volume3D, PhantomTruth> generate(const PhantomSpec &spec) {
  spec.validate();
  Volume3D v(spec.nx, spec.ny, spec.nz, spec.spacing_x, spec.spacing_y,
             spec.spacing_z);

  const double sigma = spec.edge_softness_mm;
  parallel_for(static_cast<size_t>(v.voxels()), [&](size_t b, size_t e) {
    for (size_t i = b; i < e; ++i) {
      int x = static_cast<int>(i % spec.nx);
      int y = static_cast<int>((i / spec.nx) % spec.ny);
      int z = static_cast<int>(i / (static_cast<size_t>(spec.nx) * spec.ny));
      Vec3 p{(x + 0.5) * spec.spacing_x, (y + 0.5) * spec.spacing_y,
             (z + 0.5) * spec.spacing_z};
      double val = spec.background;
      for (const Primitive &prim : spec.primitives) {
        double alpha = sigma > 0.0 ? gauss_cdf(-prim.sdf(p) / sigma)
                                   : (prim.contains(p) ? 1.0 : 0.0);
        val += alpha * (prim.intensity - val);
      }
      v.data[i] = val;
    }
  });

  if (spec.noise_sigma > 0.0) {
    Rng rng(spec.seed);
    for (double &d : v.data)
      d += rng.normal(0.0, spec.noise_sigma);
  }
  for (double &d : v.data)
    d = std::clamp(d, 0.0, 1.0);

  PhantomTruth truth;
  int cyl_id = 0;
  for (const Primitive &p : spec.primitives)
    if (p.kind == PrimitiveKind::cylinder)
      truth.cylinders.push_back(
          {cyl_id++, p.center, normalized(p.axis), 2.0 * p.radius});
  truth.rois = spec.rois;
  return {std::move(v), std::move(truth)};
}

namespace {

// Largest t >= 0 with p0 + t*dir still strictly inside the sampling box.
double ray_limit(const Volume3D &v, Vec3 p0, Vec3 dir) {
  Vec3 ext{v.nx * v.spacing_x, v.ny * v.spacing_y, v.nz * v.spacing_z};
  const double margin = 1e-9;
  double t = std::numeric_limits<double>::infinity();
  auto axis = [&](double p, double d, double e) {
    if (std::abs(d) < 1e-15)
      return;
    double bound = d > 0 ? (e - margin - p) / d : (margin - p) / d;
    t = std::min(t, bound);
  };
  axis(p0.x, dir.x, ext.x);
  axis(p0.y, dir.y, ext.y);
  axis(p0.z, dir.z, ext.z);
  return std::max(t, 0.0);
}

// FWHM along a single direction. The center plateau is averaged over the
// innermost samples, the background plateau per side over the outermost
// quarter; each half-level crossing is located walking outward from the
// center and refined by linear interpolation.
double fwhm_1d(const Volume3D &v, Vec3 p0, Vec3 dir) {
  const double step = 0.1 * v.min_spacing();
  int m_neg = static_cast<int>(std::floor(ray_limit(v, p0, -1.0 * dir) / step));
  int m_pos = static_cast<int>(std::floor(ray_limit(v, p0, dir) / step));
  if (m_neg < 8 || m_pos < 8)
    throw measurement_error("diameter profile leaves the volume");

  std::vector<double> prof(static_cast<size_t>(m_neg + m_pos + 1));
  for (int i = -m_neg; i <= m_pos; ++i)
    prof[static_cast<size_t>(i + m_neg)] =
        sample_trilinear(v, p0 + (i * step) * dir);

  const size_t c = static_cast<size_t>(m_neg);
  double center = 0.0;
  for (size_t i = c - 2; i <= c + 2; ++i)
    center += prof[i];
  center /= 5.0;

  auto tail_mean = [&](bool positive_side) {
    size_t n = std::max<size_t>(3, prof.size() / 8);
    double s = 0.0;
    if (positive_side)
      for (size_t i = prof.size() - n; i < prof.size(); ++i)
        s += prof[i];
    else
      for (size_t i = 0; i < n; ++i)
        s += prof[i];
    return s / static_cast<double>(n);
  };

  // Crossing of the half level on one side; `dir_sign` is +1 toward the
  // positive tail, -1 toward the negative tail. Returns |t| in mm.
  auto crossing = [&](int dir_sign) {
    double bg = tail_mean(dir_sign > 0);
    double contrast = center - bg;
    if (std::abs(contrast) <= 1e-6 * std::max(1.0, std::abs(center)))
      throw measurement_error("no vessel contrast along diameter profile");
    double half = 0.5 * (center + bg);
    int last = dir_sign > 0 ? m_pos : m_neg;
    double prev = prof[c];
    for (int i = 1; i <= last; ++i) {
      double cur = prof[static_cast<size_t>(static_cast<int>(c) +
                                            dir_sign * i)];
      bool crossed = contrast > 0 ? cur <= half : cur >= half;
      if (crossed) {
        double frac = (prev - half) / (prev - cur);
        return (i - 1 + frac) * step;
      }
      prev = cur;
    }
    throw measurement_error("diameter profile never crosses half maximum");
  };

  return crossing(+1) + crossing(-1);
}

} // namespace

double measure_diameter(const Volume3D &v, const Vec3 &center,
                        const Vec3 &axis) {
  v.validate();
  if (norm(axis) < 1e-12)
    throw config_error("diameter axis must be nonzero");
  auto [u, w] = orthonormal_basis(axis);
  return 0.5 * (fwhm_1d(v, center, u) + fwhm_1d(v, center, w));
}

PhantomSpec random_phantom_spec(int nx, int ny, int nz, double sx, double sy,
                                double sz, uint64_t seed) {
  // Below this the chamber ROIs cannot be kept disjoint for every draw.
  if (nx < 28 || ny < 28 || nz < 16)
    throw config_error("randomized phantom layout needs nx,ny >= 28 and "
                       "nz >= 16");
  PhantomSpec spec;
  spec.nx = nx;
  spec.ny = ny;
  spec.nz = nz;
  spec.spacing_x = sx;
  spec.spacing_y = sy;
  spec.spacing_z = sz;
  spec.seed = seed;

  Rng rng(seed);
  Vec3 ext = spec.extent_mm();
  Vec3 mid = 0.5 * ext;
  double min_sp = std::min({sx, sy, sz});

  spec.background = rng.uniform(0.03, 0.07);
  spec.edge_softness_mm = rng.uniform(0.5, 1.0) * min_sp;
  spec.noise_sigma = rng.uniform(0.002, 0.01);

  // Chamber pair at the grid center: muscle shell, blood pool inside.
  double myo_i = rng.uniform(0.25, 0.35);
  double blood_i = rng.uniform(0.85, 0.95);
  Vec3 myo_r{rng.uniform(0.27, 0.33) * mid.x, rng.uniform(0.27, 0.33) * mid.y,
             rng.uniform(0.30, 0.36) * mid.z};
  Vec3 blood_r = 0.62 * myo_r;
  Vec3 c{mid.x + rng.uniform(-0.02, 0.02) * ext.x,
         mid.y + rng.uniform(-0.02, 0.02) * ext.y,
         mid.z + rng.uniform(-0.02, 0.02) * ext.z};
  spec.primitives.push_back(make_ellipsoid(c, myo_r, myo_i));
  spec.primitives.push_back(make_ellipsoid(c, blood_r, blood_i));

  // Vessels in the in-plane corners, steep but jittered tilt, radius at
  // least two voxels so FWHM oracles stay valid.
  int n_vessels = 3 + static_cast<int>(rng.uniform_index(2));
  const double corner[4][2] = {{0.22, 0.22}, {0.78, 0.22}, {0.22, 0.78},
                               {0.78, 0.78}};
  std::vector<int> order{0, 1, 2, 3};
  rng.shuffle(order);
  for (int k = 0; k < n_vessels; ++k) {
    const double *q = corner[static_cast<size_t>(order[static_cast<size_t>(k)])];
    Vec3 vc{q[0] * ext.x + rng.uniform(-0.02, 0.02) * ext.x,
            q[1] * ext.y + rng.uniform(-0.02, 0.02) * ext.y,
            mid.z + rng.uniform(-0.05, 0.05) * ext.z};
    Vec3 vaxis{rng.uniform(-0.12, 0.12), rng.uniform(-0.12, 0.12), 1.0};
    double r = rng.uniform(2.05, 3.2) * min_sp;
    double hl = rng.uniform(0.28, 0.36) * ext.z;
    spec.primitives.push_back(
        make_cylinder(vc, vaxis, r, hl, rng.uniform(0.85, 0.95)));
  }

  // ROI boxes: blood at the chamber center, myocardium in the shell wall
  // along +x, lung in free background near the x-low edge between the
  // vessel corners.
  auto vox = [&](Vec3 p) {
    return std::array<int, 3>{static_cast<int>(p.x / sx),
                              static_cast<int>(p.y / sy),
                              static_cast<int>(p.z / sz)};
  };
  auto box_around = [&](Vec3 p, int hx, int hy, int hz) {
    auto q = vox(p);
    Roi3D r;
    r.lo_x = q[0] - hx;
    r.hi_x = q[0] + hx + 1;
    r.lo_y = q[1] - hy;
    r.hi_y = q[1] + hy + 1;
    r.lo_z = q[2] - hz;
    r.hi_z = q[2] + hz + 1;
    return r;
  };
  // Blood box half-widths shrink with the pool so the box stays inside it
  // and clear of the wall ROI on coarse grids.
  auto half = [](double r_mm, double sp) {
    return std::clamp(static_cast<int>(0.5 * r_mm / sp), 1, 2);
  };
  spec.rois.push_back(
      {"blood",
       box_around(c, half(blood_r.x, sx), half(blood_r.y, sy), 1)});
  Vec3 wall{c.x + 0.5 * (blood_r.x + myo_r.x), c.y, c.z};
  spec.rois.push_back({"myocardium", box_around(wall, 1, 1, 1)});
  Vec3 lung{0.5 * ext.x, 0.06 * ext.y, c.z};
  spec.rois.push_back({"lung", box_around(lung, 2, 1, 1)});

  return spec;
}

} // namespace volsr
