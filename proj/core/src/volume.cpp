#include "volsr/volume.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "volsr/binio.hpp"

namespace volsr {

double norm(Vec3 v) { return std::sqrt(dot(v, v)); }

Vec3 normalized(Vec3 v) {
  const double n = norm(v);
  if (n == 0.0) throw config_error("cannot normalize zero vector");
  return {v.x / n, v.y / n, v.z / n};
}

std::pair<Vec3, Vec3> orthonormal_basis(Vec3 axis) {
  const Vec3 a = normalized(axis);
  const Vec3 ref = std::abs(a.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  const Vec3 u = normalized(cross(a, ref));
  return {u, cross(a, u)};
}

Volume3D::Volume3D(int nx_, int ny_, int nz_, double sx, double sy, double sz)
    : nx(nx_), ny(ny_), nz(nz_), spacing_x(sx), spacing_y(sy), spacing_z(sz) {
  if (nx <= 0 || ny <= 0 || nz <= 0)
    throw shape_error("volume dims must be positive");
  if (sx <= 0.0 || sy <= 0.0 || sz <= 0.0)
    throw shape_error("voxel spacing must be positive");
  data.assign(voxels(), 0.0);
}

double Volume3D::min_spacing() const {
  return std::min({spacing_x, spacing_y, spacing_z});
}

void Volume3D::validate() const {
  if (nx <= 0 || ny <= 0 || nz <= 0)
    throw shape_error("volume dims must be positive");
  if (spacing_x <= 0.0 || spacing_y <= 0.0 || spacing_z <= 0.0)
    throw shape_error("voxel spacing must be positive");
  if (static_cast<std::int64_t>(data.size()) != voxels())
    throw shape_error("voxel count does not match dims");
}

bool Roi3D::contained_in(const Volume3D &v) const {
  return lo_x >= 0 && lo_y >= 0 && lo_z >= 0 && hi_x <= v.nx && hi_y <= v.ny &&
         hi_z <= v.nz;
}

bool Roi3D::overlaps(const Roi3D &o) const {
  return lo_x < o.hi_x && o.lo_x < hi_x && lo_y < o.hi_y && o.lo_y < hi_y &&
         lo_z < o.hi_z && o.lo_z < hi_z;
}

void Roi3D::validate_in(const Volume3D &v) const {
  if (hi_x <= lo_x || hi_y <= lo_y || hi_z <= lo_z)
    throw shape_error("roi is empty");
  if (!contained_in(v)) throw shape_error("roi outside volume bounds");
}

Volume3D normalize(const Volume3D &v) {
  v.validate();
  const auto [mn_it, mx_it] = std::minmax_element(v.data.begin(), v.data.end());
  const double mn = *mn_it, mx = *mx_it;
  Volume3D out = v;
  if (mx > mn) {
    const double scale = 1.0 / (mx - mn);
    for (auto &x : out.data) x = (x - mn) * scale;
  } else {
    std::fill(out.data.begin(), out.data.end(), 0.0);
  }
  return out;
}

namespace {

// Source index range [lo, lo+m) of the kept/placed block along one axis.
// For odd differences the extra voxel goes to the high-index side.
int centered_offset(int from, int to) { return (from - to) / 2; }

} // namespace

Volume3D crop_pad(const Volume3D &v, int target_nx, int target_ny,
                  int target_nz) {
  v.validate();
  if (target_nx <= 0 || target_ny <= 0 || target_nz <= 0)
    throw shape_error("crop_pad targets must be positive");
  Volume3D out(target_nx, target_ny, target_nz, v.spacing_x, v.spacing_y,
               v.spacing_z);
  const int ox = centered_offset(v.nx, target_nx);
  const int oy = centered_offset(v.ny, target_ny);
  const int oz = centered_offset(v.nz, target_nz);
  for (int z = 0; z < target_nz; ++z) {
    const int sz = z + oz;
    if (sz < 0 || sz >= v.nz) continue;
    for (int y = 0; y < target_ny; ++y) {
      const int sy = y + oy;
      if (sy < 0 || sy >= v.ny) continue;
      const int x0 = std::max(0, -ox);
      const int x1 = std::min(target_nx, v.nx - ox);
      for (int x = x0; x < x1; ++x) {
        out.at(x, y, z) = v.at(x + ox, sy, sz);
      }
    }
  }
  return out;
}

double sample_trilinear(const Volume3D &v, Vec3 p) {
  v.validate();
  const double ex = v.nx * v.spacing_x;
  const double ey = v.ny * v.spacing_y;
  const double ez = v.nz * v.spacing_z;
  if (!(p.x >= 0.0 && p.x <= ex && p.y >= 0.0 && p.y <= ey && p.z >= 0.0 &&
        p.z <= ez))
    throw bounds_error("sample point outside volume bounding box");

  // Continuous voxel-center coordinates; clamp the base cell, not the
  // fractional offset, so the rim extrapolates linearly.
  auto cell = [](double pos, double spacing, int n, int &i0, double &t) {
    const double u = pos / spacing - 0.5;
    double fi = std::floor(u);
    int i = static_cast<int>(fi);
    if (i < 0) i = 0;
    if (i > n - 2) i = n - 2;
    if (n == 1) i = 0;
    t = u - i;
    i0 = i;
  };

  int ix, iy, iz;
  double tx, ty, tz;
  if (v.nx == 1) {
    ix = 0;
    tx = 0.0;
  } else {
    cell(p.x, v.spacing_x, v.nx, ix, tx);
  }
  if (v.ny == 1) {
    iy = 0;
    ty = 0.0;
  } else {
    cell(p.y, v.spacing_y, v.ny, iy, ty);
  }
  if (v.nz == 1) {
    iz = 0;
    tz = 0.0;
  } else {
    cell(p.z, v.spacing_z, v.nz, iz, tz);
  }

  const int ix1 = std::min(ix + 1, v.nx - 1);
  const int iy1 = std::min(iy + 1, v.ny - 1);
  const int iz1 = std::min(iz + 1, v.nz - 1);

  const double c000 = v.at(ix, iy, iz), c100 = v.at(ix1, iy, iz);
  const double c010 = v.at(ix, iy1, iz), c110 = v.at(ix1, iy1, iz);
  const double c001 = v.at(ix, iy, iz1), c101 = v.at(ix1, iy, iz1);
  const double c011 = v.at(ix, iy1, iz1), c111 = v.at(ix1, iy1, iz1);

  const double c00 = c000 + tx * (c100 - c000);
  const double c10 = c010 + tx * (c110 - c010);
  const double c01 = c001 + tx * (c101 - c001);
  const double c11 = c011 + tx * (c111 - c011);
  const double c0 = c00 + ty * (c10 - c00);
  const double c1 = c01 + ty * (c11 - c01);
  return c0 + tz * (c1 - c0);
}

double roi_mean(const Volume3D &v, const Roi3D &roi) {
  roi.validate_in(v);
  double sum = 0.0;
  for (int z = roi.lo_z; z < roi.hi_z; ++z)
    for (int y = roi.lo_y; y < roi.hi_y; ++y)
      for (int x = roi.lo_x; x < roi.hi_x; ++x) sum += v.at(x, y, z);
  return sum / static_cast<double>(roi.voxels());
}

namespace {

constexpr char kMagic[4] = {'S', 'R', 'V', '1'};

} // namespace

Volume3D read_volume(const std::string &path) {
  std::string bytes = read_file_bytes(path);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw io_error("bad magic in volume file: " + path);
  if (bytes.size() < 28)
    throw io_error("truncated volume header: " + path);
  const auto *p = reinterpret_cast<const unsigned char *>(bytes.data());

  const std::uint32_t nx = get_u32(p + 4);
  const std::uint32_t ny = get_u32(p + 8);
  const std::uint32_t nz = get_u32(p + 12);
  if (nx == 0 || ny == 0 || nz == 0)
    throw io_error("zero dimension in volume file: " + path);
  const float sx = get_f32(p + 16);
  const float sy = get_f32(p + 20);
  const float sz = get_f32(p + 24);
  if (!(sx > 0.0f && sy > 0.0f && sz > 0.0f))
    throw io_error("non-positive spacing in volume file: " + path);

  const std::uint64_t n = static_cast<std::uint64_t>(nx) * ny * nz;
  const std::uint64_t expected = 28 + n * 4;
  if (bytes.size() < expected)
    throw io_error("truncated volume payload: " + path);
  if (bytes.size() > expected)
    throw io_error("trailing bytes in volume file: " + path);

  Volume3D v(static_cast<int>(nx), static_cast<int>(ny), static_cast<int>(nz),
             sx, sy, sz);
  for (std::uint64_t i = 0; i < n; ++i) {
    v.data[i] = static_cast<double>(get_f32(p + 28 + i * 4));
  }
  return v;
}

void write_volume(const Volume3D &v, const std::string &path) {
  v.validate();
  std::string buf;
  buf.reserve(28 + static_cast<std::size_t>(v.voxels()) * 4);
  buf.append(kMagic, 4);
  put_u32(buf, static_cast<std::uint32_t>(v.nx));
  put_u32(buf, static_cast<std::uint32_t>(v.ny));
  put_u32(buf, static_cast<std::uint32_t>(v.nz));
  put_f32(buf, static_cast<float>(v.spacing_x));
  put_f32(buf, static_cast<float>(v.spacing_y));
  put_f32(buf, static_cast<float>(v.spacing_z));
  for (const double d : v.data) put_f32(buf, static_cast<float>(d));

  write_file_atomic(path, buf);
}

} // namespace volsr
