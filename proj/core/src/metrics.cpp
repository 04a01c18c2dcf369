#include "volsr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "volsr/csv.hpp"
#include "volsr/errors.hpp"
#include "volsr/parallel.hpp"

namespace volsr {

void SsimConfig::validate() const {
  if (window < 3 || window % 2 == 0)
    throw config_error("ssim window must be odd and >= 3");
  if (!(k1 > 0.0) || !(k2 > 0.0))
    throw config_error("ssim stability constants must be positive");
  if (!(range > 0.0))
    throw config_error("ssim data range must be positive");
}

namespace {

void check_same_dims(const Volume3D &a, const Volume3D &b) {
  a.validate();
  b.validate();
  if (a.nx != b.nx || a.ny != b.ny || a.nz != b.nz)
    throw shape_error("volume dims mismatch");
}

// Summed-area table with a one-cell zero border; entry (x+1,y+1,z+1) holds
// the sum over the inclusive prefix box [0..x][0..y][0..z].
class Sat3 {
public:
  template <typename F>
  Sat3(int nx, int ny, int nz, F value)
      : nx_(nx + 1), ny_(ny + 1), nz_(nz + 1),
        s_(static_cast<std::size_t>(nx_) * ny_ * nz_, 0.0) {
    for (int z = 0; z < nz; ++z)
      for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) {
          s_[idx(x + 1, y + 1, z + 1)] =
              value(x, y, z) + s_[idx(x, y + 1, z + 1)] +
              s_[idx(x + 1, y, z + 1)] - s_[idx(x, y, z + 1)] +
              s_[idx(x + 1, y + 1, z)] - s_[idx(x, y + 1, z)] -
              s_[idx(x + 1, y, z)] + s_[idx(x, y, z)];
        }
  }

  // Sum over the inclusive box [x0..x1][y0..y1][z0..z1].
  double box(int x0, int x1, int y0, int y1, int z0, int z1) const {
    ++x1, ++y1, ++z1;
    return s_[idx(x1, y1, z1)] - s_[idx(x0, y1, z1)] - s_[idx(x1, y0, z1)] +
           s_[idx(x0, y0, z1)] - s_[idx(x1, y1, z0)] + s_[idx(x0, y1, z0)] +
           s_[idx(x1, y0, z0)] - s_[idx(x0, y0, z0)];
  }

private:
  std::size_t idx(int x, int y, int z) const {
    return (static_cast<std::size_t>(z) * ny_ + y) * nx_ + x;
  }
  int nx_, ny_, nz_;
  std::vector<double> s_;
};

} // namespace

double mse(const Volume3D &a, const Volume3D &b) {
  check_same_dims(a, b);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    sum += d * d;
  }
  return sum / static_cast<double>(a.voxels());
}

double ssim(const Volume3D &a, const Volume3D &b, const SsimConfig &cfg) {
  check_same_dims(a, b);
  cfg.validate();
  if (cfg.window > a.nx || cfg.window > a.ny || cfg.window > a.nz)
    throw shape_error("ssim window larger than volume");

  const Sat3 sa(a.nx, a.ny, a.nz,
                [&](int x, int y, int z) { return a.at(x, y, z); });
  const Sat3 sb(a.nx, a.ny, a.nz,
                [&](int x, int y, int z) { return b.at(x, y, z); });
  const Sat3 saa(a.nx, a.ny, a.nz, [&](int x, int y, int z) {
    return a.at(x, y, z) * a.at(x, y, z);
  });
  const Sat3 sbb(a.nx, a.ny, a.nz, [&](int x, int y, int z) {
    return b.at(x, y, z) * b.at(x, y, z);
  });
  const Sat3 sab(a.nx, a.ny, a.nz, [&](int x, int y, int z) {
    return a.at(x, y, z) * b.at(x, y, z);
  });

  const double c1 = (cfg.k1 * cfg.range) * (cfg.k1 * cfg.range);
  const double c2 = (cfg.k2 * cfg.range) * (cfg.k2 * cfg.range);
  const int r = cfg.window / 2;

  // Per-voxel map first: the final mean is then a fixed-order serial sum,
  // independent of the worker count.
  std::vector<double> map(static_cast<std::size_t>(a.voxels()));
  parallel_for(map.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const int x = static_cast<int>(i % a.nx);
      const int y = static_cast<int>((i / a.nx) % a.ny);
      const int z = static_cast<int>(i / (static_cast<std::size_t>(a.nx) *
                                          a.ny));
      const int x0 = std::max(0, x - r), x1 = std::min(a.nx - 1, x + r);
      const int y0 = std::max(0, y - r), y1 = std::min(a.ny - 1, y + r);
      const int z0 = std::max(0, z - r), z1 = std::min(a.nz - 1, z + r);
      const double n = static_cast<double>(x1 - x0 + 1) * (y1 - y0 + 1) *
                       (z1 - z0 + 1);
      const double ma = sa.box(x0, x1, y0, y1, z0, z1) / n;
      const double mb = sb.box(x0, x1, y0, y1, z0, z1) / n;
      const double va = saa.box(x0, x1, y0, y1, z0, z1) / n - ma * ma;
      const double vb = sbb.box(x0, x1, y0, y1, z0, z1) / n - mb * mb;
      const double cov = sab.box(x0, x1, y0, y1, z0, z1) / n - ma * mb;
      map[i] = ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
               ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
  });

  double sum = 0.0;
  for (double v : map)
    sum += v;
  return sum / static_cast<double>(map.size());
}

void Contour::validate() const {
  if (points.empty())
    throw config_error("contour has no sample positions");
  if (points.size() != normals.size())
    throw config_error("contour points/normals length mismatch");
}

Contour circle_contour(Vec3 center, Vec3 plane_normal, double radius,
                       int n_positions) {
  if (!(radius > 0.0))
    throw config_error("contour radius must be positive");
  if (n_positions < 1)
    throw config_error("contour needs at least one position");
  auto [u, w] = orthonormal_basis(plane_normal);
  Contour c;
  for (int i = 0; i < n_positions; ++i) {
    const double th =
        2.0 * std::numbers::pi * static_cast<double>(i) / n_positions;
    const Vec3 dir = std::cos(th) * u + std::sin(th) * w;
    c.points.push_back(center + radius * dir);
    c.normals.push_back(dir);
  }
  return c;
}

double edge_sharpness(const Volume3D &v, const Contour &contour) {
  v.validate();
  contour.validate();
  const double step = 0.1 * v.min_spacing();
  const int m = static_cast<int>(std::floor(3.0 / step));
  if (m < 1)
    throw config_error("voxel spacing too coarse for the profile scheme");

  double sum = 0.0;
  int used = 0;
  std::vector<double> prof(static_cast<std::size_t>(2 * m + 1));
  for (std::size_t k = 0; k < contour.points.size(); ++k) {
    const Vec3 p = contour.points[k];
    const Vec3 n = normalized(contour.normals[k]);
    for (int i = -m; i <= m; ++i)
      prof[static_cast<std::size_t>(i + m)] =
          sample_trilinear(v, p + (i * step) * n);

    const auto [mn_it, mx_it] = std::minmax_element(prof.begin(), prof.end());
    if (*mx_it == *mn_it)
      continue; // flat ray carries no edge
    const double scale = 1.0 / (*mx_it - *mn_it);

    double best = 0.0;
    for (std::size_t i = 1; i + 1 < prof.size(); ++i) {
      const double g =
          std::abs((prof[i + 1] - prof[i - 1]) * scale) / (2.0 * step);
      best = std::max(best, g);
    }
    sum += best;
    ++used;
  }
  if (used == 0)
    throw measurement_error("every contour ray was flat; no edge found");
  return sum / static_cast<double>(used);
}

double snr(const Volume3D &v, const Roi3D &blood, const Roi3D &lung) {
  const double denom = roi_mean(v, lung);
  if (denom == 0.0)
    throw measurement_error("lung ROI mean is zero; SNR undefined");
  return roi_mean(v, blood) / denom;
}

double cnr(const Volume3D &v, const Roi3D &blood, const Roi3D &myocardium) {
  const double denom = roi_mean(v, myocardium);
  if (denom == 0.0)
    throw measurement_error("myocardium ROI mean is zero; CNR undefined");
  return roi_mean(v, blood) / denom;
}

void write_metric_report_csv(const std::vector<MetricReport> &rows,
                             const std::string &path) {
  CsvTable t;
  t.header = {"id", "ssim", "mse", "edge_sharpness_mm_inv", "snr", "cnr"};
  auto opt = [](const std::optional<double> &o) {
    return o ? csv_num(*o) : std::string();
  };
  for (const MetricReport &r : rows)
    t.rows.push_back({r.id, csv_num(r.ssim), csv_num(r.mse),
                      opt(r.edge_sharpness_mm_inv), opt(r.snr), opt(r.cnr)});
  write_csv(t, path);
}

} // namespace volsr
