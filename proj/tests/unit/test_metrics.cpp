#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "helpers.hpp"
#include "volsr/csv.hpp"
#include "volsr/errors.hpp"
#include "volsr/metrics.hpp"
#include "volsr/rng.hpp"
#include "volsr/volume.hpp"

using namespace volsr;

namespace {

// Direct per-voxel reimplementation: explicit window loops with edge
// clamping and population moments, no summed-area tables.
double ssim_oracle(const Volume3D &a, const Volume3D &b,
                   const SsimConfig &cfg = {}) {
  const int r = cfg.window / 2;
  const double c1 = (cfg.k1 * cfg.range) * (cfg.k1 * cfg.range);
  const double c2 = (cfg.k2 * cfg.range) * (cfg.k2 * cfg.range);
  double total = 0.0;
  for (int z = 0; z < a.nz; ++z)
    for (int y = 0; y < a.ny; ++y)
      for (int x = 0; x < a.nx; ++x) {
        const int x0 = std::max(0, x - r), x1 = std::min(a.nx - 1, x + r);
        const int y0 = std::max(0, y - r), y1 = std::min(a.ny - 1, y + r);
        const int z0 = std::max(0, z - r), z1 = std::min(a.nz - 1, z + r);
        double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
        int n = 0;
        for (int k = z0; k <= z1; ++k)
          for (int j = y0; j <= y1; ++j)
            for (int i = x0; i <= x1; ++i) {
              const double va = a.at(i, j, k), vb = b.at(i, j, k);
              sa += va;
              sb += vb;
              saa += va * va;
              sbb += vb * vb;
              sab += va * vb;
              ++n;
            }
        const double ma = sa / n, mb = sb / n;
        const double va = saa / n - ma * ma;
        const double vb = sbb / n - mb * mb;
        const double cov = sab / n - ma * mb;
        total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
                 ((ma * ma + mb * mb + c1) * (va + vb + c2));
      }
  return total / static_cast<double>(a.voxels());
}

// Independent trilinear sampler for the profile oracle.
double trilerp(const Volume3D &v, Vec3 p) {
  const double u = p.x / v.spacing_x - 0.5;
  const double w = p.y / v.spacing_y - 0.5;
  const double q = p.z / v.spacing_z - 0.5;
  const int i0 = static_cast<int>(std::floor(u));
  const int j0 = static_cast<int>(std::floor(w));
  const int k0 = static_cast<int>(std::floor(q));
  const double fx = u - i0, fy = w - j0, fz = q - k0;
  double acc = 0.0;
  for (int dz = 0; dz < 2; ++dz)
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx) {
        const double wx = dx ? fx : 1.0 - fx;
        const double wy = dy ? fy : 1.0 - fy;
        const double wz = dz ? fz : 1.0 - fz;
        acc += wx * wy * wz * v.at(i0 + dx, j0 + dy, k0 + dz);
      }
  return acc;
}

double edge_sharpness_oracle(const Volume3D &v, const Contour &c) {
  const double step = 0.1 * v.min_spacing();
  const int m = static_cast<int>(std::floor(3.0 / step));
  double sum = 0.0;
  int used = 0;
  for (std::size_t k = 0; k < c.points.size(); ++k) {
    const Vec3 n = normalized(c.normals[k]);
    std::vector<double> prof;
    for (int i = -m; i <= m; ++i)
      prof.push_back(trilerp(v, c.points[k] + (i * step) * n));
    const double mx = *std::max_element(prof.begin(), prof.end());
    const double mn = *std::min_element(prof.begin(), prof.end());
    if (mx == mn)
      continue;
    double best = 0.0;
    for (std::size_t i = 1; i + 1 < prof.size(); ++i)
      best = std::max(best, std::abs((prof[i + 1] - prof[i - 1]) / (mx - mn)) /
                                (2.0 * step));
    sum += best;
    ++used;
  }
  REQUIRE(used > 0);
  return sum / used;
}

// 0/1 step at the plane x = nx/2 voxels, unit spacing.
Volume3D step_volume(int nx, int ny, int nz, double spacing = 1.0) {
  Volume3D v(nx, ny, nz, spacing, spacing, spacing);
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x)
        v.at(x, y, z) = x < nx / 2 ? 0.0f : 1.0f;
  return v;
}

} // namespace

TEST_SUITE("metrics") {

TEST_CASE("mse of identical volumes is zero") {
  const Volume3D a = vt::random_volume(5, 4, 3, 11);
  CHECK(mse(a, a) == 0.0);
}

TEST_CASE("mse hand examples") {
  Volume3D a(2, 2, 2), b(2, 2, 2);
  std::fill(b.data.begin(), b.data.end(), 0.5f);
  CHECK(mse(a, b) == 0.25);

  // One voxel off by 1: mean of a single 1 over 8 voxels.
  Volume3D c(2, 2, 2), d(2, 2, 2);
  d.at(1, 0, 1) = 1.0f;
  CHECK(mse(c, d) == 0.125);
}

TEST_CASE("mse is invariant under a shared intensity shift") {
  // Dyadic data (k/256) plus a dyadic shift stays exact in binary floating
  // point, so the invariance holds bitwise.
  Rng rng(77);
  Volume3D a(6, 5, 4), b(6, 5, 4), as(6, 5, 4), bs(6, 5, 4);
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    a.data[i] = static_cast<double>(rng.uniform_index(257)) / 256.0;
    b.data[i] = static_cast<double>(rng.uniform_index(257)) / 256.0;
    as.data[i] = a.data[i] + 7.0 / 256.0;
    bs.data[i] = b.data[i] + 7.0 / 256.0;
  }
  CHECK(mse(a, b) == mse(as, bs));
}

TEST_CASE("mse rejects shape mismatch") {
  Volume3D a(4, 4, 4), b(4, 4, 5);
  CHECK_THROWS_AS(mse(a, b), shape_error);
}

TEST_CASE("ssim of a volume with itself is exactly one") {
  const Volume3D a = vt::random_volume(8, 9, 7, 21);
  CHECK(ssim(a, a) == 1.0);
}

TEST_CASE("ssim is symmetric") {
  const Volume3D a = vt::random_volume(8, 8, 8, 31);
  const Volume3D b = vt::random_volume(8, 8, 8, 32);
  CHECK(ssim(a, b) == ssim(b, a));
}

TEST_CASE("ssim of anti-correlated checkerboards is negative") {
  Volume3D a(8, 8, 8), b(8, 8, 8);
  for (int z = 0; z < 8; ++z)
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) {
        const double bit = static_cast<double>((x + y + z) % 2);
        a.at(x, y, z) = bit;
        b.at(x, y, z) = 1.0 - bit;
      }
  CHECK(ssim(a, b) < 0.0);
}

TEST_CASE("ssim matches the direct window-loop oracle") {
  for (int seed = 0; seed < 4; ++seed) {
    const Volume3D a = vt::random_volume(8, 8, 8, 100 + seed);
    const Volume3D b = vt::random_volume(8, 8, 8, 200 + seed);
    const double got = ssim(a, b);
    const double want = ssim_oracle(a, b);
    CHECK_MESSAGE(std::abs(got - want) < 1e-9, "seed=", seed, " got=", got,
                  " want=", want);
  }

  // Non-cubic volume with a smaller window.
  SsimConfig cfg;
  cfg.window = 5;
  const Volume3D a = vt::random_volume(6, 7, 5, 300);
  const Volume3D b = vt::random_volume(6, 7, 5, 301);
  CHECK(std::abs(ssim(a, b, cfg) - ssim_oracle(a, b, cfg)) < 1e-9);
}

TEST_CASE("ssim config validation") {
  const Volume3D a = vt::random_volume(8, 8, 8, 1);
  SsimConfig cfg;
  cfg.window = 4;
  CHECK_THROWS_AS(ssim(a, a, cfg), config_error);
  cfg.window = 1;
  CHECK_THROWS_AS(ssim(a, a, cfg), config_error);
  cfg = SsimConfig{};
  cfg.k1 = 0.0;
  CHECK_THROWS_AS(ssim(a, a, cfg), config_error);
  cfg = SsimConfig{};
  cfg.range = -1.0;
  CHECK_THROWS_AS(ssim(a, a, cfg), config_error);
}

TEST_CASE("ssim rejects windows larger than the volume") {
  const Volume3D a = vt::random_volume(8, 8, 5, 2);
  CHECK_THROWS_AS(ssim(a, a), shape_error); // default window 7 > nz
  Volume3D b(8, 8, 8);
  CHECK_THROWS_AS(ssim(a, b), shape_error);
}

TEST_CASE("circle_contour geometry") {
  const Vec3 center{10.0, 8.0, 6.0};
  const Vec3 axis{0.3, -0.2, 0.9};
  const double radius = 2.5;
  const Contour c = circle_contour(center, axis, radius, 60);
  REQUIRE(c.points.size() == 60);
  REQUIRE(c.normals.size() == 60);
  const Vec3 a = normalized(axis);
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    const Vec3 d = c.points[i] - center;
    CHECK(std::abs(norm(d) - radius) < 1e-12);
    CHECK(std::abs(dot(d, a)) < 1e-12);        // in-plane
    CHECK(std::abs(norm(c.normals[i]) - 1.0) < 1e-12);
    CHECK(norm(d - radius * c.normals[i]) < 1e-12); // radially outward
  }
  // Equal angular spacing.
  const double want = std::cos(2.0 * std::numbers::pi / 60.0);
  for (std::size_t i = 0; i + 1 < c.normals.size(); ++i)
    CHECK(std::abs(dot(c.normals[i], c.normals[i + 1]) - want) < 1e-12);

  CHECK_THROWS_AS(circle_contour(center, axis, 0.0, 60), config_error);
  CHECK_THROWS_AS(circle_contour(center, axis, 1.0, 0), config_error);
}

TEST_CASE("contour validation") {
  Contour c;
  CHECK_THROWS_AS(c.validate(), config_error);
  c.points.push_back({1, 1, 1});
  c.points.push_back({2, 2, 2});
  c.normals.push_back({1, 0, 0});
  CHECK_THROWS_AS(c.validate(), config_error);
}

TEST_CASE("edge sharpness of a hard unit step on a 1 mm grid is 1/mm") {
  const Volume3D v = step_volume(12, 6, 6);
  Contour c;
  c.points.push_back({6.0, 3.0, 3.0});
  c.normals.push_back({1.0, 0.0, 0.0});
  const double es = edge_sharpness(v, c);
  // The sampled positions are 0.1 mm steps in binary floating point, so the
  // slope carries a few ulps of round-off around the ideal 1.0.
  CHECK(std::abs(es - 1.0) < 1e-12);
}

TEST_CASE("edge sharpness is invariant under affine intensity remaps") {
  const Volume3D v = step_volume(12, 6, 6);
  Volume3D w = v;
  for (double &x : w.data)
    x = 3.0 * x + 0.2;
  Contour c;
  c.points.push_back({6.0, 3.0, 3.0});
  c.normals.push_back({1.0, 0.0, 0.0});
  CHECK(std::abs(edge_sharpness(v, c) - edge_sharpness(w, c)) < 1e-12);
}

TEST_CASE("edge sharpness halves when voxel spacing doubles") {
  const Volume3D v = step_volume(12, 6, 6, 1.0);
  Volume3D w(12, 6, 6, 2.0, 2.0, 2.0);
  w.data = v.data;
  Contour cv, cw;
  cv.points.push_back({6.0, 3.0, 3.0});
  cv.normals.push_back({1.0, 0.0, 0.0});
  cw.points.push_back({12.0, 6.0, 6.0});
  cw.normals.push_back({1.0, 0.0, 0.0});
  CHECK(std::abs(edge_sharpness(w, cw) - 0.5 * edge_sharpness(v, cv)) <
        1e-12);
}

TEST_CASE("edge sharpness matches the profile oracle on random volumes") {
  for (int seed = 0; seed < 5; ++seed) {
    const Volume3D v = vt::random_volume(16, 16, 12, 400 + seed);
    Rng rng(500 + seed);
    Contour c;
    for (int k = 0; k < 5; ++k) {
      c.points.push_back({rng.uniform(4.5, 11.0), rng.uniform(4.5, 11.0),
                          rng.uniform(4.5, 7.5)});
      Vec3 n{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
             rng.uniform(-1.0, 1.0)};
      c.normals.push_back(normalized(n));
    }
    const double got = edge_sharpness(v, c);
    const double want = edge_sharpness_oracle(v, c);
    CHECK_MESSAGE(std::abs(got - want) < 1e-9, "seed=", seed, " got=", got,
                  " want=", want);
  }
}

TEST_CASE("edge sharpness skips flat rays and fails when all are flat") {
  Volume3D v(12, 8, 8);
  std::fill(v.data.begin(), v.data.end(), 0.4f);
  Contour c;
  c.points.push_back({6.0, 4.0, 4.0});
  c.normals.push_back({1.0, 0.0, 0.0});
  CHECK_THROWS_WITH_AS(edge_sharpness(v, c),
                       doctest::Contains("every contour ray was flat"),
                       measurement_error);

  // One informative ray among flat ones: only it contributes.
  Volume3D s = step_volume(12, 8, 8);
  for (int z = 0; z < 8; ++z) // flatten the upper half in y
    for (int y = 4; y < 8; ++y)
      for (int x = 0; x < 12; ++x)
        s.at(x, y, z) = 0.0f;
  Contour both;
  both.points.push_back({6.0, 2.0, 4.0}); // crosses the step
  both.normals.push_back({1.0, 0.0, 0.0});
  both.points.push_back({6.0, 6.5, 4.0}); // flat region
  both.normals.push_back({1.0, 0.0, 0.0});
  Contour lone;
  lone.points.push_back({6.0, 2.0, 4.0});
  lone.normals.push_back({1.0, 0.0, 0.0});
  CHECK(edge_sharpness(s, both) == edge_sharpness(s, lone));
}

TEST_CASE("edge sharpness rejects spacing too coarse for the profile") {
  Volume3D v(4, 4, 4, 40.0, 40.0, 40.0); // step 4 mm, under one sample
  v.at(0, 0, 0) = 1.0f;
  Contour c;
  c.points.push_back({80.0, 80.0, 80.0});
  c.normals.push_back({1.0, 0.0, 0.0});
  CHECK_THROWS_AS(edge_sharpness(v, c), config_error);
}

TEST_CASE("snr and cnr are ROI mean ratios") {
  Volume3D v(12, 12, 12);
  const Roi3D blood{2, 6, 2, 6, 2, 6};
  const Roi3D myo{7, 11, 2, 6, 2, 6};
  const Roi3D lung{2, 6, 7, 11, 2, 6};
  auto fill = [](Volume3D &vol, const Roi3D &r, double value) {
    for (int z = r.lo_z; z < r.hi_z; ++z)
      for (int y = r.lo_y; y < r.hi_y; ++y)
        for (int x = r.lo_x; x < r.hi_x; ++x)
          vol.at(x, y, z) = value;
  };
  fill(v, blood, 0.9);
  fill(v, myo, 0.3);
  fill(v, lung, 0.05);

  // 0.9, 0.3 and 0.05 are not exactly representable in binary floating
  // point, so the ratios carry a few ulps of round-off.
  CHECK(std::abs(cnr(v, blood, myo) - 3.0) < 1e-12);
  CHECK(std::abs(snr(v, blood, lung) - 18.0) < 1e-12);

  // Exactly representable intensities give exact ratios.
  Volume3D e(12, 12, 12);
  std::fill(e.data.begin(), e.data.end(), 0.25);
  fill(e, blood, 100.0);
  fill(e, lung, 5.0);
  CHECK(snr(e, blood, lung) == 20.0);
  CHECK(cnr(e, blood, blood) == 1.0); // equal regions: unit contrast

  // Brute-force cross-check against direct means.
  const Volume3D r = vt::random_volume(12, 12, 12, 9, 0.1, 1.0);
  double bm = 0, lm = 0;
  for (int z = 0; z < 4; ++z)
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) {
        bm += r.at(blood.lo_x + x, blood.lo_y + y, blood.lo_z + z);
        lm += r.at(lung.lo_x + x, lung.lo_y + y, lung.lo_z + z);
      }
  CHECK(std::abs(snr(r, blood, lung) - bm / lm) < 1e-12);
}

TEST_CASE("snr and cnr reject zero-mean reference regions") {
  Volume3D v(8, 8, 8); // all zeros
  const Roi3D a{0, 2, 0, 2, 0, 2};
  const Roi3D b{4, 6, 4, 6, 4, 6};
  CHECK_THROWS_WITH_AS(snr(v, a, b), doctest::Contains("SNR undefined"),
                       measurement_error);
  CHECK_THROWS_WITH_AS(cnr(v, a, b), doctest::Contains("CNR undefined"),
                       measurement_error);
}

TEST_CASE("metric report csv schema with optional cells") {
  const auto dir = vt::scratch_dir("metric_report");
  const std::string path = (dir / "report.csv").string();
  std::vector<MetricReport> rows(2);
  rows[0].id = "case-a";
  rows[0].ssim = 0.875;
  rows[0].mse = 0.0013;
  rows[1].id = "case-b";
  rows[1].ssim = 0.96;
  rows[1].mse = 0.0007;
  rows[1].edge_sharpness_mm_inv = 1.25;
  rows[1].snr = 17.5;
  rows[1].cnr = 2.9;
  write_metric_report_csv(rows, path);

  const CsvTable t = read_csv(path);
  REQUIRE(t.header == std::vector<std::string>{"id", "ssim", "mse",
                                               "edge_sharpness_mm_inv", "snr",
                                               "cnr"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][0] == "case-a");
  CHECK(std::stod(t.rows[0][1]) == 0.875);
  CHECK(std::stod(t.rows[0][2]) == 0.0013);
  CHECK(t.rows[0][3].empty());
  CHECK(t.rows[0][4].empty());
  CHECK(t.rows[0][5].empty());
  CHECK(t.rows[1][0] == "case-b");
  CHECK(std::stod(t.rows[1][3]) == 1.25);
  CHECK(std::stod(t.rows[1][4]) == 17.5);
  CHECK(std::stod(t.rows[1][5]) == 2.9);
}

} // TEST_SUITE
