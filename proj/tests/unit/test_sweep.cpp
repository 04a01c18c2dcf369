#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "volsr/csv.hpp"
#include "volsr/errors.hpp"
#include "volsr/kspace.hpp"
#include "volsr/sweep.hpp"
#include "volsr/unet.hpp"
#include "volsr/volume.hpp"

using namespace volsr;

namespace {

// Residual net with all parameters zero: the forward pass is the identity
// on nonnegative input up to the f32 evaluation path, so SR scores can
// differ from LR scores only by quantization of the input volume.
UNetWeights<float> zero_residual_net() {
  NetworkConfig cfg;
  cfg.levels = 2;
  cfg.base_channels = 2;
  cfg.residual = true;
  UNetWeights<float> w = init_weights<float>(cfg, 0);
  w.set_flat(std::vector<float>(w.param_count(), 0.0f));
  return w;
}

std::vector<Volume3D> small_corpus() {
  std::vector<Volume3D> corpus;
  corpus.push_back(vt::random_volume(20, 20, 20, 61, 0.0f, 1.0f));
  corpus.push_back(vt::random_volume(20, 20, 20, 62, 0.0f, 1.0f));
  return corpus;
}

DegradeConfig base_config() {
  DegradeConfig cfg;
  cfg.frac_y = cfg.frac_z = 0.5;
  cfg.pf_y = cfg.pf_z = 0.75;
  return cfg;
}

} // namespace

TEST_SUITE("sweep") {

TEST_CASE("sweep emits ten rows at increasing fractions with one control") {
  const auto w = zero_residual_net();
  const auto corpus = small_corpus();
  const SweepReport report = run_sweep(w, corpus, base_config());

  REQUIRE(report.rows.size() == 10);
  for (int i = 0; i < 10; ++i) {
    CHECK(report.rows[static_cast<std::size_t>(i)].fraction ==
          static_cast<double>(i + 1) / 10.0);
    CHECK(report.rows[static_cast<std::size_t>(i)].has_control == (i == 9));
  }
  CHECK_NOTHROW(report.validate());
}

TEST_CASE("full-sampling control reproduces the truth exactly") {
  // At fraction 1 with partial Fourier lifted to 1 the degradation is the
  // identity, so the control LR scores are perfect.
  const auto w = zero_residual_net();
  const SweepReport report = run_sweep(w, small_corpus(), base_config());
  const SweepRow &last = report.rows.back();
  REQUIRE(last.has_control);
  CHECK(last.control_lr.ssim_mean == 1.0);
  CHECK(last.control_lr.ssim_sd == 0.0);
  CHECK(last.control_lr.mse_mean == 0.0);
  CHECK(last.control_lr.mse_sd == 0.0);
  // Zero-weight residual net: the control SR path is the identity up to
  // the f32 cast of the input.
  CHECK(last.control_sr.ssim_mean > 1.0 - 1e-9);
  CHECK(last.control_sr.mse_mean < 1e-12);
}

TEST_CASE("zero-weight residual net gives SR scores equal to LR scores") {
  const auto w = zero_residual_net();
  const SweepReport report = run_sweep(w, small_corpus(), base_config());
  for (const SweepRow &row : report.rows) {
    // Equal up to the f32 quantization of the network input.
    CHECK(std::abs(row.sr.ssim_mean - row.lr.ssim_mean) < 1e-6);
    CHECK(std::abs(row.sr.ssim_sd - row.lr.ssim_sd) < 1e-6);
    CHECK(std::abs(row.sr.mse_mean - row.lr.mse_mean) < 1e-6);
    CHECK(std::abs(row.sr.mse_sd - row.lr.mse_sd) < 1e-6);
  }
  // The fraction-1.0 row still runs partial Fourier, so it is not perfect.
  CHECK(report.rows.back().lr.ssim_mean < 1.0);
  // More retained resolution scores better than the harshest cut.
  CHECK(report.rows.back().lr.ssim_mean > report.rows.front().lr.ssim_mean);
  CHECK(report.rows.back().lr.mse_mean < report.rows.front().lr.mse_mean);
}

TEST_CASE("sweep is deterministic") {
  const auto w = zero_residual_net();
  const auto corpus = small_corpus();
  const SweepReport a = run_sweep(w, corpus, base_config());
  const SweepReport b = run_sweep(w, corpus, base_config());
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].lr.ssim_mean == b.rows[i].lr.ssim_mean);
    CHECK(a.rows[i].sr.mse_mean == b.rows[i].sr.mse_mean);
  }
}

TEST_CASE("sweep rejects an empty corpus") {
  CHECK_THROWS_AS(run_sweep(zero_residual_net(), {}, base_config()),
                  config_error);
}

TEST_CASE("sweep report validation") {
  SweepReport r;
  for (int i = 1; i <= 9; ++i) {
    SweepRow row;
    row.fraction = i / 10.0;
    r.rows.push_back(row);
  }
  CHECK_THROWS_AS(r.validate(), stats_error); // nine rows
  SweepRow row;
  row.fraction = 0.95; // not increasing past 0.9 by a full step? still >
  r.rows.push_back(row);
  CHECK_NOTHROW(r.validate());
  r.rows[3].fraction = r.rows[2].fraction; // tie breaks monotonicity
  CHECK_THROWS_AS(r.validate(), stats_error);
}

TEST_CASE("sweep csv schema with blank control cells off the last row") {
  const auto dir = vt::scratch_dir("sweep_csv");
  const std::string path = (dir / "sweep.csv").string();
  const auto w = zero_residual_net();
  const SweepReport report = run_sweep(w, small_corpus(), base_config());
  write_sweep_csv(report, path);

  const CsvTable t = read_csv(path);
  REQUIRE(t.header.size() == 17);
  CHECK(t.header[0] == "fraction");
  CHECK(t.header[1] == "lr_ssim_mean");
  CHECK(t.header[5] == "sr_ssim_mean");
  CHECK(t.header[9] == "full_lr_ssim_mean");
  CHECK(t.header[16] == "full_sr_mse_sd");
  REQUIRE(t.rows.size() == 10);
  for (std::size_t i = 0; i + 1 < t.rows.size(); ++i)
    for (std::size_t c = 9; c < 17; ++c)
      CHECK(t.rows[i][c].empty());
  CHECK(std::stod(t.rows[9][9]) == 1.0);  // control LR ssim mean
  CHECK(std::stod(t.rows[9][11]) == 0.0); // control LR mse mean
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    CHECK(std::stod(t.rows[i][0]) ==
          doctest::Approx((i + 1) / 10.0).epsilon(1e-12));
    CHECK(std::stod(t.rows[i][1]) ==
          doctest::Approx(report.rows[i].lr.ssim_mean).epsilon(1e-9));
  }
}

} // TEST_SUITE
