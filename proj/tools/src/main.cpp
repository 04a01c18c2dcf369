#include <cstdint>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "volsr/errors.hpp"
#include "volsr/parallel.hpp"

using namespace volsr;

int main(int argc, char **argv) {
  CLI::App app{"Volumetric super-resolution pipeline: synthetic phantoms, "
               "k-space degradation, residual U-Net training and inference, "
               "image-quality metrics, agreement statistics"};
  app.require_subcommand(1);

  GlobalOpts g;
  std::uint64_t seed_val = 0;
  auto *seed_opt =
      app.add_option("--seed", seed_val, "Seed for every stochastic step");
  app.add_option("--threads", g.threads,
                 "Worker thread count (0 = hardware concurrency)");
  app.add_option("--manifest", g.manifest_path,
                 "Run manifest path (default: derived from the output)");

  auto finish_globals = [&] {
    if (seed_opt->count() > 0)
      g.seed = seed_val;
    if (g.threads > 0)
      set_thread_count(g.threads);
  };

  PhantomOpts po;
  auto *ph = app.add_subcommand(
      "phantom", "Generate a seeded synthetic corpus with known geometry");
  ph->fallthrough();
  ph->add_option("--count", po.count, "Number of phantoms");
  ph->add_option("--out-dir", po.out_dir, "Output directory")->required();
  ph->add_option("--dims", po.dims, "Grid size nx,ny,nz")->delimiter(',');
  ph->add_option("--spacing", po.spacing, "Voxel spacing in mm sx,sy,sz")
      ->delimiter(',');
  ph->callback([&] {
    finish_globals();
    cmd_phantom(po, g);
  });

  DegradeOpts dgo;
  auto *dg = app.add_subcommand(
      "degrade", "Simulate low-resolution acquisition by k-space truncation "
                 "and partial Fourier");
  dg->fallthrough();
  dg->add_option("--in", dgo.in, "Input volume or directory")->required();
  dg->add_option("--out", dgo.out, "Output volume or directory")->required();
  dg->add_option("--frac", dgo.frac, "Centered k-space fraction kept");
  dg->add_option("--pf", dgo.pf, "Partial Fourier fraction of the band");
  dg->add_option("--axes", dgo.axes, "Degraded axes: y, z, or yz");
  dg->callback([&] {
    finish_globals();
    cmd_degrade(dgo, g);
  });

  TrainOpts tro;
  auto *tr = app.add_subcommand("train",
                                "Train the network on a volume corpus");
  tr->fallthrough();
  tr->add_option("--corpus", tro.corpus, "Directory of training volumes")
      ->required();
  tr->add_option("--config", tro.config, "Flat key=value config file")
      ->required();
  tr->add_option("--out", tro.out, "Weight checkpoint to write")->required();
  tr->add_option("--log", tro.log, "Loss history CSV")->required();
  tr->callback([&] {
    finish_globals();
    cmd_train(tro, g);
  });

  InferOpts ino;
  auto *in = app.add_subcommand("infer",
                                "Super-resolve volumes with trained weights");
  in->fallthrough();
  in->add_option("--weights", ino.weights, "Weight checkpoint")->required();
  in->add_option("--in", ino.in, "Input volume or directory")->required();
  in->add_option("--out", ino.out, "Output volume or directory")->required();
  in->callback([&] {
    finish_globals();
    cmd_infer(ino, g);
  });

  EvalOpts evo;
  auto *ev = app.add_subcommand(
      "eval", "Score test volumes against reference volumes");
  ev->fallthrough();
  ev->add_option("--truth", evo.truth_dir, "Reference volume directory")
      ->required();
  ev->add_option("--test", evo.test_dir, "Test volume directory")->required();
  ev->add_option("--out", evo.out, "Metric report CSV")->required();
  ev->add_option("--contours", evo.contours,
                 "Edge-sharpness contour table (id,cx,cy,cz,ax,ay,az,"
                 "radius_mm)");
  ev->add_option("--rois", evo.rois,
                 "ROI table (id,name,lo_x,hi_x,lo_y,hi_y,lo_z,hi_z)");
  ev->callback([&] {
    finish_globals();
    cmd_eval(evo, g);
  });

  SweepOpts swo;
  auto *sw = app.add_subcommand(
      "sweep", "Score super-resolution across resolution fractions 0.1-1.0");
  sw->fallthrough();
  sw->add_option("--weights", swo.weights, "Weight checkpoint")->required();
  sw->add_option("--corpus", swo.corpus, "Directory of reference volumes")
      ->required();
  sw->add_option("--out", swo.out, "Sweep report CSV")->required();
  sw->add_option("--pf", swo.pf, "Partial Fourier fraction during the sweep");
  sw->callback([&] {
    finish_globals();
    cmd_sweep(swo, g);
  });

  StatsOpts sto;
  auto *st = app.add_subcommand(
      "stats", "Bland-Altman and ICC agreement from measurement tables");
  st->fallthrough();
  st->add_option("--pairs", sto.pairs, "Paired measurements CSV "
                                       "(id,reference,test)")
      ->required();
  st->add_option("--ratings", sto.ratings,
                 "Rating table CSV (subject,rater,value)")
      ->required();
  st->add_option("--out", sto.out, "Agreement report CSV")->required();
  st->callback([&] {
    finish_globals();
    cmd_stats(sto, g);
  });

  E2eOpts e2o;
  auto *e2 = app.add_subcommand(
      "e2e", "Run the whole pipeline on a small fixed configuration");
  e2->fallthrough();
  e2->add_option("--out-dir", e2o.out_dir, "Output directory")->required();
  e2->callback([&] {
    finish_globals();
    cmd_e2e(e2o, g);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
