#include <filesystem>
#include <functional>
#include <iostream>
#include <map>

#include "commands.hpp"
#include "manifest.hpp"
#include "volsr/errors.hpp"
#include "volsr/stats.hpp"
#include "volsr/sweep.hpp"
#include "volsr/train.hpp"

namespace fs = std::filesystem;

namespace volsr {

namespace {

// Small fixed configuration: big enough that every stage has real work
// (vessels span several voxels, the sweep's 10% row keeps a nonempty band)
// and small enough to finish in a couple of minutes on one core.
constexpr int kTrainCount = 6;
constexpr int kTestCount = 2;
const std::vector<int> kDims{32, 32, 32};
const std::vector<double> kSpacing{1.6, 1.6, 1.6};
constexpr double kFrac = 0.5;
constexpr double kPf = 0.75;
constexpr int kEpochs = 12;

NetworkConfig e2e_net() {
  NetworkConfig nc;
  nc.levels = 2;
  nc.base_channels = 8;
  return nc;
}

struct VesselRef {
  std::string phantom;
  std::string vessel;
  Vec3 center;
  Vec3 axis;
  double diameter_mm;
};

std::vector<VesselRef> read_truth_vessels(const std::string &truth_csv) {
  const CsvTable t = read_csv(truth_csv);
  const int kind = t.column("kind"), pid = t.column("phantom_id"),
            name = t.column("name"), dia = t.column("diameter_mm");
  const int cx = t.column("cx"), cy = t.column("cy"), cz = t.column("cz");
  const int ax = t.column("ax"), ay = t.column("ay"), az = t.column("az");
  std::vector<VesselRef> out;
  for (const auto &row : t.rows) {
    if (row[(std::size_t)kind] != "vessel")
      continue;
    auto num = [&](int col) { return std::stod(row[(std::size_t)col]); };
    out.push_back({row[(std::size_t)pid], row[(std::size_t)name],
                   {num(cx), num(cy), num(cz)}, {num(ax), num(ay), num(az)},
                   num(dia)});
  }
  return out;
}

} // namespace

void cmd_e2e(const E2eOpts &opt, const GlobalOpts &g) {
  StopWatch total;
  const std::uint64_t seed = seed_or(g, 0);
  const fs::path root(opt.out_dir);
  fs::create_directories(root);

  RunManifest man("e2e", seed);
  man.j["config"] = {{"train_count", kTrainCount}, {"test_count", kTestCount},
                     {"dims", kDims},              {"spacing", kSpacing},
                     {"frac", kFrac},              {"pf", kPf},
                     {"levels", 2},                {"base_channels", 8},
                     {"loss", "l1"},               {"lr", 1e-3},
                     {"batch", 2},                 {"epochs", kEpochs}};
  man.j["stages"] = nlohmann::json::array();

  auto stage = [&](const std::string &name,
                   const std::function<std::vector<std::string>()> &fn) {
    StopWatch sw;
    std::vector<std::string> outs;
    try {
      outs = fn();
    } catch (const std::exception &e) {
      throw error("stage '" + name + "' failed: " + e.what());
    }
    for (const auto &p : outs)
      man.add_output(p);
    man.j["stages"].push_back(
        {{"name", name}, {"wall_time_s", sw.seconds()}, {"outputs", outs}});
  };

  const std::string train_dir = (root / "train").string();
  const std::string test_dir = (root / "test").string();
  const std::string lr_dir = (root / "lr").string();
  const std::string sr_dir = (root / "sr").string();
  const std::string weights_path = (root / "weights.srw").string();

  stage("phantom", [&] {
    auto outs =
        generate_corpus(train_dir, kTrainCount, 0, kDims, kSpacing, seed);
    auto test_outs = generate_corpus(test_dir, kTestCount, kTrainCount, kDims,
                                     kSpacing, seed);
    outs.insert(outs.end(), test_outs.begin(), test_outs.end());
    return outs;
  });

  stage("degrade", [&] {
    DegradeConfig cfg;
    cfg.frac_y = cfg.frac_z = kFrac;
    cfg.pf_y = cfg.pf_z = kPf;
    return degrade_tree(test_dir, lr_dir, cfg);
  });

  stage("train", [&] {
    std::vector<std::pair<Volume3D, Volume3D>> pairs;
    for (const auto &rel : list_volumes(train_dir)) {
      const Volume3D hr = read_volume((fs::path(train_dir) / rel).string());
      PairConfig pc;
      pc.degrade.frac_y = pc.degrade.frac_z = kFrac;
      pc.degrade.pf_y = pc.degrade.pf_z = kPf;
      pc.canon_nx = hr.nx;
      pc.canon_ny = hr.ny;
      pc.canon_nz = hr.nz;
      pc.window_nx = hr.nx;
      pc.window_ny = hr.ny;
      pairs.push_back(make_training_pair(hr, pc));
    }
    TrainConfig tc;
    tc.epochs = kEpochs;
    tc.seed = seed;
    const TrainResult result = train(pairs, e2e_net(), tc);
    save_weights(result.weights, weights_path);
    write_history_csv(result.history, (root / "loss.csv").string());
    return std::vector<std::string>{weights_path,
                                    (root / "loss.csv").string()};
  });

  stage("infer", [&] {
    const UNetWeights<float> w = load_weights(weights_path);
    return infer_tree(w, lr_dir, sr_dir, nullptr);
  });

  stage("eval", [&] {
    const auto vessels =
        read_truth_vessels((fs::path(test_dir) / "truth.csv").string());
    CsvTable ct;
    ct.header = {"id", "cx", "cy", "cz", "ax", "ay", "az", "radius_mm"};
    for (const VesselRef &v : vessels)
      ct.rows.push_back({v.phantom, csv_num(v.center.x), csv_num(v.center.y),
                         csv_num(v.center.z), csv_num(v.axis.x),
                         csv_num(v.axis.y), csv_num(v.axis.z),
                         csv_num(v.diameter_mm / 2.0)});
    const std::string contours_path = (root / "eval_contours.csv").string();
    write_csv(ct, contours_path);

    const CsvTable truth = read_csv((fs::path(test_dir) / "truth.csv").string());
    CsvTable rt;
    rt.header = {"id",   "name", "lo_x", "hi_x",
                 "lo_y", "hi_y", "lo_z", "hi_z"};
    const int kind = truth.column("kind");
    for (const auto &row : truth.rows)
      if (row[(std::size_t)kind] == "roi")
        rt.rows.push_back({row[(std::size_t)truth.column("phantom_id")],
                           row[(std::size_t)truth.column("name")],
                           row[(std::size_t)truth.column("lo_x")],
                           row[(std::size_t)truth.column("hi_x")],
                           row[(std::size_t)truth.column("lo_y")],
                           row[(std::size_t)truth.column("hi_y")],
                           row[(std::size_t)truth.column("lo_z")],
                           row[(std::size_t)truth.column("hi_z")]});
    const std::string rois_path = (root / "eval_rois.csv").string();
    write_csv(rt, rois_path);

    std::vector<std::string> outs{contours_path, rois_path};
    EvalOpts lr_eval{test_dir, lr_dir, (root / "eval_lr.csv").string(),
                     contours_path, rois_path};
    for (const auto &p : eval_tree(lr_eval))
      outs.push_back(p);
    EvalOpts sr_eval{test_dir, sr_dir, (root / "eval_sr.csv").string(),
                     contours_path, rois_path};
    for (const auto &p : eval_tree(sr_eval))
      outs.push_back(p);
    return outs;
  });

  stage("sweep", [&] {
    const UNetWeights<float> w = load_weights(weights_path);
    std::vector<Volume3D> corpus;
    for (const auto &rel : list_volumes(test_dir))
      corpus.push_back(read_volume((fs::path(test_dir) / rel).string()));
    DegradeConfig base;
    base.pf_y = base.pf_z = kPf;
    write_sweep_csv(run_sweep(w, corpus, base),
                    (root / "sweep.csv").string());
    return std::vector<std::string>{(root / "sweep.csv").string()};
  });

  stage("stats", [&] {
    const auto vessels =
        read_truth_vessels((fs::path(test_dir) / "truth.csv").string());
    std::map<std::string, Volume3D> clean, sr;
    CsvTable pairs, ratings;
    pairs.header = {"id", "reference", "test"};
    ratings.header = {"subject", "rater", "value"};
    for (const VesselRef &v : vessels) {
      if (!clean.count(v.phantom)) {
        clean.emplace(v.phantom, read_volume((fs::path(test_dir) /
                                              (v.phantom + ".srv"))
                                                 .string()));
        sr.emplace(v.phantom, read_volume(
                                  (fs::path(sr_dir) / (v.phantom + ".srv"))
                                      .string()));
      }
      const std::string id = v.phantom + ":" + v.vessel;
      try {
        const double ref =
            measure_diameter(clean.at(v.phantom), v.center, v.axis);
        const double tst = measure_diameter(sr.at(v.phantom), v.center,
                                            v.axis);
        pairs.rows.push_back({id, csv_num(ref), csv_num(tst)});
        ratings.rows.push_back({id, "clean", csv_num(ref)});
        ratings.rows.push_back({id, "sr", csv_num(tst)});
      } catch (const error &e) {
        std::cerr << "warning: diameter skipped for " << id << ": "
                  << e.what() << "\n";
      }
    }
    if (pairs.rows.size() < 2)
      throw stats_error("fewer than 2 measurable vessels");
    const std::string pairs_path = (root / "pairs.csv").string();
    const std::string ratings_path = (root / "ratings.csv").string();
    write_csv(pairs, pairs_path);
    write_csv(ratings, ratings_path);
    StatsOpts so{pairs_path, ratings_path, (root / "agreement.csv").string()};
    auto outs = stats_report(so);
    outs.insert(outs.begin(), ratings_path);
    outs.insert(outs.begin(), pairs_path);
    return outs;
  });

  man.write(g.manifest_path.empty() ? (root / "manifest.json").string()
                                    : g.manifest_path,
            total.seconds());
}

} // namespace volsr
