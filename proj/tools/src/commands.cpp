#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "manifest.hpp"
#include "volsr/errors.hpp"
#include "volsr/metrics.hpp"
#include "volsr/stats.hpp"
#include "volsr/sweep.hpp"
#include "volsr/train.hpp"

namespace fs = std::filesystem;

namespace volsr {

std::uint64_t seed_or(const GlobalOpts &g, std::uint64_t fallback) {
  return g.seed ? *g.seed : fallback;
}

namespace {

std::string pad3(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%03d", i);
  return buf;
}

std::string manifest_target(const GlobalOpts &g, const std::string &primary,
                            bool primary_is_dir) {
  if (!g.manifest_path.empty())
    return g.manifest_path;
  if (primary_is_dir)
    return (fs::path(primary) / "manifest.json").string();
  return primary + ".manifest.json";
}

void ensure_parent_dir(const std::string &path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty())
    fs::create_directories(parent);
}

std::string strip_srv(const std::string &rel) {
  return rel.substr(0, rel.size() - 4);
}

double parse_num(const std::string &v, const std::string &key) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size())
      throw std::invalid_argument(v);
    return x;
  } catch (const std::exception &) {
    throw config_error("bad numeric value for " + key + ": '" + v + "'");
  }
}

int parse_int(const std::string &v, const std::string &key) {
  const double x = parse_num(v, key);
  const int i = static_cast<int>(x);
  if (static_cast<double>(i) != x)
    throw config_error(key + " must be an integer, got '" + v + "'");
  return i;
}

bool parse_flag(const std::string &v, const std::string &key) {
  if (v == "1" || v == "true")
    return true;
  if (v == "0" || v == "false")
    return false;
  throw config_error(key + " must be true/false or 1/0, got '" + v + "'");
}

} // namespace

std::map<std::string, std::string> parse_kv_file(const std::string &path) {
  std::ifstream f(path);
  if (!f)
    throw io_error("cannot open config: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(f, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#')
      continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw config_error(path + ":" + std::to_string(lineno) +
                         ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    const std::string val = trim(t.substr(eq + 1));
    if (key.empty())
      throw config_error(path + ":" + std::to_string(lineno) + ": empty key");
    if (!kv.emplace(key, val).second)
      throw config_error(path + ":" + std::to_string(lineno) +
                         ": duplicate key " + key);
  }
  return kv;
}

std::vector<std::string> list_volumes(const std::string &dir) {
  if (!fs::is_directory(dir))
    throw io_error("not a directory: " + dir);
  std::vector<std::string> rels;
  for (const auto &entry : fs::recursive_directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".srv")
      rels.push_back(fs::relative(entry.path(), dir).generic_string());
  std::sort(rels.begin(), rels.end());
  return rels;
}

std::vector<std::string> generate_corpus(const std::string &dir, int count,
                                         int first_index,
                                         const std::vector<int> &dims,
                                         const std::vector<double> &spacing,
                                         std::uint64_t seed) {
  if (count < 1)
    throw config_error("phantom count must be >= 1");
  if (dims.size() != 3 || spacing.size() != 3)
    throw config_error("dims and spacing need exactly three components");
  fs::create_directories(dir);

  CsvTable truth;
  truth.header = {"phantom_id", "kind", "name", "diameter_mm",
                  "cx",         "cy",   "cz",   "ax",
                  "ay",         "az",   "lo_x", "hi_x",
                  "lo_y",       "hi_y", "lo_z", "hi_z"};
  std::vector<std::string> outs;
  for (int i = 0; i < count; ++i) {
    const int gi = first_index + i;
    const std::string id = "phantom_" + pad3(gi);
    const PhantomSpec spec =
        random_phantom_spec(dims[0], dims[1], dims[2], spacing[0], spacing[1],
                            spacing[2], seed + static_cast<std::uint64_t>(gi));
    auto [vol, tr] = generate(spec);
    const std::string path = (fs::path(dir) / (id + ".srv")).string();
    write_volume(vol, path);
    outs.push_back(path);

    for (const CylinderTruth &c : tr.cylinders)
      truth.rows.push_back({id, "vessel", "vessel_" + std::to_string(c.id),
                            csv_num(c.diameter_mm), csv_num(c.center.x),
                            csv_num(c.center.y), csv_num(c.center.z),
                            csv_num(c.axis.x), csv_num(c.axis.y),
                            csv_num(c.axis.z), "", "", "", "", "", ""});
    for (const NamedRoi &r : tr.rois)
      truth.rows.push_back({id, "roi", r.name, "", "", "", "", "", "", "",
                            std::to_string(r.box.lo_x),
                            std::to_string(r.box.hi_x),
                            std::to_string(r.box.lo_y),
                            std::to_string(r.box.hi_y),
                            std::to_string(r.box.lo_z),
                            std::to_string(r.box.hi_z)});
  }
  const std::string tpath = (fs::path(dir) / "truth.csv").string();
  write_csv(truth, tpath);
  outs.push_back(tpath);
  return outs;
}

std::vector<std::string> degrade_tree(const std::string &in,
                                      const std::string &out,
                                      const DegradeConfig &cfg) {
  std::vector<std::string> outs;
  auto one = [&](const std::string &src, const std::string &dst) {
    const Volume3D v = read_volume(src);
    ensure_parent_dir(dst);
    write_volume(degrade(v, cfg), dst);
    outs.push_back(dst);
  };
  if (fs::is_directory(in)) {
    const auto rels = list_volumes(in);
    if (rels.empty())
      throw config_error("no .srv volumes under " + in);
    for (const auto &rel : rels)
      one((fs::path(in) / rel).string(), (fs::path(out) / rel).string());
  } else {
    one(in, out);
  }
  return outs;
}

std::vector<std::string> infer_tree(const UNetWeights<float> &w,
                                    const std::string &in,
                                    const std::string &out,
                                    nlohmann::json *volume_times) {
  std::vector<std::string> outs;
  auto one = [&](const std::string &src, const std::string &dst) {
    Volume3D v = read_volume(src);
    const auto [mn, mx] =
        std::minmax_element(v.data.begin(), v.data.end());
    if (*mn < 0.0 || *mx > 1.0) {
      std::cerr << "warning: input not normalized to [0, 1]; rescaling: "
                << src << "\n";
      v = normalize(v);
    }
    StopWatch sw;
    const Volume3D sr = unet_forward(v, w);
    const double sec = sw.seconds();
    ensure_parent_dir(dst);
    write_volume(sr, dst);
    outs.push_back(dst);
    if (volume_times)
      volume_times->push_back({{"path", dst}, {"seconds", sec}});
  };
  if (fs::is_directory(in)) {
    const auto rels = list_volumes(in);
    if (rels.empty())
      throw config_error("no .srv volumes under " + in);
    for (const auto &rel : rels)
      one((fs::path(in) / rel).string(), (fs::path(out) / rel).string());
  } else {
    one(in, out);
  }
  return outs;
}

std::vector<std::string> eval_tree(const EvalOpts &opt) {
  const auto rels = list_volumes(opt.truth_dir);
  if (rels.empty())
    throw config_error("no .srv volumes under " + opt.truth_dir);

  std::map<std::string, std::vector<Contour>> contours;
  if (!opt.contours.empty()) {
    const CsvTable t = read_csv(opt.contours);
    const int ci = t.column("id");
    const int cx = t.column("cx"), cy = t.column("cy"), cz = t.column("cz");
    const int ax = t.column("ax"), ay = t.column("ay"), az = t.column("az");
    const int cr = t.column("radius_mm");
    for (const auto &row : t.rows) {
      auto num = [&](int col) { return std::stod(row[(std::size_t)col]); };
      contours[row[(std::size_t)ci]].push_back(
          circle_contour({num(cx), num(cy), num(cz)},
                         {num(ax), num(ay), num(az)}, num(cr)));
    }
  }

  std::map<std::string, std::map<std::string, Roi3D>> rois;
  if (!opt.rois.empty()) {
    const CsvTable t = read_csv(opt.rois);
    const int ci = t.column("id"), cn = t.column("name");
    const int b[6] = {t.column("lo_x"), t.column("hi_x"), t.column("lo_y"),
                      t.column("hi_y"), t.column("lo_z"), t.column("hi_z")};
    for (const auto &row : t.rows) {
      auto iv = [&](int col) { return std::stoi(row[(std::size_t)col]); };
      rois[row[(std::size_t)ci]][row[(std::size_t)cn]] =
          Roi3D{iv(b[0]), iv(b[1]), iv(b[2]), iv(b[3]), iv(b[4]), iv(b[5])};
    }
  }

  std::vector<MetricReport> rows;
  for (const auto &rel : rels) {
    const std::string test_path = (fs::path(opt.test_dir) / rel).string();
    if (!fs::exists(test_path))
      throw io_error("missing test volume for " + rel);
    const Volume3D truth = read_volume((fs::path(opt.truth_dir) / rel).string());
    const Volume3D test = read_volume(test_path);

    MetricReport r;
    r.id = strip_srv(rel);
    // Intensity comparisons run in min-max normalized space so volumes on
    // different display scales score on equal footing; SNR/CNR stay on the
    // volume as given (they are ratios of its own ROI means).
    r.ssim = ssim(normalize(test), normalize(truth));
    r.mse = mse(normalize(test), normalize(truth));

    if (auto it = contours.find(r.id); it != contours.end()) {
      double sum = 0.0;
      int used = 0;
      for (const Contour &c : it->second) {
        try {
          sum += edge_sharpness(test, c);
          ++used;
        } catch (const error &e) {
          std::cerr << "warning: edge sharpness skipped for " << r.id << ": "
                    << e.what() << "\n";
        }
      }
      if (used > 0)
        r.edge_sharpness_mm_inv = sum / used;
    }
    if (auto it = rois.find(r.id); it != rois.end()) {
      const auto &m = it->second;
      const auto blood = m.find("blood");
      const auto lung = m.find("lung");
      const auto myo = m.find("myocardium");
      try {
        if (blood != m.end() && lung != m.end())
          r.snr = snr(test, blood->second, lung->second);
        if (blood != m.end() && myo != m.end())
          r.cnr = cnr(test, blood->second, myo->second);
      } catch (const error &e) {
        std::cerr << "warning: SNR/CNR skipped for " << r.id << ": "
                  << e.what() << "\n";
      }
    }
    rows.push_back(std::move(r));
  }
  write_metric_report_csv(rows, opt.out);
  return {opt.out};
}

std::vector<std::string> stats_report(const StatsOpts &opt) {
  const PairedMeasurements pairs = read_pairs_csv(opt.pairs);
  const RatingTable ratings = read_ratings_csv(opt.ratings);
  const BlandAltman ba = bland_altman(pairs);
  const IccResult icc = icc_oneway(ratings);
  AgreementReport rep;
  rep.bias = ba.bias;
  rep.loa_low = ba.loa_low;
  rep.loa_high = ba.loa_high;
  rep.icc = icc.icc;
  rep.icc_ci_low = icc.ci_low;
  rep.icc_ci_high = icc.ci_high;
  rep.n = ba.n;
  write_agreement_csv(rep, opt.out);
  return {opt.out};
}

void cmd_phantom(const PhantomOpts &opt, const GlobalOpts &g) {
  StopWatch sw;
  const std::uint64_t seed = seed_or(g, 0);
  RunManifest man("phantom", seed);
  man.j["config"] = {{"count", opt.count},
                     {"dims", opt.dims},
                     {"spacing", opt.spacing}};
  const auto outs =
      generate_corpus(opt.out_dir, opt.count, 0, opt.dims, opt.spacing, seed);
  for (const auto &p : outs)
    man.add_output(p);
  man.write(manifest_target(g, opt.out_dir, true), sw.seconds());
}

void cmd_degrade(const DegradeOpts &opt, const GlobalOpts &g) {
  StopWatch sw;
  if (opt.axes != "y" && opt.axes != "z" && opt.axes != "yz")
    throw config_error("axes must be y, z, or yz, got '" + opt.axes + "'");
  DegradeConfig cfg;
  cfg.frac_y = cfg.frac_z = 1.0;
  cfg.pf_y = cfg.pf_z = 1.0;
  if (opt.axes.find('y') != std::string::npos) {
    cfg.frac_y = opt.frac;
    cfg.pf_y = opt.pf;
  }
  if (opt.axes.find('z') != std::string::npos) {
    cfg.frac_z = opt.frac;
    cfg.pf_z = opt.pf;
  }

  RunManifest man("degrade", seed_or(g, 0));
  man.j["config"] = {{"frac", opt.frac}, {"pf", opt.pf}, {"axes", opt.axes}};
  man.add_input(opt.in);
  const bool dir_mode = fs::is_directory(opt.in);
  for (const auto &p : degrade_tree(opt.in, opt.out, cfg))
    man.add_output(p);
  man.write(manifest_target(g, opt.out, dir_mode), sw.seconds());
}

void cmd_train(const TrainOpts &opt, const GlobalOpts &g) {
  StopWatch sw;
  const auto kv = parse_kv_file(opt.config);

  TrainConfig tc;
  NetworkConfig nc;
  DegradeConfig dc;
  int canon[3] = {0, 0, 0}; // 0 = native (taken from the first volume)
  int window[2] = {0, 0};   // 0 = full canonical extent

  for (const auto &[key, val] : kv) {
    if (key == "loss")
      tc.loss = parse_loss(val);
    else if (key == "lr")
      tc.lr = parse_num(val, key);
    else if (key == "batch")
      tc.batch = parse_int(val, key);
    else if (key == "epochs")
      tc.epochs = parse_int(val, key);
    else if (key == "seed")
      tc.seed = static_cast<std::uint64_t>(parse_num(val, key));
    else if (key == "checkpoint_every")
      tc.checkpoint_every = parse_int(val, key);
    else if (key == "checkpoint_prefix")
      tc.checkpoint_prefix = val;
    else if (key == "levels")
      nc.levels = parse_int(val, key);
    else if (key == "base_channels")
      nc.base_channels = parse_int(val, key);
    else if (key == "convs_per_level")
      nc.convs_per_level = parse_int(val, key);
    else if (key == "head_kernel")
      nc.head_kernel = parse_int(val, key);
    else if (key == "residual")
      nc.residual = parse_flag(val, key);
    else if (key == "frac_y")
      dc.frac_y = parse_num(val, key);
    else if (key == "frac_z")
      dc.frac_z = parse_num(val, key);
    else if (key == "pf_y")
      dc.pf_y = parse_num(val, key);
    else if (key == "pf_z")
      dc.pf_z = parse_num(val, key);
    else if (key == "canon_nx")
      canon[0] = parse_int(val, key);
    else if (key == "canon_ny")
      canon[1] = parse_int(val, key);
    else if (key == "canon_nz")
      canon[2] = parse_int(val, key);
    else if (key == "window_nx")
      window[0] = parse_int(val, key);
    else if (key == "window_ny")
      window[1] = parse_int(val, key);
    else
      throw config_error("unknown config key: " + key);
  }
  if (g.seed)
    tc.seed = *g.seed;

  const auto rels = list_volumes(opt.corpus);
  if (rels.empty())
    throw config_error("no .srv volumes under " + opt.corpus);
  std::vector<Volume3D> hr;
  for (const auto &rel : rels)
    hr.push_back(read_volume((fs::path(opt.corpus) / rel).string()));

  PairConfig pc;
  pc.degrade = dc;
  pc.canon_nx = canon[0] > 0 ? canon[0] : hr.front().nx;
  pc.canon_ny = canon[1] > 0 ? canon[1] : hr.front().ny;
  pc.canon_nz = canon[2] > 0 ? canon[2] : hr.front().nz;
  pc.window_nx = window[0] > 0 ? window[0] : pc.canon_nx;
  pc.window_ny = window[1] > 0 ? window[1] : pc.canon_ny;

  std::vector<std::pair<Volume3D, Volume3D>> pairs;
  pairs.reserve(hr.size());
  for (const Volume3D &v : hr)
    pairs.push_back(make_training_pair(v, pc));
  hr.clear();

  RunManifest man("train", tc.seed);
  man.j["config"] = {{"loss", loss_name(tc.loss)},
                     {"lr", tc.lr},
                     {"batch", tc.batch},
                     {"epochs", tc.epochs},
                     {"checkpoint_every", tc.checkpoint_every},
                     {"checkpoint_prefix", tc.checkpoint_prefix},
                     {"levels", nc.levels},
                     {"base_channels", nc.base_channels},
                     {"convs_per_level", nc.convs_per_level},
                     {"head_kernel", nc.head_kernel},
                     {"residual", nc.residual},
                     {"frac_y", dc.frac_y},
                     {"frac_z", dc.frac_z},
                     {"pf_y", dc.pf_y},
                     {"pf_z", dc.pf_z},
                     {"canon", {pc.canon_nx, pc.canon_ny, pc.canon_nz}},
                     {"window", {pc.window_nx, pc.window_ny}}};
  man.add_input(opt.corpus);

  const TrainResult result = train(pairs, nc, tc);
  ensure_parent_dir(opt.out);
  save_weights(result.weights, opt.out);
  man.add_output(opt.out);
  ensure_parent_dir(opt.log);
  write_history_csv(result.history, opt.log);
  man.add_output(opt.log);
  if (!tc.checkpoint_prefix.empty() && tc.checkpoint_every > 0)
    for (int e = tc.checkpoint_every; e <= tc.epochs; e += tc.checkpoint_every)
      man.add_output(tc.checkpoint_prefix + ".epoch" + std::to_string(e) +
                     ".srw");
  man.write(manifest_target(g, opt.out, false), sw.seconds());
}

void cmd_infer(const InferOpts &opt, const GlobalOpts &g) {
  StopWatch sw;
  const UNetWeights<float> w = load_weights(opt.weights);
  RunManifest man("infer", seed_or(g, 0));
  man.j["config"] = {{"weights", opt.weights},
                     {"levels", w.cfg.levels},
                     {"base_channels", w.cfg.base_channels},
                     {"residual", w.cfg.residual}};
  man.add_input(opt.weights);
  man.add_input(opt.in);
  nlohmann::json times = nlohmann::json::array();
  const bool dir_mode = fs::is_directory(opt.in);
  for (const auto &p : infer_tree(w, opt.in, opt.out, &times))
    man.add_output(p);
  man.j["volumes"] = times;
  man.write(manifest_target(g, opt.out, dir_mode), sw.seconds());
}

void cmd_eval(const EvalOpts &opt, const GlobalOpts &g) {
  StopWatch sw;
  RunManifest man("eval", seed_or(g, 0));
  man.j["config"] = {{"truth", opt.truth_dir},
                     {"test", opt.test_dir},
                     {"contours", opt.contours},
                     {"rois", opt.rois}};
  man.add_input(opt.truth_dir);
  man.add_input(opt.test_dir);
  for (const auto &p : eval_tree(opt))
    man.add_output(p);
  man.write(manifest_target(g, opt.out, false), sw.seconds());
}

void cmd_sweep(const SweepOpts &opt, const GlobalOpts &g) {
  StopWatch sw;
  const UNetWeights<float> w = load_weights(opt.weights);
  const auto rels = list_volumes(opt.corpus);
  if (rels.empty())
    throw config_error("no .srv volumes under " + opt.corpus);
  std::vector<Volume3D> corpus;
  for (const auto &rel : rels)
    corpus.push_back(read_volume((fs::path(opt.corpus) / rel).string()));

  DegradeConfig base;
  base.pf_y = base.pf_z = opt.pf;

  RunManifest man("sweep", seed_or(g, 0));
  man.j["config"] = {{"pf", opt.pf}, {"volumes", rels.size()}};
  man.add_input(opt.weights);
  man.add_input(opt.corpus);
  write_sweep_csv(run_sweep(w, corpus, base), opt.out);
  man.add_output(opt.out);
  man.write(manifest_target(g, opt.out, false), sw.seconds());
}

void cmd_stats(const StatsOpts &opt, const GlobalOpts &g) {
  StopWatch sw;
  RunManifest man("stats", seed_or(g, 0));
  man.j["config"] = {{"pairs", opt.pairs}, {"ratings", opt.ratings}};
  man.add_input(opt.pairs);
  man.add_input(opt.ratings);
  for (const auto &p : stats_report(opt))
    man.add_output(p);
  man.write(manifest_target(g, opt.out, false), sw.seconds());
}

} // namespace volsr
