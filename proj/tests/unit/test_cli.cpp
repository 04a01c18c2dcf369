#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <json.hpp>

#include "helpers.hpp"
#include "manifest.hpp"
#include "volsr/csv.hpp"
#include "volsr/kspace.hpp"
#include "volsr/stats.hpp"
#include "volsr/unet.hpp"
#include "volsr/volume.hpp"

using namespace volsr;
namespace fs = std::filesystem;

namespace {

// Runs the installed binary with the given arguments; stdout is discarded,
// stderr lands in err_path when given.
int run_cli(const std::string &args, const std::string &err_path = "") {
  std::string cmd = std::string(VOLSR_BIN) + " " + args + " >/dev/null";
  cmd += err_path.empty() ? " 2>/dev/null" : " 2>" + err_path;
  const int rc = std::system(cmd.c_str());
  return rc == -1 ? -1 : WEXITSTATUS(rc);
}

std::string slurp(const std::string &path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

bool same_bytes(const fs::path &a, const fs::path &b) {
  return slurp(a.string()) == slurp(b.string());
}

UNetWeights<float> zero_net(int levels = 2, int channels = 2) {
  NetworkConfig cfg;
  cfg.levels = levels;
  cfg.base_channels = channels;
  cfg.residual = true;
  UNetWeights<float> w = init_weights<float>(cfg, 0);
  w.set_flat(std::vector<float>(w.param_count(), 0.0f));
  return w;
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("phantom writes a corpus with truth table and manifest") {
  const auto dir = vt::scratch_dir("cli_phantom");
  const fs::path out = dir / "corpus";
  REQUIRE(run_cli("--seed 5 phantom --count 2 --out-dir " + out.string() +
                  " --dims 28,28,16 --spacing 1.0,1.0,1.0") == 0);

  CHECK(fs::exists(out / "phantom_000.srv"));
  CHECK(fs::exists(out / "phantom_001.srv"));
  REQUIRE(fs::exists(out / "truth.csv"));
  REQUIRE(fs::exists(out / "manifest.json"));

  const CsvTable truth = read_csv((out / "truth.csv").string());
  CHECK(truth.header[0] == "phantom_id");
  CHECK(truth.header[1] == "kind");
  CHECK(truth.header[3] == "diameter_mm");
  int vessels = 0, rois = 0;
  for (const auto &row : truth.rows) {
    if (row[1] == "vessel") {
      ++vessels;
      CHECK(std::stod(row[3]) > 0.0);
    } else if (row[1] == "roi") {
      ++rois;
      CHECK((row[2] == "blood" || row[2] == "myocardium" || row[2] == "lung"));
    }
  }
  CHECK(vessels >= 2);      // at least one vessel per phantom
  CHECK(rois == 2 * 3);     // three named regions per phantom

  // Checksums in the manifest match the files on disk.
  nlohmann::json man;
  std::ifstream(out / "manifest.json") >> man;
  CHECK(man["subcommand"] == "phantom");
  CHECK(man["seed"] == 5);
  const std::string p0 = (out / "phantom_000.srv").string();
  REQUIRE(man["checksums"].contains(p0));
  CHECK(man["checksums"][p0] == hex64(fnv1a64_file(p0)));

  // Same seed reproduces the volumes byte for byte; a new seed does not.
  const fs::path again = dir / "again", other = dir / "other";
  REQUIRE(run_cli("--seed 5 phantom --count 2 --out-dir " + again.string() +
                  " --dims 28,28,16 --spacing 1.0,1.0,1.0") == 0);
  REQUIRE(run_cli("--seed 6 phantom --count 2 --out-dir " + other.string() +
                  " --dims 28,28,16 --spacing 1.0,1.0,1.0") == 0);
  CHECK(same_bytes(out / "phantom_000.srv", again / "phantom_000.srv"));
  CHECK(same_bytes(out / "truth.csv", again / "truth.csv"));
  CHECK(!same_bytes(out / "phantom_000.srv", other / "phantom_000.srv"));
}

TEST_CASE("degrade file mode matches the in-process library call") {
  const auto dir = vt::scratch_dir("cli_degrade");
  Volume3D v = vt::random_volume(16, 20, 20, 8);
  vt::snap_f32(v); // the file payload is f32; keep both paths identical
  const std::string in = (dir / "in.srv").string();
  const std::string out = (dir / "out.srv").string();
  write_volume(v, in);
  REQUIRE(run_cli("degrade --in " + in + " --out " + out +
                  " --frac 0.5 --pf 0.75") == 0);

  DegradeConfig cfg;
  cfg.frac_y = cfg.frac_z = 0.5;
  cfg.pf_y = cfg.pf_z = 0.75;
  Volume3D want = degrade(v, cfg);
  vt::snap_f32(want); // the output file quantizes the same way
  const Volume3D got = read_volume(out);
  REQUIRE(got.data.size() == want.data.size());
  CHECK(got.data == want.data);
  CHECK(fs::exists(out + ".manifest.json"));

  // Single-axis mode leaves the other axis untouched.
  const std::string outy = (dir / "out_y.srv").string();
  REQUIRE(run_cli("degrade --in " + in + " --out " + outy +
                  " --frac 0.5 --pf 0.75 --axes y") == 0);
  DegradeConfig ycfg;
  ycfg.frac_y = 0.5;
  ycfg.pf_y = 0.75;
  ycfg.frac_z = ycfg.pf_z = 1.0;
  Volume3D want_y = degrade(v, ycfg);
  vt::snap_f32(want_y);
  CHECK(read_volume(outy).data == want_y.data);
}

TEST_CASE("degrade rejects out-of-range fractions through the cli") {
  const auto dir = vt::scratch_dir("cli_degrade_bad");
  const std::string in = (dir / "in.srv").string();
  write_volume(vt::random_volume(8, 8, 8, 1), in);
  const std::string err = (dir / "err.txt").string();
  CHECK(run_cli("degrade --in " + in + " --out " + (dir / "o.srv").string() +
                    " --frac 0.0",
                err) != 0);
  CHECK(slurp(err).find("error:") != std::string::npos);
}

TEST_CASE("infer with zero residual weights reproduces normalized input") {
  const auto dir = vt::scratch_dir("cli_infer");
  const std::string wpath = (dir / "w.srw").string();
  save_weights(zero_net(), wpath);

  Volume3D v = vt::random_volume(16, 16, 16, 3);
  vt::snap_f32(v); // exact file round trip so identity shows as equality
  const std::string in = (dir / "in.srv").string();
  const std::string out = (dir / "out.srv").string();
  write_volume(v, in);
  REQUIRE(run_cli("infer --weights " + wpath + " --in " + in + " --out " +
                  out) == 0);
  CHECK(read_volume(out).data == v.data);

  // Directory mode mirrors relative names.
  const fs::path ind = dir / "ind", outd = dir / "outd";
  fs::create_directories(ind);
  write_volume(v, (ind / "a.srv").string());
  write_volume(vt::random_volume(16, 16, 16, 4), (ind / "b.srv").string());
  REQUIRE(run_cli("infer --weights " + wpath + " --in " + ind.string() +
                  " --out " + outd.string()) == 0);
  CHECK(fs::exists(outd / "a.srv"));
  CHECK(fs::exists(outd / "b.srv"));
  CHECK(read_volume((outd / "a.srv").string()).data == v.data);
}

TEST_CASE("infer rejects dims the network cannot pool") {
  const auto dir = vt::scratch_dir("cli_infer_bad");
  const std::string wpath = (dir / "w.srw").string();
  save_weights(zero_net(), wpath);
  const std::string in = (dir / "odd.srv").string();
  write_volume(vt::random_volume(15, 16, 16, 5, 0.0f, 1.0f), in);
  const std::string err = (dir / "err.txt").string();
  CHECK(run_cli("infer --weights " + wpath + " --in " + in + " --out " +
                    (dir / "o.srv").string(),
                err) != 0);
  CHECK(slurp(err).find("divisible") != std::string::npos);
}

TEST_CASE("eval of a directory against itself is a perfect score") {
  const auto dir = vt::scratch_dir("cli_eval");
  const fs::path truth = dir / "truth";
  fs::create_directories(truth);
  write_volume(vt::random_volume(12, 12, 12, 31, 0.0f, 1.0f),
               (truth / "case1.srv").string());
  write_volume(vt::random_volume(12, 12, 12, 32, 0.0f, 1.0f),
               (truth / "case2.srv").string());
  const std::string report = (dir / "report.csv").string();
  REQUIRE(run_cli("eval --truth " + truth.string() + " --test " +
                  truth.string() + " --out " + report) == 0);

  const CsvTable t = read_csv(report);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][0] == "case1");
  CHECK(t.rows[1][0] == "case2");
  for (const auto &row : t.rows) {
    CHECK(std::stod(row[1]) == 1.0); // ssim
    CHECK(std::stod(row[2]) == 0.0); // mse
    CHECK(row[3].empty());           // no contours given
    CHECK(row[4].empty());
    CHECK(row[5].empty());
  }
}

TEST_CASE("train smoke run writes weights, loss log, and manifest") {
  const auto dir = vt::scratch_dir("cli_train");
  const fs::path corpus = dir / "corpus";
  fs::create_directories(corpus);
  write_volume(vt::random_volume(16, 20, 20, 41, 0.0f, 1.0f),
               (corpus / "v0.srv").string());
  write_volume(vt::random_volume(16, 20, 20, 42, 0.0f, 1.0f),
               (corpus / "v1.srv").string());
  const std::string cfg = (dir / "train.cfg").string();
  {
    std::ofstream f(cfg);
    f << "loss = l1\n"
      << "lr = 1e-3\n"
      << "batch = 2\n"
      << "epochs = 2\n"
      << "seed = 3\n"
      << "levels = 2\n"
      << "base_channels = 2\n"
      << "checkpoint_every = 100\n";
  }
  const std::string wpath = (dir / "w.srw").string();
  const std::string log = (dir / "loss.csv").string();
  REQUIRE(run_cli("train --corpus " + corpus.string() + " --config " + cfg +
                  " --out " + wpath + " --log " + log) == 0);

  const UNetWeights<float> w = load_weights(wpath);
  CHECK(w.cfg.levels == 2);
  CHECK(w.cfg.base_channels == 2);

  const CsvTable t = read_csv(log);
  REQUIRE(t.header == std::vector<std::string>{"step", "epoch", "batch_loss",
                                               "epoch_mean_loss"});
  CHECK(t.rows.size() == 2); // one batch per epoch, two epochs
  CHECK(t.rows[0][0] == "1");
  CHECK(!t.rows[1][3].empty()); // epoch-end row carries the mean

  nlohmann::json man;
  std::ifstream(wpath + ".manifest.json") >> man;
  CHECK(man["subcommand"] == "train");
  CHECK(man["config"]["loss"] == "l1");
  CHECK(man["checksums"][wpath] == hex64(fnv1a64_file(wpath)));
}

TEST_CASE("stats cli agrees with the library") {
  const auto dir = vt::scratch_dir("cli_stats");
  const std::string pairs = (dir / "pairs.csv").string();
  {
    std::ofstream f(pairs);
    f << "id,reference,test\n"
      << "a,1,2\n"
      << "b,2,2\n"
      << "c,3,5\n";
  }
  const std::string ratings = (dir / "ratings.csv").string();
  {
    std::ofstream f(ratings);
    f << "subject,rater,value\n"
      << "a,ref,1\na,test,2\n"
      << "b,ref,2\nb,test,2\n"
      << "c,ref,3\nc,test,5\n";
  }
  const std::string out = (dir / "agreement.csv").string();
  REQUIRE(run_cli("stats --pairs " + pairs + " --ratings " + ratings +
                  " --out " + out) == 0);

  const CsvTable t = read_csv(out);
  REQUIRE(t.rows.size() == 1);
  CHECK(std::stod(t.rows[0][0]) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::stod(t.rows[0][1]) == doctest::Approx(-0.96).epsilon(1e-9));
  CHECK(std::stod(t.rows[0][2]) == doctest::Approx(2.96).epsilon(1e-9));
  CHECK(t.rows[0][6] == "3");

  RatingTable table;
  table.subjects = 3;
  table.raters = 2;
  table.values = {1, 2, 2, 2, 3, 5};
  const IccResult want = icc_oneway(table);
  CHECK(std::stod(t.rows[0][3]) == doctest::Approx(want.icc).epsilon(1e-9));
}

TEST_CASE("sweep cli emits the ten-row table") {
  const auto dir = vt::scratch_dir("cli_sweep");
  const std::string wpath = (dir / "w.srw").string();
  save_weights(zero_net(), wpath);
  const fs::path corpus = dir / "corpus";
  fs::create_directories(corpus);
  write_volume(vt::random_volume(20, 20, 20, 51, 0.0f, 1.0f),
               (corpus / "v0.srv").string());
  const std::string out = (dir / "sweep.csv").string();
  REQUIRE(run_cli("sweep --weights " + wpath + " --corpus " +
                  corpus.string() + " --out " + out + " --pf 0.75") == 0);

  const CsvTable t = read_csv(out);
  REQUIRE(t.rows.size() == 10);
  CHECK(std::stod(t.rows[0][0]) == 0.1);
  CHECK(std::stod(t.rows[9][0]) == 1.0);
  CHECK(t.rows[0][9].empty());            // control cells blank off row 10
  CHECK(std::stod(t.rows[9][9]) == 1.0);  // control LR ssim
}

TEST_CASE("manifest path can be overridden") {
  const auto dir = vt::scratch_dir("cli_manifest");
  const Volume3D v = vt::random_volume(8, 12, 12, 71);
  const std::string in = (dir / "in.srv").string();
  const std::string out = (dir / "out.srv").string();
  const std::string man = (dir / "custom_manifest.json").string();
  write_volume(v, in);
  REQUIRE(run_cli("--manifest " + man + " degrade --in " + in + " --out " +
                  out) == 0);
  CHECK(fs::exists(man));
  CHECK(!fs::exists(out + ".manifest.json"));
}

TEST_CASE("bad invocations exit nonzero") {
  const auto dir = vt::scratch_dir("cli_bad");
  CHECK(run_cli("") != 0);                      // subcommand required
  CHECK(run_cli("no-such-command") != 0);
  CHECK(run_cli("degrade --in only.srv") != 0); // missing --out
  CHECK(run_cli("train --corpus " + (dir / "missing").string() +
                " --config " + (dir / "nope.cfg").string() + " --out " +
                (dir / "w.srw").string() + " --log " +
                (dir / "l.csv").string()) != 0);
  CHECK(run_cli("eval --truth " + (dir / "m1").string() + " --test " +
                (dir / "m2").string() + " --out " +
                (dir / "r.csv").string()) != 0);
}

} // TEST_SUITE
