#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "volsr/csv.hpp"
#include "volsr/kspace.hpp"
#include "volsr/phantom.hpp"
#include "volsr/unet.hpp"

namespace volsr {

/// Flags shared by every subcommand. An unset seed falls back to each
/// command's own default (or its config file); an empty manifest path is
/// derived from the primary output.
struct GlobalOpts {
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string manifest_path;
};

std::uint64_t seed_or(const GlobalOpts &g, std::uint64_t fallback);

struct PhantomOpts {
  int count = 8;
  std::string out_dir;
  std::vector<int> dims{64, 64, 32};
  std::vector<double> spacing{1.6, 1.6, 1.6};
};

struct DegradeOpts {
  std::string in;
  std::string out;
  double frac = 0.5;
  double pf = 0.75;
  std::string axes = "yz"; // "y", "z", or "yz"
};

struct TrainOpts {
  std::string corpus;
  std::string config;
  std::string out;
  std::string log;
};

struct InferOpts {
  std::string weights;
  std::string in; // file or directory of volumes
  std::string out;
};

struct EvalOpts {
  std::string truth_dir;
  std::string test_dir;
  std::string out;
  std::string contours; // optional csv: id,cx,cy,cz,ax,ay,az,radius_mm
  std::string rois;     // optional csv: id,name,lo_x,hi_x,lo_y,hi_y,lo_z,hi_z
};

struct SweepOpts {
  std::string weights;
  std::string corpus;
  std::string out;
  double pf = 0.75;
};

struct StatsOpts {
  std::string pairs;
  std::string ratings;
  std::string out;
};

struct E2eOpts {
  std::string out_dir;
};

void cmd_phantom(const PhantomOpts &opt, const GlobalOpts &g);
void cmd_degrade(const DegradeOpts &opt, const GlobalOpts &g);
void cmd_train(const TrainOpts &opt, const GlobalOpts &g);
void cmd_infer(const InferOpts &opt, const GlobalOpts &g);
void cmd_eval(const EvalOpts &opt, const GlobalOpts &g);
void cmd_sweep(const SweepOpts &opt, const GlobalOpts &g);
void cmd_stats(const StatsOpts &opt, const GlobalOpts &g);
void cmd_e2e(const E2eOpts &opt, const GlobalOpts &g);

// Building blocks shared between the subcommands and the e2e driver. Each
// returns the paths it wrote, in a deterministic order.

/// Flat key=value config document: blank lines and #-comments ignored,
/// duplicate keys rejected.
std::map<std::string, std::string> parse_kv_file(const std::string &path);

/// Sorted relative paths of every .srv file under `dir` (recursive).
std::vector<std::string> list_volumes(const std::string &dir);

/// Seeded phantoms phantom_<index>.srv plus a truth.csv sidecar listing
/// vessel geometry (kind=vessel: diameter, center, axis) and labeled ROI
/// boxes (kind=roi). Phantom i uses seed+first_index+i.
std::vector<std::string> generate_corpus(const std::string &dir, int count,
                                         int first_index,
                                         const std::vector<int> &dims,
                                         const std::vector<double> &spacing,
                                         std::uint64_t seed);

/// Degrades one volume file, or every volume under a directory into a
/// mirrored tree.
std::vector<std::string> degrade_tree(const std::string &in,
                                      const std::string &out,
                                      const DegradeConfig &cfg);

/// Super-resolves one volume file or a directory tree. Inputs outside
/// [0, 1] are min-max rescaled with a warning on stderr. Appends
/// {path, seconds} per volume to volume_times when given.
std::vector<std::string> infer_tree(const UNetWeights<float> &w,
                                    const std::string &in,
                                    const std::string &out,
                                    nlohmann::json *volume_times);

/// Pairs volumes by relative path and writes the metric report. SSIM/MSE
/// are computed after min-max normalizing both volumes; SNR/CNR use the
/// test volume as given. Contour and ROI sidecars are optional; rays or
/// ROIs that fail to measure leave their cells empty with a warning.
std::vector<std::string> eval_tree(const EvalOpts &opt);

/// Reads the two input tables, runs both estimators, writes the one-row
/// agreement report.
std::vector<std::string> stats_report(const StatsOpts &opt);

} // namespace volsr
