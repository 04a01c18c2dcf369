#include "volsr/sweep.hpp"

#include <cmath>

#include "volsr/csv.hpp"
#include "volsr/errors.hpp"
#include "volsr/metrics.hpp"

namespace volsr {

void SweepReport::validate() const {
  if (rows.size() != 10)
    throw stats_error("sweep report must have exactly 10 rows");
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (!(rows[i].fraction > rows[i - 1].fraction))
      throw stats_error("sweep fractions must be strictly increasing");
}

namespace {

SweepStats aggregate(const std::vector<double> &ssims,
                     const std::vector<double> &mses) {
  auto mean_sd = [](const std::vector<double> &xs) {
    double m = 0.0;
    for (double x : xs)
      m += x;
    m /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs)
      ss += (x - m) * (x - m);
    const double sd =
        xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1))
                      : 0.0;
    return std::pair<double, double>{m, sd};
  };
  SweepStats s;
  std::tie(s.ssim_mean, s.ssim_sd) = mean_sd(ssims);
  std::tie(s.mse_mean, s.mse_sd) = mean_sd(mses);
  return s;
}

struct Scores {
  std::vector<double> lr_ssim, lr_mse, sr_ssim, sr_mse;
};

void score_corpus(const UNetWeights<float> &weights,
                  const std::vector<Volume3D> &corpus,
                  const DegradeConfig &cfg, Scores &out) {
  for (const Volume3D &hr : corpus) {
    const Volume3D truth = normalize(hr);
    const Volume3D lr = normalize(degrade(hr, cfg));
    const Volume3D sr = unet_forward(lr, weights);
    out.lr_ssim.push_back(ssim(lr, truth));
    out.lr_mse.push_back(mse(lr, truth));
    out.sr_ssim.push_back(ssim(sr, truth));
    out.sr_mse.push_back(mse(sr, truth));
  }
}

} // namespace

SweepReport run_sweep(const UNetWeights<float> &weights,
                      const std::vector<Volume3D> &corpus,
                      const DegradeConfig &base) {
  if (corpus.empty())
    throw config_error("sweep needs a nonempty corpus");
  base.validate();

  SweepReport report;
  for (int step = 1; step <= 10; ++step) {
    const double f = static_cast<double>(step) / 10.0;
    DegradeConfig cfg = base;
    cfg.frac_y = cfg.frac_z = f;

    SweepRow row;
    row.fraction = f;
    Scores s;
    score_corpus(weights, corpus, cfg, s);
    row.lr = aggregate(s.lr_ssim, s.lr_mse);
    row.sr = aggregate(s.sr_ssim, s.sr_mse);

    if (step == 10) {
      DegradeConfig full = cfg;
      full.pf_y = full.pf_z = 1.0;
      Scores c;
      score_corpus(weights, corpus, full, c);
      row.has_control = true;
      row.control_lr = aggregate(c.lr_ssim, c.lr_mse);
      row.control_sr = aggregate(c.sr_ssim, c.sr_mse);
    }
    report.rows.push_back(row);
  }
  report.validate();
  return report;
}

void write_sweep_csv(const SweepReport &report, const std::string &path) {
  CsvTable t;
  t.header = {"fraction",
              "lr_ssim_mean",
              "lr_ssim_sd",
              "lr_mse_mean",
              "lr_mse_sd",
              "sr_ssim_mean",
              "sr_ssim_sd",
              "sr_mse_mean",
              "sr_mse_sd",
              "full_lr_ssim_mean",
              "full_lr_ssim_sd",
              "full_lr_mse_mean",
              "full_lr_mse_sd",
              "full_sr_ssim_mean",
              "full_sr_ssim_sd",
              "full_sr_mse_mean",
              "full_sr_mse_sd"};
  auto push_stats = [](std::vector<std::string> &row, const SweepStats &s) {
    row.push_back(csv_num(s.ssim_mean));
    row.push_back(csv_num(s.ssim_sd));
    row.push_back(csv_num(s.mse_mean));
    row.push_back(csv_num(s.mse_sd));
  };
  for (const SweepRow &r : report.rows) {
    std::vector<std::string> row{csv_num(r.fraction)};
    push_stats(row, r.lr);
    push_stats(row, r.sr);
    if (r.has_control) {
      push_stats(row, r.control_lr);
      push_stats(row, r.control_sr);
    } else {
      row.insert(row.end(), 8, std::string());
    }
    t.rows.push_back(std::move(row));
  }
  write_csv(t, path);
}

} // namespace volsr
