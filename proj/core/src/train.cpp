#include "volsr/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "volsr/csv.hpp"
#include "volsr/errors.hpp"
#include "volsr/metrics.hpp"
#include "volsr/parallel.hpp"
#include "volsr/rng.hpp"

namespace volsr {

LossKind parse_loss(const std::string &name) {
  if (name == "l1")
    return LossKind::l1;
  if (name == "l2")
    return LossKind::l2;
  throw config_error("unknown loss '" + name + "', expected l1 or l2");
}

std::string loss_name(LossKind k) {
  return k == LossKind::l1 ? "l1" : "l2";
}

namespace {

template <typename T>
void check_loss_shapes(const Tensor5<T> &pred, const Tensor5<T> &target) {
  if (!pred.same_shape(target))
    throw shape_error("loss shape mismatch: " + pred.shape_str() + " vs " +
                      target.shape_str());
}

} // namespace

template <typename T>
LossValue<T> loss_l1(const Tensor5<T> &pred, const Tensor5<T> &target) {
  check_loss_shapes(pred, target);
  LossValue<T> out;
  out.grad = Tensor5<T>(pred.n, pred.c, pred.nx, pred.ny, pred.nz);
  const double inv_n = 1.0 / static_cast<double>(pred.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const double d = static_cast<double>(pred.data[i]) -
                     static_cast<double>(target.data[i]);
    sum += std::abs(d);
    out.grad.data[i] =
        d > 0 ? static_cast<T>(inv_n) : (d < 0 ? static_cast<T>(-inv_n) : T(0));
  }
  out.value = sum * inv_n;
  return out;
}

template <typename T>
LossValue<T> loss_l2(const Tensor5<T> &pred, const Tensor5<T> &target) {
  check_loss_shapes(pred, target);
  LossValue<T> out;
  out.grad = Tensor5<T>(pred.n, pred.c, pred.nx, pred.ny, pred.nz);
  const double inv_n = 1.0 / static_cast<double>(pred.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const double d = static_cast<double>(pred.data[i]) -
                     static_cast<double>(target.data[i]);
    sum += d * d;
    out.grad.data[i] = static_cast<T>(2.0 * d * inv_n);
  }
  out.value = sum * inv_n;
  return out;
}

template <typename T>
void adam_step(std::vector<T> &params, const std::vector<T> &grads,
               AdamState<T> &state, double lr) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw shape_error("adam buffers disagree in size");
  if (!(lr > 0.0))
    throw config_error("learning rate must be positive");
  for (std::size_t i = 0; i < grads.size(); ++i)
    if (!std::isfinite(static_cast<double>(grads[i])))
      throw train_error("non-finite gradient at parameter " +
                        std::to_string(i));

  state.t += 1;
  const double b1 = state.hp.beta1, b2 = state.hp.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = static_cast<double>(grads[i]);
    const double m = b1 * static_cast<double>(state.m[i]) + (1.0 - b1) * g;
    const double v = b2 * static_cast<double>(state.v[i]) + (1.0 - b2) * g * g;
    state.m[i] = static_cast<T>(m);
    state.v[i] = static_cast<T>(v);
    const double mh = m / c1;
    const double vh = v / c2;
    params[i] = static_cast<T>(static_cast<double>(params[i]) -
                               lr * mh / (std::sqrt(vh) + state.hp.eps));
  }
}

void TrainConfig::validate() const {
  if (!(lr > 0.0))
    throw config_error("learning rate must be positive");
  if (batch < 1)
    throw config_error("batch size must be >= 1");
  if (epochs < 1)
    throw config_error("epochs must be >= 1");
  if (checkpoint_every < 0)
    throw config_error("checkpoint cadence must be >= 0");
}

namespace {

Tensor5<float> stack_batch(const std::vector<const Volume3D *> &items) {
  const Volume3D &first = *items.front();
  Tensor5<float> t(static_cast<int>(items.size()), 1, first.nx, first.ny,
                   first.nz);
  const std::size_t block = static_cast<std::size_t>(first.voxels());
  for (std::size_t b = 0; b < items.size(); ++b) {
    const Volume3D &v = *items[b];
    float *dst = t.data.data() + b * block;
    for (std::size_t i = 0; i < block; ++i)
      dst[i] = static_cast<float>(v.data[i]);
  }
  return t;
}

} // namespace

TrainResult train(const std::vector<std::pair<Volume3D, Volume3D>> &corpus,
                  const NetworkConfig &net_cfg, const TrainConfig &cfg) {
  net_cfg.validate();
  cfg.validate();
  if (corpus.empty())
    throw config_error("training corpus is empty");
  const Volume3D &ref = corpus.front().first;
  const int d = net_cfg.divisor();
  for (const auto &[in, tgt] : corpus) {
    in.validate();
    tgt.validate();
    if (in.nx != ref.nx || in.ny != ref.ny || in.nz != ref.nz ||
        tgt.nx != ref.nx || tgt.ny != ref.ny || tgt.nz != ref.nz)
      throw shape_error("all training pairs must share dims");
    if (in.nx % d || in.ny % d || in.nz % d)
      throw shape_error("training dims must be divisible by 2^(levels-1) = " +
                        std::to_string(d));
  }

  UNetWeights<float> weights = init_weights<float>(net_cfg, cfg.seed);
  std::vector<float> wflat = weights.flat();
  AdamState<float> opt(wflat.size());
  UNet<float> net(net_cfg);
  Rng shuffle_rng(cfg.seed + 1);

  UNetWeights<float> last_good = weights;
  bool have_good = false;

  auto checkpoint_path = [&](int epoch) {
    return cfg.checkpoint_prefix + ".epoch" + std::to_string(epoch) + ".srw";
  };
  auto dump_last_good = [&]() -> std::string {
    if (cfg.checkpoint_prefix.empty() || !have_good)
      return "";
    const std::string p = cfg.checkpoint_prefix + ".last_good.srw";
    save_weights(last_good, p);
    return p;
  };

  TrainResult result;
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  long step = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_sum = 0.0;
    long epoch_batches = 0;
    for (std::size_t pos = 0; pos < order.size();
         pos += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t end =
          std::min(order.size(), pos + static_cast<std::size_t>(cfg.batch));
      std::vector<const Volume3D *> ins, tgts;
      for (std::size_t i = pos; i < end; ++i) {
        ins.push_back(&corpus[order[i]].first);
        tgts.push_back(&corpus[order[i]].second);
      }
      Tensor5<float> input = stack_batch(ins);
      Tensor5<float> target = stack_batch(tgts);

      Tensor5<float> pred = net.forward(input, weights);
      LossValue<float> loss = cfg.loss == LossKind::l1
                                  ? loss_l1(pred, target)
                                  : loss_l2(pred, target);
      if (!std::isfinite(loss.value)) {
        const std::string p = dump_last_good();
        throw train_error(
            "training diverged at step " + std::to_string(step + 1) +
            " (loss not finite)" +
            (p.empty() ? "" : "; last good checkpoint: " + p));
      }

      UNet<float>::Grads grads = net.backward(loss.grad, weights);
      std::vector<float> gflat = grads.params.flat();
      try {
        adam_step(wflat, gflat, opt, cfg.lr);
      } catch (const train_error &e) {
        const std::string p = dump_last_good();
        throw train_error(std::string(e.what()) +
                          (p.empty() ? "" : "; last good checkpoint: " + p));
      }
      weights.set_flat(wflat);
      last_good = weights;
      have_good = true;

      ++step;
      epoch_sum += loss.value;
      ++epoch_batches;
      HistoryRow row;
      row.step = step;
      row.epoch = epoch;
      row.batch_loss = loss.value;
      result.history.push_back(row);
    }
    HistoryRow &last = result.history.back();
    last.epoch_end = true;
    last.epoch_mean = epoch_sum / static_cast<double>(epoch_batches);

    if (!cfg.checkpoint_prefix.empty() && cfg.checkpoint_every > 0 &&
        epoch % cfg.checkpoint_every == 0)
      save_weights(weights, checkpoint_path(epoch));
  }

  result.weights = std::move(weights);
  return result;
}

void write_history_csv(const std::vector<HistoryRow> &history,
                       const std::string &path) {
  CsvTable t;
  t.header = {"step", "epoch", "batch_loss", "epoch_mean_loss"};
  for (const HistoryRow &r : history)
    t.rows.push_back({std::to_string(r.step), std::to_string(r.epoch),
                      csv_num(r.batch_loss),
                      r.epoch_end ? csv_num(r.epoch_mean) : std::string()});
  write_csv(t, path);
}

namespace {

std::pair<double, double> mean_sd(const std::vector<double> &xs) {
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs)
    mean += x;
  mean /= n;
  if (xs.size() < 2)
    return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs)
    ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

} // namespace

std::vector<AblationRow>
ablation(const std::vector<std::pair<Volume3D, Volume3D>> &train_pairs,
         const std::vector<std::pair<Volume3D, Volume3D>> &test_pairs,
         const NetworkConfig &net_cfg, const TrainConfig &train_cfg) {
  if (test_pairs.empty())
    throw config_error("ablation needs a nonempty test set");

  std::vector<AblationRow> rows;
  const SsimConfig ssim_cfg;
  for (bool residual : {false, true})
    for (LossKind loss : {LossKind::l1, LossKind::l2}) {
      NetworkConfig nc = net_cfg;
      nc.residual = residual;
      TrainConfig tc = train_cfg;
      tc.loss = loss; // seed shared across the four runs
      TrainResult r = train(train_pairs, nc, tc);

      std::vector<double> ssims, mses;
      for (const auto &[in, tgt] : test_pairs) {
        Volume3D sr = unet_forward(in, r.weights);
        ssims.push_back(ssim(sr, tgt, ssim_cfg));
        mses.push_back(mse(sr, tgt));
      }
      AblationRow row;
      row.architecture = residual ? "residual_unet" : "unet";
      row.loss = loss_name(loss);
      std::tie(row.ssim_mean, row.ssim_sd) = mean_sd(ssims);
      std::tie(row.mse_mean, row.mse_sd) = mean_sd(mses);
      rows.push_back(row);
    }
  return rows;
}

void write_ablation_csv(const std::vector<AblationRow> &rows,
                        const std::string &path) {
  CsvTable t;
  t.header = {"architecture", "loss", "ssim_mean", "ssim_sd",
              "mse_mean",     "mse_sd"};
  for (const AblationRow &r : rows)
    t.rows.push_back({r.architecture, r.loss, csv_num(r.ssim_mean),
                      csv_num(r.ssim_sd), csv_num(r.mse_mean),
                      csv_num(r.mse_sd)});
  write_csv(t, path);
}

#define VOLSR_INSTANTIATE_TRAIN(T)                                            \
  template LossValue<T> loss_l1<T>(const Tensor5<T> &, const Tensor5<T> &);   \
  template LossValue<T> loss_l2<T>(const Tensor5<T> &, const Tensor5<T> &);   \
  template struct AdamState<T>;                                               \
  template void adam_step<T>(std::vector<T> &, const std::vector<T> &,        \
                             AdamState<T> &, double);

VOLSR_INSTANTIATE_TRAIN(float)
VOLSR_INSTANTIATE_TRAIN(double)

#undef VOLSR_INSTANTIATE_TRAIN

} // namespace volsr
