#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "volsr/tensor.hpp"
#include "volsr/unet.hpp"
#include "volsr/volume.hpp"

namespace volsr {

enum class LossKind { l1, l2 };

LossKind parse_loss(const std::string &name); // "l1" | "l2"
std::string loss_name(LossKind k);

template <typename T> struct LossValue {
  double value = 0;
  Tensor5<T> grad; // dLoss/dPred
};

/// Mean absolute error; the subgradient at exact ties is 0.
template <typename T>
LossValue<T> loss_l1(const Tensor5<T> &pred, const Tensor5<T> &target);
/// Mean squared error.
template <typename T>
LossValue<T> loss_l2(const Tensor5<T> &pred, const Tensor5<T> &target);

struct AdamConfig {
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

template <typename T> struct AdamState {
  std::vector<T> m, v;
  long t = 0;
  AdamConfig hp;

  explicit AdamState(std::size_t n, AdamConfig hp_ = {})
      : m(n, T(0)), v(n, T(0)), hp(hp_) {}
};

/// One ADAM update with bias correction; t is incremented first. Throws
/// train_error on a non-finite gradient entry, naming its index.
template <typename T>
void adam_step(std::vector<T> &params, const std::vector<T> &grads,
               AdamState<T> &state, double lr);

struct TrainConfig {
  LossKind loss = LossKind::l1;
  double lr = 1e-3;
  int batch = 2;
  int epochs = 200;
  std::uint64_t seed = 0;
  int checkpoint_every = 0;       // epochs between checkpoints; 0 = none
  std::string checkpoint_prefix;  // "<prefix>.epochN.srw"; empty disables

  void validate() const;
};

struct HistoryRow {
  long step = 0; // global batch counter, starting at 1
  int epoch = 0;
  double batch_loss = 0;
  bool epoch_end = false;    // last batch of its epoch
  double epoch_mean = 0;     // mean batch loss of the epoch, on epoch_end rows
};

struct TrainResult {
  UNetWeights<float> weights;
  std::vector<HistoryRow> history;
};

/// Minimizes the configured loss over (input, target) pairs with ADAM.
/// One epoch is one seeded-shuffle pass; batches are consecutive chunks of
/// the permutation (the last may be short). Reproducible for a fixed seed,
/// config, corpus, and thread count. On divergence (non-finite loss or
/// gradient) the last finite-loss weights are checkpointed (when a prefix is
/// configured) and train_error is thrown.
TrainResult train(const std::vector<std::pair<Volume3D, Volume3D>> &corpus,
                  const NetworkConfig &net_cfg, const TrainConfig &cfg);

/// Writes history as CSV with columns step, epoch, batch_loss,
/// epoch_mean_loss (the last column filled only on epoch-end rows).
void write_history_csv(const std::vector<HistoryRow> &history,
                       const std::string &path);

struct AblationRow {
  std::string architecture; // "unet" | "residual_unet"
  std::string loss;         // "l1" | "l2"
  double ssim_mean = 0, ssim_sd = 0;
  double mse_mean = 0, mse_sd = 0;
};

/// Trains the four {plain, residual} x {l1, l2} variants with a shared seed
/// and reports test-set SSIM/MSE per variant, plain-l1 first, residual-l2
/// last. Row schema: architecture, loss, ssim_mean, ssim_sd, mse_mean,
/// mse_sd.
std::vector<AblationRow>
ablation(const std::vector<std::pair<Volume3D, Volume3D>> &train_pairs,
         const std::vector<std::pair<Volume3D, Volume3D>> &test_pairs,
         const NetworkConfig &net_cfg, const TrainConfig &train_cfg);

void write_ablation_csv(const std::vector<AblationRow> &rows,
                        const std::string &path);

} // namespace volsr
