#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "volsr/net.hpp"
#include "volsr/volume.hpp"

namespace volsr {

/// Shape of the residual U-Net: `levels` resolution scales with channel
/// width base_channels * 2^level, convs_per_level 3x3x3 convolutions (each
/// followed by ReLU) per scale on both paths, 2x2x2 max pooling down,
/// 2x2x2 transposed convolution up, channel-concatenated skips, and a final
/// head convolution without ReLU. With `residual` on the head output is
/// added to the input before a closing ReLU; off, the head output is passed
/// to the closing ReLU directly.
struct NetworkConfig {
  int levels = 3;
  int base_channels = 16;
  int convs_per_level = 2;
  int head_kernel = 3; // odd
  bool residual = true;

  void validate() const;
  int divisor() const { return 1 << (levels - 1); }
  int width(int level) const { return base_channels << level; }
};

/// One parameter tensor slot in declaration order (encoder top-down, then
/// decoder bottom-up as executed: upconv then convs per level, then head).
struct LayerShape {
  bool transposed = false;
  int n = 0, c = 0, kx = 0, ky = 0, kz = 0; // Tensor5 dims of the kernel
  std::size_t kernel_elems() const {
    return static_cast<std::size_t>(n) * c * kx * ky * kz;
  }
  // bias length: output channels (kernel.c for transposed layers, kernel.n
  // otherwise)
  int bias_len() const { return transposed ? c : n; }
};

std::vector<LayerShape> layer_shapes(const NetworkConfig &cfg);

/// All learnable parameters, kernels/biases parallel arrays in declaration
/// order. The flat view concatenates kernel then bias per layer and is the
/// ordering used by the optimizer and the weight file.
template <typename T> struct UNetWeights {
  NetworkConfig cfg;
  std::vector<Tensor5<T>> kernels;
  std::vector<std::vector<T>> biases;

  std::size_t param_count() const;
  std::vector<T> flat() const;
  void set_flat(const std::vector<T> &flat);
  /// Throws config_error if tensor shapes disagree with cfg.
  void validate() const;
};

/// Xavier-uniform kernels (bound sqrt(6/(fan_in+fan_out)), fans counting
/// kernel volume), zero biases. Deterministic in seed.
template <typename T>
UNetWeights<T> init_weights(const NetworkConfig &cfg, std::uint64_t seed);

template <typename From, typename To>
UNetWeights<To> cast_weights(const UNetWeights<From> &w);

/// Forward/backward engine. forward() caches every activation needed by
/// backward(); backward() before forward() is a state error.
template <typename T> class UNet {
public:
  explicit UNet(const NetworkConfig &cfg);

  /// input: [batch, 1, x, y, z], spatial dims divisible by cfg.divisor().
  Tensor5<T> forward(const Tensor5<T> &input, const UNetWeights<T> &w);

  struct Grads {
    UNetWeights<T> params;
    Tensor5<T> input;
  };
  /// grad_output: dLoss/dOutput for the cached forward pass.
  Grads backward(const Tensor5<T> &grad_output, const UNetWeights<T> &w);

private:
  NetworkConfig cfg_;
  bool have_forward_ = false;
  Tensor5<T> input_;
  std::vector<Tensor5<T>> conv_in_;  // per conv, forward order (incl. head)
  std::vector<Tensor5<T>> conv_pre_; // pre-ReLU conv outputs (head: raw)
  std::vector<Pooled<T>> pools_;     // pools_[l] downsamples level l output
  std::vector<Tensor5<T>> skips_;    // encoder outputs feeding skips, per level
  std::vector<Tensor5<T>> up_in_;    // upconv inputs, per decoder level
  Tensor5<T> pre_out_;               // before the closing ReLU
};

/// Single-volume convenience wrapper around UNet<float>::forward.
Volume3D unet_forward(const Volume3D &v, const UNetWeights<float> &w);

// SRW1 checkpoint: bytes 0-3 "SRW1"; u32 levels, base_channels,
// convs_per_level, head_kernel, residual (0/1); then per layer kernel and
// bias as little-endian f32 in declaration order. No trailing bytes.
void save_weights(const UNetWeights<float> &w, const std::string &path);
UNetWeights<float> load_weights(const std::string &path);

} // namespace volsr
