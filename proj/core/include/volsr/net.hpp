#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "volsr/tensor.hpp"

namespace volsr {

/// Gradients of a parametric layer w.r.t. its three arguments.
template <typename T> struct LayerGrads {
  Tensor5<T> input;
  Tensor5<T> kernel;
  std::vector<T> bias;
};

/// Same-padded 3D cross-correlation. Kernel layout is
/// [out_ch, in_ch, kx, ky, kz] with odd spatial dims; bias has one entry per
/// output channel. Instantiated for float and double.
template <typename T>
Tensor5<T> conv3d_forward(const Tensor5<T> &in, const Tensor5<T> &kernel,
                          const std::vector<T> &bias);
template <typename T>
LayerGrads<T> conv3d_backward(const Tensor5<T> &in, const Tensor5<T> &kernel,
                              const Tensor5<T> &grad_out);

template <typename T> Tensor5<T> relu_forward(const Tensor5<T> &in);
/// Gradient is passed through where the forward INPUT was > 0; the
/// subgradient at exactly 0 is 0.
template <typename T>
Tensor5<T> relu_backward(const Tensor5<T> &in, const Tensor5<T> &grad_out);

template <typename T> struct Pooled {
  Tensor5<T> output;
  std::vector<std::int64_t> argmax; // flat input index per output element
};

/// 2x2x2 max pooling, stride 2. Spatial dims must be even. Ties go to the
/// first element in (z, y, x)-nested scan order of the block.
template <typename T> Pooled<T> maxpool2_forward(const Tensor5<T> &in);
template <typename T>
Tensor5<T> maxpool2_backward(const std::vector<std::int64_t> &argmax,
                             const Tensor5<T> &grad_out, int in_nx, int in_ny,
                             int in_nz);

/// Transposed convolution, 2x2x2 kernel, stride 2 (exact inverse geometry of
/// maxpool2: output dims double). Kernel layout [in_ch, out_ch, 2, 2, 2].
template <typename T>
Tensor5<T> upconv2_forward(const Tensor5<T> &in, const Tensor5<T> &kernel,
                           const std::vector<T> &bias);
template <typename T>
LayerGrads<T> upconv2_backward(const Tensor5<T> &in, const Tensor5<T> &kernel,
                               const Tensor5<T> &grad_out);

/// Channel concatenation [a | b]; spatial dims and batch must agree.
template <typename T>
Tensor5<T> concat_channels(const Tensor5<T> &a, const Tensor5<T> &b);
template <typename T>
std::pair<Tensor5<T>, Tensor5<T>>
concat_channels_backward(const Tensor5<T> &grad_out, int c_a, int c_b);

} // namespace volsr
