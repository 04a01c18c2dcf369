#include "volsr/unet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <utility>

#include "volsr/binio.hpp"
#include "volsr/parallel.hpp"
#include "volsr/rng.hpp"

namespace volsr {

void NetworkConfig::validate() const {
  if (levels < 1)
    throw config_error("levels must be >= 1");
  if (base_channels < 1)
    throw config_error("base_channels must be >= 1");
  if (convs_per_level < 1)
    throw config_error("convs_per_level must be >= 1");
  if (head_kernel < 1 || head_kernel % 2 == 0)
    throw config_error("head_kernel must be odd and >= 1");
}

std::vector<LayerShape> layer_shapes(const NetworkConfig &cfg) {
  cfg.validate();
  std::vector<LayerShape> shapes;
  for (int l = 0; l < cfg.levels; ++l)
    for (int k = 0; k < cfg.convs_per_level; ++k) {
      int in_ch = k > 0 ? cfg.width(l) : (l == 0 ? 1 : cfg.width(l - 1));
      shapes.push_back({false, cfg.width(l), in_ch, 3, 3, 3});
    }
  for (int l = cfg.levels - 2; l >= 0; --l) {
    shapes.push_back({true, cfg.width(l + 1), cfg.width(l), 2, 2, 2});
    for (int k = 0; k < cfg.convs_per_level; ++k) {
      int in_ch = k > 0 ? cfg.width(l) : 2 * cfg.width(l);
      shapes.push_back({false, cfg.width(l), in_ch, 3, 3, 3});
    }
  }
  shapes.push_back({false, 1, cfg.width(0), cfg.head_kernel, cfg.head_kernel,
                    cfg.head_kernel});
  return shapes;
}

template <typename T> std::size_t UNetWeights<T>::param_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < kernels.size(); ++i)
    n += kernels[i].size() + biases[i].size();
  return n;
}

template <typename T> std::vector<T> UNetWeights<T>::flat() const {
  std::vector<T> out;
  out.reserve(param_count());
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    out.insert(out.end(), kernels[i].data.begin(), kernels[i].data.end());
    out.insert(out.end(), biases[i].begin(), biases[i].end());
  }
  return out;
}

template <typename T> void UNetWeights<T>::set_flat(const std::vector<T> &f) {
  if (f.size() != param_count())
    throw shape_error("flat parameter vector has " + std::to_string(f.size()) +
                      " entries, weights need " +
                      std::to_string(param_count()));
  std::size_t pos = 0;
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    std::copy_n(f.begin() + static_cast<std::ptrdiff_t>(pos),
                kernels[i].size(), kernels[i].data.begin());
    pos += kernels[i].size();
    std::copy_n(f.begin() + static_cast<std::ptrdiff_t>(pos),
                biases[i].size(), biases[i].begin());
    pos += biases[i].size();
  }
}

template <typename T> void UNetWeights<T>::validate() const {
  auto shapes = layer_shapes(cfg);
  if (kernels.size() != shapes.size() || biases.size() != shapes.size())
    throw config_error("weight layer count does not match configuration");
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const LayerShape &s = shapes[i];
    const Tensor5<T> &k = kernels[i];
    if (k.n != s.n || k.c != s.c || k.nx != s.kx || k.ny != s.ky ||
        k.nz != s.kz)
      throw config_error("kernel " + std::to_string(i) + " has shape " +
                         k.shape_str() + ", expected layer layout");
    if (biases[i].size() != static_cast<std::size_t>(s.bias_len()))
      throw config_error("bias " + std::to_string(i) + " length mismatch");
    for (const T &x : k.data)
      if (!std::isfinite(static_cast<double>(x)))
        throw config_error("non-finite weight in kernel " + std::to_string(i));
    for (const T &x : biases[i])
      if (!std::isfinite(static_cast<double>(x)))
        throw config_error("non-finite weight in bias " + std::to_string(i));
  }
}

template <typename T>
UNetWeights<T> init_weights(const NetworkConfig &cfg, std::uint64_t seed) {
  UNetWeights<T> w;
  w.cfg = cfg;
  Rng rng(seed);
  for (const LayerShape &s : layer_shapes(cfg)) {
    Tensor5<T> k(s.n, s.c, s.kx, s.ky, s.kz);
    const double kvol = static_cast<double>(s.kx) * s.ky * s.kz;
    const double fan_in = (s.transposed ? s.n : s.c) * kvol;
    const double fan_out = (s.transposed ? s.c : s.n) * kvol;
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (T &x : k.data)
      x = static_cast<T>(rng.uniform(-bound, bound));
    w.kernels.push_back(std::move(k));
    w.biases.emplace_back(static_cast<std::size_t>(s.bias_len()), T(0));
  }
  return w;
}

template <typename From, typename To>
UNetWeights<To> cast_weights(const UNetWeights<From> &w) {
  UNetWeights<To> out;
  out.cfg = w.cfg;
  for (const Tensor5<From> &k : w.kernels) {
    Tensor5<To> ck(k.n, k.c, k.nx, k.ny, k.nz);
    for (std::size_t i = 0; i < k.data.size(); ++i)
      ck.data[i] = static_cast<To>(k.data[i]);
    out.kernels.push_back(std::move(ck));
  }
  for (const std::vector<From> &b : w.biases) {
    std::vector<To> cb(b.size());
    for (std::size_t i = 0; i < b.size(); ++i)
      cb[i] = static_cast<To>(b[i]);
    out.biases.push_back(std::move(cb));
  }
  return out;
}

namespace {

template <typename T> void add_into(Tensor5<T> &dst, const Tensor5<T> &src) {
  if (!dst.same_shape(src))
    throw shape_error("tensor add shape mismatch");
  parallel_for(dst.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i)
      dst.data[i] += src.data[i];
  });
}

template <typename T>
UNetWeights<T> zero_like(const UNetWeights<T> &w) {
  UNetWeights<T> z;
  z.cfg = w.cfg;
  for (const Tensor5<T> &k : w.kernels)
    z.kernels.emplace_back(k.n, k.c, k.nx, k.ny, k.nz);
  for (const std::vector<T> &b : w.biases)
    z.biases.emplace_back(b.size(), T(0));
  return z;
}

} // namespace

template <typename T>
UNet<T>::UNet(const NetworkConfig &cfg) : cfg_(cfg) {
  cfg_.validate();
}

template <typename T>
Tensor5<T> UNet<T>::forward(const Tensor5<T> &input, const UNetWeights<T> &w) {
  if (input.c != 1)
    throw shape_error("network input must have one channel");
  const int d = cfg_.divisor();
  if (input.nx % d || input.ny % d || input.nz % d)
    throw shape_error("input dims " + input.shape_str() +
                      " must be divisible by 2^(levels-1) = " +
                      std::to_string(d));
  w.validate();
  if (w.cfg.levels != cfg_.levels || w.cfg.base_channels != cfg_.base_channels ||
      w.cfg.convs_per_level != cfg_.convs_per_level ||
      w.cfg.head_kernel != cfg_.head_kernel)
    throw config_error("weights belong to a different network shape");

  input_ = input;
  conv_in_.clear();
  conv_pre_.clear();
  pools_.clear();
  skips_.assign(static_cast<std::size_t>(std::max(cfg_.levels - 1, 0)), {});
  up_in_.assign(skips_.size(), {});

  std::size_t kidx = 0;
  Tensor5<T> cur = input;
  for (int l = 0; l < cfg_.levels; ++l) {
    if (l > 0) {
      pools_.push_back(maxpool2_forward(cur));
      cur = pools_.back().output;
    }
    for (int k = 0; k < cfg_.convs_per_level; ++k) {
      conv_in_.push_back(cur);
      Tensor5<T> pre = conv3d_forward(cur, w.kernels[kidx], w.biases[kidx]);
      ++kidx;
      cur = relu_forward(pre);
      conv_pre_.push_back(std::move(pre));
    }
    if (l < cfg_.levels - 1)
      skips_[static_cast<std::size_t>(l)] = cur;
  }

  for (int l = cfg_.levels - 2; l >= 0; --l) {
    up_in_[static_cast<std::size_t>(l)] = cur;
    Tensor5<T> up = upconv2_forward(cur, w.kernels[kidx], w.biases[kidx]);
    ++kidx;
    cur = concat_channels(skips_[static_cast<std::size_t>(l)], up);
    for (int k = 0; k < cfg_.convs_per_level; ++k) {
      conv_in_.push_back(cur);
      Tensor5<T> pre = conv3d_forward(cur, w.kernels[kidx], w.biases[kidx]);
      ++kidx;
      cur = relu_forward(pre);
      conv_pre_.push_back(std::move(pre));
    }
  }

  conv_in_.push_back(cur);
  Tensor5<T> head = conv3d_forward(cur, w.kernels[kidx], w.biases[kidx]);
  conv_pre_.push_back(head);

  pre_out_ = std::move(head);
  if (cfg_.residual)
    add_into(pre_out_, input_);
  have_forward_ = true;
  return relu_forward(pre_out_);
}

template <typename T>
typename UNet<T>::Grads UNet<T>::backward(const Tensor5<T> &grad_output,
                                          const UNetWeights<T> &w) {
  if (!have_forward_)
    throw state_error("backward called before forward");
  if (!grad_output.same_shape(pre_out_))
    throw shape_error("grad_output shape mismatch");

  Grads G;
  G.params = zero_like(w);

  Tensor5<T> g = relu_backward(pre_out_, grad_output);
  Tensor5<T> identity_grad;
  if (cfg_.residual)
    identity_grad = g;

  std::ptrdiff_t kidx = static_cast<std::ptrdiff_t>(w.kernels.size()) - 1;
  std::ptrdiff_t cidx = static_cast<std::ptrdiff_t>(conv_in_.size()) - 1;
  auto conv_back = [&](bool with_relu) {
    if (with_relu)
      g = relu_backward(conv_pre_[static_cast<std::size_t>(cidx)], g);
    LayerGrads<T> cg = conv3d_backward(conv_in_[static_cast<std::size_t>(cidx)],
                                       w.kernels[static_cast<std::size_t>(kidx)],
                                       g);
    G.params.kernels[static_cast<std::size_t>(kidx)] = std::move(cg.kernel);
    G.params.biases[static_cast<std::size_t>(kidx)] = std::move(cg.bias);
    g = std::move(cg.input);
    --kidx;
    --cidx;
  };

  conv_back(false); // head

  std::vector<Tensor5<T>> skip_grads(skips_.size());
  for (int l = 0; l <= cfg_.levels - 2; ++l) {
    for (int k = 0; k < cfg_.convs_per_level; ++k)
      conv_back(true);
    const int width = cfg_.width(l);
    auto [gs, gu] = concat_channels_backward(g, width, width);
    skip_grads[static_cast<std::size_t>(l)] = std::move(gs);
    LayerGrads<T> ug = upconv2_backward(up_in_[static_cast<std::size_t>(l)],
                                        w.kernels[static_cast<std::size_t>(kidx)],
                                        gu);
    G.params.kernels[static_cast<std::size_t>(kidx)] = std::move(ug.kernel);
    G.params.biases[static_cast<std::size_t>(kidx)] = std::move(ug.bias);
    g = std::move(ug.input);
    --kidx;
  }

  for (int l = cfg_.levels - 1; l >= 0; --l) {
    for (int k = 0; k < cfg_.convs_per_level; ++k)
      conv_back(true);
    if (l > 0) {
      // pools_[l-1] consumed the level-(l-1) output, which is skips_[l-1].
      const Pooled<T> &pool = pools_[static_cast<std::size_t>(l - 1)];
      const Tensor5<T> &below = skips_[static_cast<std::size_t>(l - 1)];
      g = maxpool2_backward(pool.argmax, g, below.nx, below.ny, below.nz);
      add_into(g, skip_grads[static_cast<std::size_t>(l - 1)]);
    }
  }

  if (cfg_.residual)
    add_into(g, identity_grad);
  G.input = std::move(g);
  return G;
}

Volume3D unet_forward(const Volume3D &v, const UNetWeights<float> &w) {
  v.validate();
  Tensor5<float> in(1, 1, v.nx, v.ny, v.nz);
  for (std::size_t i = 0; i < in.data.size(); ++i)
    in.data[i] = static_cast<float>(v.data[i]);
  UNet<float> net(w.cfg);
  Tensor5<float> out = net.forward(in, w);
  Volume3D res(v.nx, v.ny, v.nz, v.spacing_x, v.spacing_y, v.spacing_z);
  for (std::size_t i = 0; i < out.data.size(); ++i)
    res.data[i] = static_cast<double>(out.data[i]);
  return res;
}

namespace {
constexpr char kWeightsMagic[4] = {'S', 'R', 'W', '1'};
}

void save_weights(const UNetWeights<float> &w, const std::string &path) {
  w.validate();
  std::string buf;
  buf.reserve(24 + w.param_count() * 4);
  buf.append(kWeightsMagic, 4);
  put_u32(buf, static_cast<std::uint32_t>(w.cfg.levels));
  put_u32(buf, static_cast<std::uint32_t>(w.cfg.base_channels));
  put_u32(buf, static_cast<std::uint32_t>(w.cfg.convs_per_level));
  put_u32(buf, static_cast<std::uint32_t>(w.cfg.head_kernel));
  put_u32(buf, w.cfg.residual ? 1u : 0u);
  for (std::size_t i = 0; i < w.kernels.size(); ++i) {
    for (float x : w.kernels[i].data)
      put_f32(buf, x);
    for (float x : w.biases[i])
      put_f32(buf, x);
  }
  write_file_atomic(path, buf);
}

UNetWeights<float> load_weights(const std::string &path) {
  std::string bytes = read_file_bytes(path);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kWeightsMagic, 4) != 0)
    throw io_error("bad magic in weights file: " + path);
  if (bytes.size() < 24)
    throw io_error("truncated weights header: " + path);
  const auto *p = reinterpret_cast<const unsigned char *>(bytes.data());

  NetworkConfig cfg;
  cfg.levels = static_cast<int>(get_u32(p + 4));
  cfg.base_channels = static_cast<int>(get_u32(p + 8));
  cfg.convs_per_level = static_cast<int>(get_u32(p + 12));
  cfg.head_kernel = static_cast<int>(get_u32(p + 16));
  cfg.residual = get_u32(p + 20) != 0;
  try {
    cfg.validate();
  } catch (const config_error &e) {
    throw io_error("invalid network shape in weights file " + path + ": " +
                   e.what());
  }

  UNetWeights<float> w;
  w.cfg = cfg;
  std::size_t params = 0;
  for (const LayerShape &s : layer_shapes(cfg)) {
    w.kernels.emplace_back(s.n, s.c, s.kx, s.ky, s.kz);
    w.biases.emplace_back(static_cast<std::size_t>(s.bias_len()), 0.0f);
    params += w.kernels.back().size() + w.biases.back().size();
  }
  const std::size_t expected = 24 + params * 4;
  if (bytes.size() < expected)
    throw io_error("truncated weights payload: " + path);
  if (bytes.size() > expected)
    throw io_error("trailing bytes in weights file: " + path);

  std::size_t pos = 24;
  for (std::size_t i = 0; i < w.kernels.size(); ++i) {
    for (float &x : w.kernels[i].data) {
      x = get_f32(p + pos);
      pos += 4;
    }
    for (float &x : w.biases[i]) {
      x = get_f32(p + pos);
      pos += 4;
    }
  }
  w.validate();
  return w;
}

#define VOLSR_INSTANTIATE_UNET(T)                                             \
  template struct UNetWeights<T>;                                             \
  template UNetWeights<T> init_weights<T>(const NetworkConfig &,              \
                                          std::uint64_t);                     \
  template class UNet<T>;

VOLSR_INSTANTIATE_UNET(float)
VOLSR_INSTANTIATE_UNET(double)

template UNetWeights<double>
cast_weights<float, double>(const UNetWeights<float> &);
template UNetWeights<float>
cast_weights<double, float>(const UNetWeights<double> &);

#undef VOLSR_INSTANTIATE_UNET

} // namespace volsr
