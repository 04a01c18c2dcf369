#include "volsr/net.hpp"

#include <algorithm>
#include <string>

#include "volsr/parallel.hpp"

namespace volsr {

namespace {

template <typename T>
void check_conv_args(const Tensor5<T> &in, const Tensor5<T> &kernel,
                     const std::vector<T> &bias, bool transposed) {
  int expect_in = transposed ? kernel.n : kernel.c;
  int out_ch = transposed ? kernel.c : kernel.n;
  if (in.c != expect_in)
    throw shape_error("kernel expects " + std::to_string(expect_in) +
                      " input channels, tensor has " + std::to_string(in.c));
  if (bias.size() != static_cast<std::size_t>(out_ch))
    throw shape_error("bias has " + std::to_string(bias.size()) +
                      " entries for " + std::to_string(out_ch) +
                      " output channels");
}

} // namespace

template <typename T>
Tensor5<T> conv3d_forward(const Tensor5<T> &in, const Tensor5<T> &kernel,
                          const std::vector<T> &bias) {
  check_conv_args(in, kernel, bias, false);
  if (kernel.nx % 2 == 0 || kernel.ny % 2 == 0 || kernel.nz % 2 == 0)
    throw shape_error("conv kernel dims must be odd, got " +
                      kernel.shape_str());

  Tensor5<T> out(in.n, kernel.n, in.nx, in.ny, in.nz);
  const int rx = kernel.nx / 2, ry = kernel.ny / 2, rz = kernel.nz / 2;
  const std::size_t lines =
      static_cast<std::size_t>(in.n) * kernel.n * in.nz * in.ny;
  parallel_for(lines, [&](std::size_t lb, std::size_t le) {
    for (std::size_t li = lb; li < le; ++li) {
      int y = static_cast<int>(li % in.ny);
      int z = static_cast<int>((li / in.ny) % in.nz);
      std::size_t rest = li / (static_cast<std::size_t>(in.ny) * in.nz);
      int co = static_cast<int>(rest % kernel.n);
      int b = static_cast<int>(rest / kernel.n);
      T *orow = out.data.data() + out.index(b, co, 0, y, z);
      for (int x = 0; x < in.nx; ++x)
        orow[x] = bias[static_cast<std::size_t>(co)];
      for (int ci = 0; ci < in.c; ++ci)
        for (int dz = 0; dz < kernel.nz; ++dz) {
          int zi = z + dz - rz;
          if (zi < 0 || zi >= in.nz)
            continue;
          for (int dy = 0; dy < kernel.ny; ++dy) {
            int yi = y + dy - ry;
            if (yi < 0 || yi >= in.ny)
              continue;
            const T *irow = in.data.data() + in.index(b, ci, 0, yi, zi);
            const T *krow =
                kernel.data.data() + kernel.index(co, ci, 0, dy, dz);
            for (int dx = 0; dx < kernel.nx; ++dx) {
              T w = krow[dx];
              int off = dx - rx;
              int x0 = std::max(0, -off);
              int x1 = std::min(in.nx, in.nx - off);
              const T *ip = irow + off;
              for (int x = x0; x < x1; ++x)
                orow[x] += w * ip[x];
            }
          }
        }
    }
  });
  return out;
}

template <typename T>
LayerGrads<T> conv3d_backward(const Tensor5<T> &in, const Tensor5<T> &kernel,
                              const Tensor5<T> &grad_out) {
  check_conv_args(in, kernel, std::vector<T>(kernel.n, T(0)), false);
  if (grad_out.n != in.n || grad_out.c != kernel.n ||
      grad_out.nx != in.nx || grad_out.ny != in.ny || grad_out.nz != in.nz)
    throw shape_error("conv grad_out shape " + grad_out.shape_str() +
                      " mismatches forward output");

  const int rx = kernel.nx / 2, ry = kernel.ny / 2, rz = kernel.nz / 2;
  LayerGrads<T> g;
  g.input = Tensor5<T>(in.n, in.c, in.nx, in.ny, in.nz);
  g.kernel = Tensor5<T>(kernel.n, kernel.c, kernel.nx, kernel.ny, kernel.nz);
  g.bias.assign(static_cast<std::size_t>(kernel.n), T(0));

  const std::size_t in_lines =
      static_cast<std::size_t>(in.n) * in.c * in.nz * in.ny;
  parallel_for(in_lines, [&](std::size_t lb, std::size_t le) {
    for (std::size_t li = lb; li < le; ++li) {
      int yi = static_cast<int>(li % in.ny);
      int zi = static_cast<int>((li / in.ny) % in.nz);
      std::size_t rest = li / (static_cast<std::size_t>(in.ny) * in.nz);
      int ci = static_cast<int>(rest % in.c);
      int b = static_cast<int>(rest / in.c);
      T *grow = g.input.data.data() + g.input.index(b, ci, 0, yi, zi);
      for (int co = 0; co < kernel.n; ++co)
        for (int dz = 0; dz < kernel.nz; ++dz) {
          int z = zi - (dz - rz);
          if (z < 0 || z >= in.nz)
            continue;
          for (int dy = 0; dy < kernel.ny; ++dy) {
            int y = yi - (dy - ry);
            if (y < 0 || y >= in.ny)
              continue;
            const T *gorow =
                grad_out.data.data() + grad_out.index(b, co, 0, y, z);
            const T *krow =
                kernel.data.data() + kernel.index(co, ci, 0, dy, dz);
            for (int dx = 0; dx < kernel.nx; ++dx) {
              T w = krow[dx];
              int off = dx - rx;
              int x0 = std::max(0, off);
              int x1 = std::min(in.nx, in.nx + off);
              const T *gp = gorow - off;
              for (int x = x0; x < x1; ++x)
                grow[x] += w * gp[x];
            }
          }
        }
    }
  });

  const std::size_t k_entries = g.kernel.size();
  const std::size_t k_spatial =
      static_cast<std::size_t>(kernel.nx) * kernel.ny * kernel.nz;
  parallel_for(k_entries, [&](std::size_t kb, std::size_t ke) {
    for (std::size_t f = kb; f < ke; ++f) {
      int dx = static_cast<int>(f % kernel.nx);
      int dy = static_cast<int>((f / kernel.nx) % kernel.ny);
      int dz = static_cast<int>((f / (static_cast<std::size_t>(kernel.nx) *
                                      kernel.ny)) %
                                kernel.nz);
      int ci = static_cast<int>((f / k_spatial) % kernel.c);
      int co = static_cast<int>(f / (k_spatial * kernel.c));
      int off = dx - rx;
      int x0 = std::max(0, -off);
      int x1 = std::min(in.nx, in.nx - off);
      T sum = T(0);
      for (int b = 0; b < in.n; ++b)
        for (int z = 0; z < in.nz; ++z) {
          int zi = z + dz - rz;
          if (zi < 0 || zi >= in.nz)
            continue;
          for (int y = 0; y < in.ny; ++y) {
            int yi = y + dy - ry;
            if (yi < 0 || yi >= in.ny)
              continue;
            const T *gorow =
                grad_out.data.data() + grad_out.index(b, co, 0, y, z);
            const T *ip = in.data.data() + in.index(b, ci, 0, yi, zi) + off;
            for (int x = x0; x < x1; ++x)
              sum += gorow[x] * ip[x];
          }
        }
      g.kernel.data[f] = sum;
    }
  });

  parallel_for(static_cast<std::size_t>(kernel.n),
               [&](std::size_t cb, std::size_t ce) {
                 const std::size_t plane =
                     static_cast<std::size_t>(in.nx) * in.ny * in.nz;
                 for (std::size_t co = cb; co < ce; ++co) {
                   T sum = T(0);
                   for (int b = 0; b < in.n; ++b) {
                     const T *base = grad_out.data.data() +
                                     grad_out.index(b, static_cast<int>(co),
                                                    0, 0, 0);
                     for (std::size_t i = 0; i < plane; ++i)
                       sum += base[i];
                   }
                   g.bias[co] = sum;
                 }
               });
  return g;
}

template <typename T> Tensor5<T> relu_forward(const Tensor5<T> &in) {
  Tensor5<T> out(in.n, in.c, in.nx, in.ny, in.nz);
  parallel_for(in.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i)
      out.data[i] = in.data[i] > T(0) ? in.data[i] : T(0);
  });
  return out;
}

template <typename T>
Tensor5<T> relu_backward(const Tensor5<T> &in, const Tensor5<T> &grad_out) {
  if (!in.same_shape(grad_out))
    throw shape_error("relu grad_out shape mismatch");
  Tensor5<T> g(in.n, in.c, in.nx, in.ny, in.nz);
  parallel_for(in.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i)
      g.data[i] = in.data[i] > T(0) ? grad_out.data[i] : T(0);
  });
  return g;
}

template <typename T> Pooled<T> maxpool2_forward(const Tensor5<T> &in) {
  if (in.nx % 2 || in.ny % 2 || in.nz % 2)
    throw shape_error("maxpool needs even spatial dims, got " +
                      in.shape_str());
  Pooled<T> p;
  p.output = Tensor5<T>(in.n, in.c, in.nx / 2, in.ny / 2, in.nz / 2);
  p.argmax.assign(p.output.size(), 0);
  Tensor5<T> &out = p.output;
  const std::size_t lines =
      static_cast<std::size_t>(in.n) * in.c * out.nz * out.ny;
  parallel_for(lines, [&](std::size_t lb, std::size_t le) {
    for (std::size_t li = lb; li < le; ++li) {
      int oy = static_cast<int>(li % out.ny);
      int oz = static_cast<int>((li / out.ny) % out.nz);
      std::size_t rest = li / (static_cast<std::size_t>(out.ny) * out.nz);
      int ch = static_cast<int>(rest % in.c);
      int b = static_cast<int>(rest / in.c);
      for (int ox = 0; ox < out.nx; ++ox) {
        T best = in.at(b, ch, 2 * ox, 2 * oy, 2 * oz);
        std::size_t best_idx = in.index(b, ch, 2 * ox, 2 * oy, 2 * oz);
        for (int dz = 0; dz < 2; ++dz)
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
              std::size_t idx =
                  in.index(b, ch, 2 * ox + dx, 2 * oy + dy, 2 * oz + dz);
              if (in.data[idx] > best) {
                best = in.data[idx];
                best_idx = idx;
              }
            }
        std::size_t o = out.index(b, ch, ox, oy, oz);
        out.data[o] = best;
        p.argmax[o] = static_cast<std::int64_t>(best_idx);
      }
    }
  });
  return p;
}

template <typename T>
Tensor5<T> maxpool2_backward(const std::vector<std::int64_t> &argmax,
                             const Tensor5<T> &grad_out, int in_nx, int in_ny,
                             int in_nz) {
  if (argmax.size() != grad_out.size())
    throw shape_error("maxpool argmax/grad_out size mismatch");
  if (in_nx != 2 * grad_out.nx || in_ny != 2 * grad_out.ny ||
      in_nz != 2 * grad_out.nz)
    throw shape_error("maxpool input dims inconsistent with grad_out");
  Tensor5<T> g(grad_out.n, grad_out.c, in_nx, in_ny, in_nz);
  // Argmax indices of distinct output elements live in disjoint 2x2x2
  // blocks, so chunked writes never collide.
  parallel_for(grad_out.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i)
      g.data[static_cast<std::size_t>(argmax[i])] += grad_out.data[i];
  });
  return g;
}

template <typename T>
Tensor5<T> upconv2_forward(const Tensor5<T> &in, const Tensor5<T> &kernel,
                           const std::vector<T> &bias) {
  check_conv_args(in, kernel, bias, true);
  if (kernel.nx != 2 || kernel.ny != 2 || kernel.nz != 2)
    throw shape_error("upconv kernel must be 2x2x2, got " +
                      kernel.shape_str());

  Tensor5<T> out(in.n, kernel.c, 2 * in.nx, 2 * in.ny, 2 * in.nz);
  const std::size_t lines =
      static_cast<std::size_t>(in.n) * kernel.c * out.nz * out.ny;
  parallel_for(lines, [&](std::size_t lb, std::size_t le) {
    for (std::size_t li = lb; li < le; ++li) {
      int oy = static_cast<int>(li % out.ny);
      int oz = static_cast<int>((li / out.ny) % out.nz);
      std::size_t rest = li / (static_cast<std::size_t>(out.ny) * out.nz);
      int co = static_cast<int>(rest % kernel.c);
      int b = static_cast<int>(rest / kernel.c);
      int y = oy / 2, dy = oy % 2, z = oz / 2, dz = oz % 2;
      T *orow = out.data.data() + out.index(b, co, 0, oy, oz);
      for (int ox = 0; ox < out.nx; ++ox)
        orow[ox] = bias[static_cast<std::size_t>(co)];
      for (int ci = 0; ci < in.c; ++ci) {
        const T *irow = in.data.data() + in.index(b, ci, 0, y, z);
        T w0 = kernel.at(ci, co, 0, dy, dz);
        T w1 = kernel.at(ci, co, 1, dy, dz);
        for (int x = 0; x < in.nx; ++x) {
          orow[2 * x] += w0 * irow[x];
          orow[2 * x + 1] += w1 * irow[x];
        }
      }
    }
  });
  return out;
}

template <typename T>
LayerGrads<T> upconv2_backward(const Tensor5<T> &in, const Tensor5<T> &kernel,
                               const Tensor5<T> &grad_out) {
  check_conv_args(in, kernel, std::vector<T>(kernel.c, T(0)), true);
  if (grad_out.n != in.n || grad_out.c != kernel.c ||
      grad_out.nx != 2 * in.nx || grad_out.ny != 2 * in.ny ||
      grad_out.nz != 2 * in.nz)
    throw shape_error("upconv grad_out shape " + grad_out.shape_str() +
                      " mismatches forward output");

  LayerGrads<T> g;
  g.input = Tensor5<T>(in.n, in.c, in.nx, in.ny, in.nz);
  g.kernel = Tensor5<T>(kernel.n, kernel.c, 2, 2, 2);
  g.bias.assign(static_cast<std::size_t>(kernel.c), T(0));

  const std::size_t in_lines =
      static_cast<std::size_t>(in.n) * in.c * in.nz * in.ny;
  parallel_for(in_lines, [&](std::size_t lb, std::size_t le) {
    for (std::size_t li = lb; li < le; ++li) {
      int y = static_cast<int>(li % in.ny);
      int z = static_cast<int>((li / in.ny) % in.nz);
      std::size_t rest = li / (static_cast<std::size_t>(in.ny) * in.nz);
      int ci = static_cast<int>(rest % in.c);
      int b = static_cast<int>(rest / in.c);
      T *grow = g.input.data.data() + g.input.index(b, ci, 0, y, z);
      for (int co = 0; co < kernel.c; ++co)
        for (int dz = 0; dz < 2; ++dz)
          for (int dy = 0; dy < 2; ++dy) {
            const T *gorow = grad_out.data.data() +
                             grad_out.index(b, co, 0, 2 * y + dy, 2 * z + dz);
            T w0 = kernel.at(ci, co, 0, dy, dz);
            T w1 = kernel.at(ci, co, 1, dy, dz);
            for (int x = 0; x < in.nx; ++x)
              grow[x] += w0 * gorow[2 * x] + w1 * gorow[2 * x + 1];
          }
    }
  });

  parallel_for(g.kernel.size(), [&](std::size_t kb, std::size_t ke) {
    for (std::size_t f = kb; f < ke; ++f) {
      int dx = static_cast<int>(f % 2);
      int dy = static_cast<int>((f / 2) % 2);
      int dz = static_cast<int>((f / 4) % 2);
      int co = static_cast<int>((f / 8) % kernel.c);
      int ci = static_cast<int>(f / (8 * static_cast<std::size_t>(kernel.c)));
      T sum = T(0);
      for (int b = 0; b < in.n; ++b)
        for (int z = 0; z < in.nz; ++z)
          for (int y = 0; y < in.ny; ++y) {
            const T *irow = in.data.data() + in.index(b, ci, 0, y, z);
            const T *gorow = grad_out.data.data() +
                             grad_out.index(b, co, dx, 2 * y + dy, 2 * z + dz);
            for (int x = 0; x < in.nx; ++x)
              sum += irow[x] * gorow[2 * x];
          }
      g.kernel.data[f] = sum;
    }
  });

  parallel_for(static_cast<std::size_t>(kernel.c),
               [&](std::size_t cb, std::size_t ce) {
                 const std::size_t plane = static_cast<std::size_t>(
                     grad_out.nx) * grad_out.ny * grad_out.nz;
                 for (std::size_t co = cb; co < ce; ++co) {
                   T sum = T(0);
                   for (int b = 0; b < in.n; ++b) {
                     const T *base = grad_out.data.data() +
                                     grad_out.index(b, static_cast<int>(co),
                                                    0, 0, 0);
                     for (std::size_t i = 0; i < plane; ++i)
                       sum += base[i];
                   }
                   g.bias[co] = sum;
                 }
               });
  return g;
}

template <typename T>
Tensor5<T> concat_channels(const Tensor5<T> &a, const Tensor5<T> &b) {
  if (a.n != b.n || a.nx != b.nx || a.ny != b.ny || a.nz != b.nz)
    throw shape_error("concat shape mismatch: " + a.shape_str() + " vs " +
                      b.shape_str());
  Tensor5<T> out(a.n, a.c + b.c, a.nx, a.ny, a.nz);
  const std::size_t block = static_cast<std::size_t>(a.nx) * a.ny * a.nz;
  parallel_for(static_cast<std::size_t>(a.n) * (a.c + b.c),
               [&](std::size_t bb, std::size_t be) {
                 for (std::size_t i = bb; i < be; ++i) {
                   int ch = static_cast<int>(i % (a.c + b.c));
                   int bn = static_cast<int>(i / (a.c + b.c));
                   const Tensor5<T> &src = ch < a.c ? a : b;
                   int sc = ch < a.c ? ch : ch - a.c;
                   std::copy_n(src.data.data() + src.index(bn, sc, 0, 0, 0),
                               block,
                               out.data.data() + out.index(bn, ch, 0, 0, 0));
                 }
               });
  return out;
}

template <typename T>
std::pair<Tensor5<T>, Tensor5<T>>
concat_channels_backward(const Tensor5<T> &grad_out, int c_a, int c_b) {
  if (grad_out.c != c_a + c_b)
    throw shape_error("concat grad has " + std::to_string(grad_out.c) +
                      " channels, expected " + std::to_string(c_a + c_b));
  Tensor5<T> ga(grad_out.n, c_a, grad_out.nx, grad_out.ny, grad_out.nz);
  Tensor5<T> gb(grad_out.n, c_b, grad_out.nx, grad_out.ny, grad_out.nz);
  const std::size_t block =
      static_cast<std::size_t>(grad_out.nx) * grad_out.ny * grad_out.nz;
  parallel_for(static_cast<std::size_t>(grad_out.n) * grad_out.c,
               [&](std::size_t bb, std::size_t be) {
                 for (std::size_t i = bb; i < be; ++i) {
                   int ch = static_cast<int>(i % grad_out.c);
                   int bn = static_cast<int>(i / grad_out.c);
                   Tensor5<T> &dst = ch < c_a ? ga : gb;
                   int dc = ch < c_a ? ch : ch - c_a;
                   std::copy_n(grad_out.data.data() +
                                   grad_out.index(bn, ch, 0, 0, 0),
                               block,
                               dst.data.data() + dst.index(bn, dc, 0, 0, 0));
                 }
               });
  return {std::move(ga), std::move(gb)};
}

#define VOLSR_INSTANTIATE_NET(T)                                              \
  template Tensor5<T> conv3d_forward<T>(const Tensor5<T> &,                   \
                                        const Tensor5<T> &,                   \
                                        const std::vector<T> &);              \
  template LayerGrads<T> conv3d_backward<T>(                                  \
      const Tensor5<T> &, const Tensor5<T> &, const Tensor5<T> &);            \
  template Tensor5<T> relu_forward<T>(const Tensor5<T> &);                    \
  template Tensor5<T> relu_backward<T>(const Tensor5<T> &,                    \
                                       const Tensor5<T> &);                   \
  template Pooled<T> maxpool2_forward<T>(const Tensor5<T> &);                 \
  template Tensor5<T> maxpool2_backward<T>(                                   \
      const std::vector<std::int64_t> &, const Tensor5<T> &, int, int, int);  \
  template Tensor5<T> upconv2_forward<T>(const Tensor5<T> &,                  \
                                         const Tensor5<T> &,                  \
                                         const std::vector<T> &);             \
  template LayerGrads<T> upconv2_backward<T>(                                 \
      const Tensor5<T> &, const Tensor5<T> &, const Tensor5<T> &);            \
  template Tensor5<T> concat_channels<T>(const Tensor5<T> &,                  \
                                         const Tensor5<T> &);                 \
  template std::pair<Tensor5<T>, Tensor5<T>> concat_channels_backward<T>(     \
      const Tensor5<T> &, int, int);

VOLSR_INSTANTIATE_NET(float)
VOLSR_INSTANTIATE_NET(double)

#undef VOLSR_INSTANTIATE_NET

} // namespace volsr
