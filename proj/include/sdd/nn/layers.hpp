#pragma once

#include <cmath>
#include <cstring>
#include <limits>
#include <string>
#include <vector>

#include "sdd/nn/gemm.hpp"
#include "sdd/rng.hpp"
#include "sdd/tensor.hpp"

namespace sdd::nn {

// Named view over one parameter tensor and its gradient accumulator.
template <typename T>
struct ParamRef {
  std::string name;
  std::vector<T>* value;
  std::vector<T>* grad;
};

// 2D convolution, square kernel, stride 1, "same" zero padding.
//
// The im2col buffer is laid out (in_ch*k*k) x (h*w) so the forward pass is a
// single GEMM whose output is already in CHW order:
//   y(out_ch, h*w) = weight(out_ch, in_ch*k*k) * x_col(in_ch*k*k, h*w)
template <typename T>
struct Conv2d {
  int in_ch = 0, out_ch = 0, ksize = 1;
  std::vector<T> weight;  // (out_ch, in_ch*k*k) row-major
  std::vector<T> bias;    // (out_ch)
  std::vector<T> gweight, gbias;

  // forward cache
  std::vector<T> x_col;
  std::vector<T> dx_col;
  int h = 0, w = 0;

  Conv2d() = default;
  Conv2d(int in_ch_, int out_ch_, int ksize_) : in_ch(in_ch_), out_ch(out_ch_), ksize(ksize_) {
    size_t wn = static_cast<size_t>(out_ch) * in_ch * ksize * ksize;
    weight.assign(wn, T(0));
    bias.assign(out_ch, T(0));
    gweight.assign(wn, T(0));
    gbias.assign(out_ch, T(0));
  }

  int patch() const { return in_ch * ksize * ksize; }

  void init(Rng& rng) {
    // He initialization, gain for the rectifier stack.
    double std = std::sqrt(2.0 / patch());
    for (auto& v : weight) v = static_cast<T>(rng.normal() * std);
    std::fill(bias.begin(), bias.end(), T(0));
  }

  void im2col(const Tensor<T>& x) {
    const int pad = ksize / 2;
    const int hw = h * w;
    // padding slots stay zero across calls; only reallocation re-zeroes
    if (x_col.size() != static_cast<size_t>(patch()) * hw) x_col.assign(static_cast<size_t>(patch()) * hw, T(0));
    for (int ci = 0; ci < in_ch; ++ci) {
      const T* src = x.channel(ci);
      for (int dy = 0; dy < ksize; ++dy) {
        for (int dx = 0; dx < ksize; ++dx) {
          T* row = x_col.data() + (static_cast<size_t>((ci * ksize + dy) * ksize + dx)) * hw;
          int sx = dx - pad;  // source column offset
          int x0 = std::max(0, -sx), x1 = std::min(w, w - sx);
          if (x1 <= x0) continue;
          for (int y = 0; y < h; ++y) {
            int sy = y + dy - pad;
            if (sy < 0 || sy >= h) continue;
            std::memcpy(row + static_cast<size_t>(y) * w + x0, src + static_cast<size_t>(sy) * w + x0 + sx,
                        static_cast<size_t>(x1 - x0) * sizeof(T));
          }
        }
      }
    }
  }

  Tensor<T> forward(const Tensor<T>& x) {
    h = x.h;
    w = x.w;
    const int hw = h * w;
    Tensor<T> y(out_ch, h, w);
    if (ksize == 1) {
      gemm(weight.data(), x.data.data(), y.data.data(), out_ch, hw, in_ch);
      last_in_ = x;  // 1x1 path keeps the input instead of a column buffer
    } else {
      im2col(x);
      gemm(weight.data(), x_col.data(), y.data.data(), out_ch, hw, patch());
    }
    for (int o = 0; o < out_ch; ++o) {
      T* row = y.channel(o);
      for (int i = 0; i < hw; ++i) row[i] += bias[o];
    }
    return y;
  }

  // Accumulates parameter gradients; writes input gradient unless skipped.
  Tensor<T> backward(const Tensor<T>& gy, bool need_dx = true) {
    const int hw = h * w;
    for (int o = 0; o < out_ch; ++o) {
      const T* row = gy.channel(o);
      T s = T(0);
      for (int i = 0; i < hw; ++i) s += row[i];
      gbias[o] += s;
    }
    Tensor<T> gx;
    if (ksize == 1) {
      gemm_bt(gy.data.data(), last_in_.data.data(), gweight.data(), out_ch, in_ch, hw, /*accumulate=*/true);
      if (need_dx) {
        gx = Tensor<T>(in_ch, h, w);
        gemm_at(weight.data(), gy.data.data(), gx.data.data(), in_ch, hw, out_ch);
      }
      return gx;
    }
    gemm_bt(gy.data.data(), x_col.data(), gweight.data(), out_ch, patch(), hw, /*accumulate=*/true);
    if (!need_dx) return gx;
    dx_col.resize(static_cast<size_t>(patch()) * hw);  // gemm overwrites every slot
    gemm_at(weight.data(), gy.data.data(), dx_col.data(), patch(), hw, out_ch);
    gx = Tensor<T>(in_ch, h, w);
    const int pad = ksize / 2;
    for (int ci = 0; ci < in_ch; ++ci) {
      T* dst = gx.channel(ci);
      for (int dy = 0; dy < ksize; ++dy) {
        for (int dx = 0; dx < ksize; ++dx) {
          const T* row = dx_col.data() + (static_cast<size_t>((ci * ksize + dy) * ksize + dx)) * hw;
          int sx = dx - pad;
          int x0 = std::max(0, -sx), x1 = std::min(w, w - sx);
          if (x1 <= x0) continue;
          for (int y = 0; y < h; ++y) {
            int sy = y + dy - pad;
            if (sy < 0 || sy >= h) continue;
            T* d = dst + static_cast<size_t>(sy) * w + sx;
            const T* s = row + static_cast<size_t>(y) * w;
            for (int xx = x0; xx < x1; ++xx) d[xx] += s[xx];
          }
        }
      }
    }
    return gx;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".weight", &weight, &gweight});
    out.push_back({prefix + ".bias", &bias, &gbias});
  }

 private:
  Tensor<T> last_in_;
};

// Per-channel normalization over spatial positions with affine parameters and
// running statistics for inference. Statistics are computed per sample, which
// matches the bs=1 training regime used throughout.
template <typename T>
struct BatchNorm2d {
  int ch = 0;
  T eps = T(1e-5);
  T momentum = T(0.1);
  bool affine_identity = false;  // true disables normalization (pass-through)
  std::vector<T> gamma, beta, ggamma, gbeta;
  std::vector<T> run_mean, run_var;

  // cache
  std::vector<T> mean_, inv_std_;
  Tensor<T> xhat_;

  BatchNorm2d() = default;
  explicit BatchNorm2d(int ch_) : ch(ch_) {
    gamma.assign(ch, T(1));
    beta.assign(ch, T(0));
    ggamma.assign(ch, T(0));
    gbeta.assign(ch, T(0));
    run_mean.assign(ch, T(0));
    run_var.assign(ch, T(1));
  }

  Tensor<T> forward(const Tensor<T>& x, bool train) {
    if (affine_identity) return x;
    const int hw = x.plane();
    Tensor<T> y(x.c, x.h, x.w);
    if (train) {
      mean_.assign(ch, T(0));
      inv_std_.assign(ch, T(0));
      xhat_ = Tensor<T>(x.c, x.h, x.w);
      for (int c = 0; c < ch; ++c) {
        const T* in = x.channel(c);
        double m = 0;
        for (int i = 0; i < hw; ++i) m += in[i];
        m /= hw;
        double v = 0;
        for (int i = 0; i < hw; ++i) {
          double d = in[i] - m;
          v += d * d;
        }
        v /= hw;
        T istd = static_cast<T>(1.0 / std::sqrt(v + static_cast<double>(eps)));
        mean_[c] = static_cast<T>(m);
        inv_std_[c] = istd;
        run_mean[c] = (T(1) - momentum) * run_mean[c] + momentum * static_cast<T>(m);
        run_var[c] = (T(1) - momentum) * run_var[c] + momentum * static_cast<T>(v);
        T* xh = xhat_.channel(c);
        T* out = y.channel(c);
        for (int i = 0; i < hw; ++i) {
          xh[i] = (in[i] - static_cast<T>(m)) * istd;
          out[i] = gamma[c] * xh[i] + beta[c];
        }
      }
    } else {
      for (int c = 0; c < ch; ++c) {
        const T* in = x.channel(c);
        T* out = y.channel(c);
        T istd = static_cast<T>(1.0 / std::sqrt(static_cast<double>(run_var[c]) + static_cast<double>(eps)));
        T scale = gamma[c] * istd;
        T shift = beta[c] - run_mean[c] * scale;
        for (int i = 0; i < hw; ++i) out[i] = in[i] * scale + shift;
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    if (affine_identity) return gy;
    const int hw = gy.plane();
    Tensor<T> gx(gy.c, gy.h, gy.w);
    for (int c = 0; c < ch; ++c) {
      const T* g = gy.channel(c);
      const T* xh = xhat_.channel(c);
      double sum_g = 0, sum_gx = 0;
      for (int i = 0; i < hw; ++i) {
        sum_g += g[i];
        sum_gx += g[i] * xh[i];
      }
      ggamma[c] += static_cast<T>(sum_gx);
      gbeta[c] += static_cast<T>(sum_g);
      T* out = gx.channel(c);
      T k = gamma[c] * inv_std_[c];
      T mg = static_cast<T>(sum_g / hw);
      T mgx = static_cast<T>(sum_gx / hw);
      for (int i = 0; i < hw; ++i) out[i] = k * (g[i] - mg - xh[i] * mgx);
    }
    return gx;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    if (affine_identity) return;
    out.push_back({prefix + ".gamma", &gamma, &ggamma});
    out.push_back({prefix + ".beta", &beta, &gbeta});
  }
};

template <typename T>
struct Relu {
  Tensor<T> mask_;

  Tensor<T> forward(const Tensor<T>& x) {
    Tensor<T> y(x.c, x.h, x.w);
    mask_ = Tensor<T>(x.c, x.h, x.w);
    for (size_t i = 0; i < x.size(); ++i) {
      bool pos = x.data[i] > T(0);
      y.data[i] = pos ? x.data[i] : T(0);
      mask_.data[i] = pos ? T(1) : T(0);
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gx(gy.c, gy.h, gy.w);
    for (size_t i = 0; i < gy.size(); ++i) gx.data[i] = gy.data[i] * mask_.data[i];
    return gx;
  }
};

// 2x2 max pooling, stride 2. Odd extents keep their trailing row/column as a
// partial window (ceil semantics), so any map down to 1x1 pools cleanly.
template <typename T>
struct MaxPool2x2 {
  std::vector<int> argmax_;
  int in_h = 0, in_w = 0, ch = 0;

  static int out_extent(int v) { return (v + 1) / 2; }

  Tensor<T> forward(const Tensor<T>& x) {
    in_h = x.h;
    in_w = x.w;
    ch = x.c;
    int oh = out_extent(x.h), ow = out_extent(x.w);
    Tensor<T> y(x.c, oh, ow);
    argmax_.assign(static_cast<size_t>(x.c) * oh * ow, 0);
    for (int c = 0; c < x.c; ++c) {
      const T* in = x.channel(c);
      T* out = y.channel(c);
      int* am = argmax_.data() + static_cast<size_t>(c) * oh * ow;
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          int y0 = oy * 2, x0 = ox * 2;
          int y1 = std::min(y0 + 2, x.h), x1 = std::min(x0 + 2, x.w);
          T best = -std::numeric_limits<T>::infinity();
          int best_i = y0 * x.w + x0;
          for (int yy = y0; yy < y1; ++yy)
            for (int xx = x0; xx < x1; ++xx) {
              T v = in[yy * x.w + xx];
              if (v > best) {
                best = v;
                best_i = yy * x.w + xx;
              }
            }
          out[oy * ow + ox] = best;
          am[oy * ow + ox] = best_i;
        }
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gx(ch, in_h, in_w);
    int ohw = gy.plane();
    for (int c = 0; c < ch; ++c) {
      const T* g = gy.channel(c);
      T* out = gx.channel(c);
      const int* am = argmax_.data() + static_cast<size_t>(c) * ohw;
      for (int i = 0; i < ohw; ++i) out[am[i]] += g[i];
    }
    return gx;
  }
};

template <typename T>
struct Linear {
  int in_n = 0, out_n = 0;
  std::vector<T> weight, bias, gweight, gbias;
  std::vector<T> last_in_;

  Linear() = default;
  Linear(int in_n_, int out_n_) : in_n(in_n_), out_n(out_n_) {
    weight.assign(static_cast<size_t>(out_n) * in_n, T(0));
    bias.assign(out_n, T(0));
    gweight.assign(weight.size(), T(0));
    gbias.assign(out_n, T(0));
  }

  void init(Rng& rng) {
    double std = std::sqrt(2.0 / in_n);
    for (auto& v : weight) v = static_cast<T>(rng.normal() * std);
    std::fill(bias.begin(), bias.end(), T(0));
  }

  std::vector<T> forward(const std::vector<T>& x) {
    last_in_ = x;
    std::vector<T> y(out_n);
    for (int o = 0; o < out_n; ++o) {
      T s = bias[o];
      const T* wr = weight.data() + static_cast<size_t>(o) * in_n;
      for (int i = 0; i < in_n; ++i) s += wr[i] * x[i];
      y[o] = s;
    }
    return y;
  }

  std::vector<T> backward(const std::vector<T>& gy) {
    std::vector<T> gx(in_n, T(0));
    for (int o = 0; o < out_n; ++o) {
      T g = gy[o];
      gbias[o] += g;
      T* gw = gweight.data() + static_cast<size_t>(o) * in_n;
      const T* wr = weight.data() + static_cast<size_t>(o) * in_n;
      for (int i = 0; i < in_n; ++i) {
        gw[i] += g * last_in_[i];
        gx[i] += g * wr[i];
      }
    }
    return gx;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".weight", &weight, &gweight});
    out.push_back({prefix + ".bias", &bias, &gbias});
  }
};

// Global average + max over each channel. Backward scatters the max gradient
// to the argmax position and spreads the average gradient uniformly.
template <typename T>
struct GlobalPool {
  std::vector<int> argmax_;
  int ch = 0, hw = 0, h = 0, w = 0;

  // returns {avg_0..avg_{c-1}, max_0..max_{c-1}}
  std::vector<T> forward(const Tensor<T>& x) {
    ch = x.c;
    h = x.h;
    w = x.w;
    hw = x.plane();
    argmax_.assign(ch, 0);
    std::vector<T> out(static_cast<size_t>(ch) * 2);
    for (int c = 0; c < ch; ++c) {
      const T* in = x.channel(c);
      double s = 0;
      T best = in[0];
      int bi = 0;
      for (int i = 0; i < hw; ++i) {
        s += in[i];
        if (in[i] > best) {
          best = in[i];
          bi = i;
        }
      }
      out[c] = static_cast<T>(s / hw);
      out[ch + c] = best;
      argmax_[c] = bi;
    }
    return out;
  }

  Tensor<T> backward(const T* gavg, const T* gmax) {
    Tensor<T> gx(ch, h, w);
    for (int c = 0; c < ch; ++c) {
      T* out = gx.channel(c);
      T ga = gavg[c] / static_cast<T>(hw);
      for (int i = 0; i < hw; ++i) out[i] = ga;
      out[argmax_[c]] += gmax[c];
    }
    return gx;
  }
};

}  // namespace sdd::nn
