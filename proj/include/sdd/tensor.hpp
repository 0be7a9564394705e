#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "sdd/errors.hpp"

namespace sdd {

// Dense CHW tensor. Channel-major so that each (channel,row) is a contiguous
// strip of `w` values, which is what the conv kernels and image code assume.
template <typename T>
struct Tensor {
  int c = 0, h = 0, w = 0;
  std::vector<T> data;

  Tensor() = default;
  Tensor(int c_, int h_, int w_, T fill = T(0))
      : c(c_), h(h_), w(w_), data(static_cast<size_t>(c_) * h_ * w_, fill) {}

  size_t size() const { return data.size(); }
  int plane() const { return h * w; }

  T& at(int ci, int y, int x) { return data[(static_cast<size_t>(ci) * h + y) * w + x]; }
  const T& at(int ci, int y, int x) const { return data[(static_cast<size_t>(ci) * h + y) * w + x]; }

  T* channel(int ci) { return data.data() + static_cast<size_t>(ci) * plane(); }
  const T* channel(int ci) const { return data.data() + static_cast<size_t>(ci) * plane(); }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  bool same_shape(const Tensor& o) const { return c == o.c && h == o.h && w == o.w; }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(c, h, w);
    for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

// Single-channel binary map stored as uint8 {0,1}.
struct Mask {
  int h = 0, w = 0;
  std::vector<uint8_t> data;

  Mask() = default;
  Mask(int h_, int w_, uint8_t fill = 0) : h(h_), w(w_), data(static_cast<size_t>(h_) * w_, fill) {}

  uint8_t& at(int y, int x) { return data[static_cast<size_t>(y) * w + x]; }
  uint8_t at(int y, int x) const { return data[static_cast<size_t>(y) * w + x]; }
  size_t size() const { return data.size(); }

  bool any() const {
    for (uint8_t v : data)
      if (v) return true;
    return false;
  }

  size_t count() const {
    size_t n = 0;
    for (uint8_t v : data) n += (v != 0);
    return n;
  }

  bool operator==(const Mask& o) const { return h == o.h && w == o.w && data == o.data; }
};

}  // namespace sdd
