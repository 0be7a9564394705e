#include "sdd/mask_ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "sdd/errors.hpp"

namespace sdd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1D squared-distance transform (Felzenszwalb & Huttenlocher lower envelope).
// Sources must be finite; callers encode "no source" as a large finite value.
void dt_1d(const double* f, double* d, int n, int* v, double* z) {
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    double s;
    while (true) {
      s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
      if (s <= z[k])
        --k;
      else
        break;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

}  // namespace

Mask dilate_mask(const Mask& mask, int kernel) {
  if (kernel < 1 || kernel % 2 == 0)
    throw ArgumentError("dilate_mask: kernel must be odd and >= 1, got " + std::to_string(kernel));
  if (kernel == 1) return mask;
  const int r = kernel / 2;
  const int h = mask.h, w = mask.w;
  // square structuring element is separable: horizontal running max, then vertical
  Mask tmp(h, w), out(h, w);
  for (int y = 0; y < h; ++y) {
    const uint8_t* src = mask.data.data() + static_cast<size_t>(y) * w;
    uint8_t* dst = tmp.data.data() + static_cast<size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      uint8_t v = 0;
      int x0 = std::max(0, x - r), x1 = std::min(w - 1, x + r);
      for (int i = x0; i <= x1 && !v; ++i) v = src[i];
      dst[x] = v;
    }
  }
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) {
      uint8_t v = 0;
      int y0 = std::max(0, y - r), y1 = std::min(h - 1, y + r);
      for (int i = y0; i <= y1 && !v; ++i) v = tmp.at(i, x);
      out.at(y, x) = v;
    }
  }
  return out;
}

Tensor<double> squared_distance_to_zero(const Mask& mask) {
  const int h = mask.h, w = mask.w;
  // larger than any squared pixel distance inside the image, so real sources
  // always dominate it in the envelope
  const double far = static_cast<double>(h) * h + static_cast<double>(w) * w + 1.0;
  Tensor<double> d(1, h, w);
  for (size_t i = 0; i < mask.size(); ++i) d.data[i] = mask.data[i] ? far : 0.0;

  const int n = std::max(h, w);
  std::vector<double> f(n), dd(n), z(n + 1);
  std::vector<int> v(n);

  // columns
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) f[y] = d.data[static_cast<size_t>(y) * w + x];
    dt_1d(f.data(), dd.data(), h, v.data(), z.data());
    for (int y = 0; y < h; ++y) d.data[static_cast<size_t>(y) * w + x] = dd[y];
  }
  // rows
  for (int y = 0; y < h; ++y) {
    double* row = d.data.data() + static_cast<size_t>(y) * w;
    std::copy(row, row + w, f.data());
    dt_1d(f.data(), dd.data(), w, v.data(), z.data());
    std::copy(dd.data(), dd.data() + w, row);
  }
  return d;
}

int label_components(const Mask& mask, std::vector<int>& labels_out) {
  const int h = mask.h, w = mask.w;
  labels_out.assign(mask.size(), 0);
  int next = 0;
  std::vector<int> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      size_t i = static_cast<size_t>(y) * w + x;
      if (!mask.data[i] || labels_out[i]) continue;
      ++next;
      labels_out[i] = next;
      stack.assign(1, static_cast<int>(i));
      while (!stack.empty()) {
        int cur = stack.back();
        stack.pop_back();
        int cy = cur / w, cx = cur % w;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (!dy && !dx) continue;
            int ny = cy + dy, nx = cx + dx;
            if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
            size_t ni = static_cast<size_t>(ny) * w + nx;
            if (mask.data[ni] && !labels_out[ni]) {
              labels_out[ni] = next;
              stack.push_back(static_cast<int>(ni));
            }
          }
        }
      }
    }
  }
  return next;
}

Tensor<double> distance_weight_mask(const Mask& mask, double w_pos, double p, bool per_region) {
  Tensor<double> weights(1, mask.h, mask.w, 1.0);
  if (!mask.any()) return weights;

  bool has_negative = mask.count() < mask.size();
  if (!has_negative) {
    weights.fill(w_pos);
    return weights;
  }

  Tensor<double> d2 = squared_distance_to_zero(mask);

  std::vector<int> labels;
  int ncomp = label_components(mask, labels);
  std::vector<double> comp_max(static_cast<size_t>(ncomp) + 1, 0.0);
  if (per_region) {
    for (size_t i = 0; i < mask.size(); ++i)
      if (mask.data[i]) comp_max[labels[i]] = std::max(comp_max[labels[i]], d2.data[i]);
  } else {
    double m = 0.0;
    for (size_t i = 0; i < mask.size(); ++i)
      if (mask.data[i]) m = std::max(m, d2.data[i]);
    std::fill(comp_max.begin(), comp_max.end(), m);
  }

  for (size_t i = 0; i < mask.size(); ++i) {
    if (!mask.data[i]) continue;
    double dmax = comp_max[labels[i]];
    double rel = dmax > 0 ? std::sqrt(d2.data[i] / dmax) : 1.0;
    weights.data[i] = w_pos * std::pow(rel, p);
  }
  return weights;
}

Mask downsample_mask_max(const Mask& mask, int factor) {
  if (factor < 1 || mask.h % factor || mask.w % factor)
    throw ArgumentError("downsample_mask_max: extents must divide by the factor");
  Mask out(mask.h / factor, mask.w / factor);
  for (int y = 0; y < mask.h; ++y)
    for (int x = 0; x < mask.w; ++x)
      if (mask.at(y, x)) out.at(y / factor, x / factor) = 1;
  return out;
}

Tensor<double> downsample_weights_max(const Tensor<double>& weights, int factor) {
  if (factor < 1 || weights.h % factor || weights.w % factor)
    throw ArgumentError("downsample_weights_max: extents must divide by the factor");
  Tensor<double> out(1, weights.h / factor, weights.w / factor, -kInf);
  for (int y = 0; y < weights.h; ++y)
    for (int x = 0; x < weights.w; ++x) {
      double& slot = out.data[static_cast<size_t>(y / factor) * out.w + x / factor];
      slot = std::max(slot, weights.data[static_cast<size_t>(y) * weights.w + x]);
    }
  return out;
}

}  // namespace sdd
