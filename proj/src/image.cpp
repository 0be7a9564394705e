#include "sdd/image.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "sdd/errors.hpp"

namespace sdd {

Image pad_to_multiple(const Image& img, int multiple, int* pad_bottom, int* pad_right) {
  int oh = (img.h + multiple - 1) / multiple * multiple;
  int ow = (img.w + multiple - 1) / multiple * multiple;
  if (pad_bottom) *pad_bottom = oh - img.h;
  if (pad_right) *pad_right = ow - img.w;
  if (oh == img.h && ow == img.w) return img;
  Image out(img.c, oh, ow, 0.0f);
  for (int c = 0; c < img.c; ++c)
    for (int y = 0; y < img.h; ++y)
      std::copy(img.channel(c) + static_cast<size_t>(y) * img.w, img.channel(c) + static_cast<size_t>(y + 1) * img.w,
                out.channel(c) + static_cast<size_t>(y) * ow);
  return out;
}

Mask pad_to_multiple(const Mask& mask, int multiple) {
  int oh = (mask.h + multiple - 1) / multiple * multiple;
  int ow = (mask.w + multiple - 1) / multiple * multiple;
  if (oh == mask.h && ow == mask.w) return mask;
  Mask out(oh, ow);
  for (int y = 0; y < mask.h; ++y)
    std::copy(mask.data.begin() + static_cast<size_t>(y) * mask.w,
              mask.data.begin() + static_cast<size_t>(y + 1) * mask.w,
              out.data.begin() + static_cast<size_t>(y) * ow);
  return out;
}

namespace {

struct Tap {
  int start;
  std::vector<float> coeff;  // normalized triangle weights
};

std::vector<Tap> make_taps(int in_n, int out_n) {
  std::vector<Tap> taps(out_n);
  double scale = static_cast<double>(in_n) / out_n;
  double support = std::max(1.0, scale);
  for (int o = 0; o < out_n; ++o) {
    double center = (o + 0.5) * scale - 0.5;
    int lo = static_cast<int>(std::floor(center - support));
    int hi = static_cast<int>(std::ceil(center + support));
    lo = std::max(lo, 0);
    hi = std::min(hi, in_n - 1);
    Tap t;
    t.start = lo;
    double sum = 0;
    for (int i = lo; i <= hi; ++i) {
      double x = std::abs(i - center) / support;
      double wgt = x < 1.0 ? 1.0 - x : 0.0;
      t.coeff.push_back(static_cast<float>(wgt));
      sum += wgt;
    }
    if (sum <= 0) {  // degenerate tap, fall back to nearest
      t.coeff.assign(t.coeff.size(), 0.0f);
      int nearest = std::clamp(static_cast<int>(std::lround(center)), lo, hi);
      t.coeff[nearest - lo] = 1.0f;
      sum = 1.0;
    }
    for (auto& c : t.coeff) c = static_cast<float>(c / sum);
    taps[o] = std::move(t);
  }
  return taps;
}

}  // namespace

Image resize_image(const Image& img, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) throw ArgumentError("resize_image: output extents must be positive");
  if (out_h == img.h && out_w == img.w) return img;
  auto tx = make_taps(img.w, out_w);
  auto ty = make_taps(img.h, out_h);

  Image mid(img.c, img.h, out_w);
  for (int c = 0; c < img.c; ++c) {
    for (int y = 0; y < img.h; ++y) {
      const float* src = img.channel(c) + static_cast<size_t>(y) * img.w;
      float* dst = mid.channel(c) + static_cast<size_t>(y) * out_w;
      for (int x = 0; x < out_w; ++x) {
        const Tap& t = tx[x];
        float acc = 0;
        for (size_t i = 0; i < t.coeff.size(); ++i) acc += t.coeff[i] * src[t.start + i];
        dst[x] = acc;
      }
    }
  }
  Image out(img.c, out_h, out_w);
  for (int c = 0; c < img.c; ++c) {
    for (int y = 0; y < out_h; ++y) {
      const Tap& t = ty[y];
      float* dst = out.channel(c) + static_cast<size_t>(y) * out_w;
      for (int x = 0; x < out_w; ++x) {
        float acc = 0;
        for (size_t i = 0; i < t.coeff.size(); ++i)
          acc += t.coeff[i] * mid.channel(c)[static_cast<size_t>(t.start + i) * out_w + x];
        dst[x] = acc;
      }
    }
  }
  return out;
}

Mask resize_mask(const Mask& mask, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) throw ArgumentError("resize_mask: output extents must be positive");
  if (out_h == mask.h && out_w == mask.w) return mask;
  Mask out(out_h, out_w);
  // forward map: each source pixel marks every output pixel whose footprint
  // contains it, so no positive pixel can vanish
  for (int y = 0; y < mask.h; ++y) {
    int oy0 = static_cast<int>(static_cast<int64_t>(y) * out_h / mask.h);
    int oy1 = static_cast<int>((static_cast<int64_t>(y + 1) * out_h + mask.h - 1) / mask.h);
    oy1 = std::min(oy1, out_h);
    for (int x = 0; x < mask.w; ++x) {
      if (!mask.at(y, x)) continue;
      int ox0 = static_cast<int>(static_cast<int64_t>(x) * out_w / mask.w);
      int ox1 = static_cast<int>((static_cast<int64_t>(x + 1) * out_w + mask.w - 1) / mask.w);
      ox1 = std::min(ox1, out_w);
      for (int oy = oy0; oy < oy1; ++oy)
        for (int ox = ox0; ox < ox1; ++ox) out.at(oy, ox) = 1;
    }
  }
  return out;
}

Image to_grayscale(const Image& img) {
  if (img.c == 1) return img;
  if (img.c != 3) throw ArgumentError("to_grayscale: expected 1 or 3 channels");
  Image out(1, img.h, img.w);
  const float* r = img.channel(0);
  const float* g = img.channel(1);
  const float* b = img.channel(2);
  for (int i = 0; i < img.plane(); ++i) out.data[i] = 0.299f * r[i] + 0.587f * g[i] + 0.114f * b[i];
  return out;
}

Image to_channels(const Image& img, int channels) {
  if (img.c == channels) return img;
  if (channels == 1) return to_grayscale(img);
  if (channels == 3 && img.c == 1) {
    Image out(3, img.h, img.w);
    for (int c = 0; c < 3; ++c) std::copy(img.data.begin(), img.data.end(), out.channel(c));
    return out;
  }
  throw ArgumentError("to_channels: unsupported conversion");
}

}  // namespace sdd
