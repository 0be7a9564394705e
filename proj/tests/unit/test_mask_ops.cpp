#include <doctest.h>

#include <cmath>
#include <limits>

#include "sdd/mask_ops.hpp"
#include "sdd/rng.hpp"

using namespace sdd;

namespace {

Mask random_mask(int h, int w, double density, uint64_t seed) {
  Rng rng(seed);
  Mask m(h, w);
  for (auto& v : m.data) v = rng.uniform() < density ? 1 : 0;
  return m;
}

// sliding-window maximum, the direct reading of dilation
Mask dilate_oracle(const Mask& m, int kernel) {
  int r = kernel / 2;
  Mask out(m.h, m.w);
  for (int y = 0; y < m.h; ++y)
    for (int x = 0; x < m.w; ++x) {
      uint8_t v = 0;
      for (int dy = -r; dy <= r && !v; ++dy)
        for (int dx = -r; dx <= r && !v; ++dx) {
          int yy = y + dy, xx = x + dx;
          if (yy >= 0 && yy < m.h && xx >= 0 && xx < m.w && m.at(yy, xx)) v = 1;
        }
      out.at(y, x) = v;
    }
  return out;
}

// all-pairs nearest-negative distances plus BFS-free region maxima
Tensor<double> weight_oracle(const Mask& m, double w_pos, double p) {
  const int h = m.h, w = m.w;
  Tensor<double> dist(1, h, w, 0.0);
  bool any_neg = false;
  for (auto v : m.data) any_neg |= (v == 0);
  Tensor<double> out(1, h, w, 1.0);
  if (!any_neg) {
    out.fill(w_pos);
    return out;
  }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!m.at(y, x)) continue;
      double best = std::numeric_limits<double>::infinity();
      for (int yy = 0; yy < h; ++yy)
        for (int xx = 0; xx < w; ++xx)
          if (!m.at(yy, xx)) {
            double d = std::hypot(yy - y, xx - x);
            best = std::min(best, d);
          }
      dist.data[static_cast<size_t>(y) * w + x] = best;
    }
  std::vector<int> labels;
  int n = label_components(m, labels);
  std::vector<double> mx(static_cast<size_t>(n) + 1, 0.0);
  for (size_t i = 0; i < m.size(); ++i)
    if (m.data[i]) mx[labels[i]] = std::max(mx[labels[i]], dist.data[i]);
  for (size_t i = 0; i < m.size(); ++i)
    if (m.data[i]) out.data[i] = w_pos * std::pow(dist.data[i] / mx[labels[i]], p);
  return out;
}

}  // namespace

TEST_CASE("dilation identity, block growth, and error cases") {
  Mask m = random_mask(6, 9, 0.4, 1);
  CHECK(dilate_mask(m, 1) == m);
  CHECK_THROWS_AS(dilate_mask(m, 2), ArgumentError);
  CHECK_THROWS_AS(dilate_mask(m, 0), ArgumentError);

  Mask single(9, 9);
  single.at(4, 4) = 1;
  Mask d = dilate_mask(single, 3);
  CHECK(d.count() == 9);
  for (int y = 3; y <= 5; ++y)
    for (int x = 3; x <= 5; ++x) CHECK(d.at(y, x) == 1);
}

TEST_CASE("dilation equals the sliding-window maximum oracle") {
  for (uint64_t seed = 0; seed < 8; ++seed) {
    Mask m = random_mask(16, 16, 0.15, 100 + seed);
    for (int k : {3, 5, 7}) CHECK(dilate_mask(m, k) == dilate_oracle(m, k));
  }
}

TEST_CASE("distance weights: trivial anchors") {
  Mask zeros(5, 5);
  auto w = distance_weight_mask(zeros, 10.0, 2.0);
  for (double v : w.data) CHECK(v == 1.0);

  Mask single(7, 7);
  single.at(3, 3) = 1;
  for (double wp : {1.0, 3.0, 10.0})
    for (double p : {0.5, 1.0, 2.0}) {
      auto ws = distance_weight_mask(single, wp, p);
      CHECK(ws.at(0, 3, 3) == doctest::Approx(wp).epsilon(1e-12));
    }

  Mask full(4, 4, 1);
  auto wf = distance_weight_mask(full, 7.0, 1.0);
  for (double v : wf.data) CHECK(v == 7.0);
}

TEST_CASE("distance weights on the 1x7 strip") {
  Mask strip(1, 7);
  strip.at(0, 2) = strip.at(0, 3) = strip.at(0, 4) = 1;
  auto w = distance_weight_mask(strip, 1.0, 1.0);
  const double expect[7] = {1, 1, 0.5, 1.0, 0.5, 1, 1};
  for (int x = 0; x < 7; ++x) CHECK(w.at(0, 0, x) == doctest::Approx(expect[x]).epsilon(1e-12));
}

TEST_CASE("distance weights match the all-pairs oracle") {
  for (uint64_t seed = 0; seed < 12; ++seed) {
    Mask m = random_mask(16, 16, seed % 3 == 0 ? 0.7 : 0.3, 500 + seed);
    double wp = 1.0 + (seed % 4), p = 0.5 + 0.5 * (seed % 3);
    auto got = distance_weight_mask(m, wp, p);
    auto expect = weight_oracle(m, wp, p);
    for (size_t i = 0; i < m.size(); ++i) CHECK(std::abs(got.data[i] - expect.data[i]) < 1e-9);
  }
}

TEST_CASE("weights are monotone in distance and antitone in p") {
  Mask m = random_mask(24, 24, 0.45, 77);
  auto d2 = squared_distance_to_zero(m);
  std::vector<int> labels;
  label_components(m, labels);
  auto w1 = distance_weight_mask(m, 5.0, 1.0);
  auto w2 = distance_weight_mask(m, 5.0, 2.0);
  for (size_t i = 0; i < m.size(); ++i) {
    for (size_t j = 0; j < m.size(); ++j) {
      if (!m.data[i] || !m.data[j] || labels[i] != labels[j]) continue;
      if (d2.data[i] <= d2.data[j]) CHECK(w1.data[i] <= w1.data[j] + 1e-12);
    }
    if (m.data[i]) CHECK(w2.data[i] <= w1.data[i] + 1e-12);  // x^2 <= x^1 on [0,1]
  }
}

TEST_CASE("weight range and the per-region maximum") {
  Mask m = random_mask(20, 20, 0.35, 42);
  if (!m.any()) m.at(3, 3) = 1;
  auto w = distance_weight_mask(m, 4.0, 1.5);
  std::vector<int> labels;
  int n = label_components(m, labels);
  std::vector<double> best(static_cast<size_t>(n) + 1, 0.0);
  for (size_t i = 0; i < m.size(); ++i) {
    if (!m.data[i]) {
      CHECK(w.data[i] == 1.0);
      continue;
    }
    CHECK(w.data[i] > 0.0);
    CHECK(w.data[i] <= 4.0 + 1e-12);
    best[labels[i]] = std::max(best[labels[i]], w.data[i]);
  }
  for (int c = 1; c <= n; ++c) CHECK(best[c] == doctest::Approx(4.0).epsilon(1e-12));  // attained per region
}

TEST_CASE("dilation raises the weight of original boundary pixels") {
  Mask m(15, 15);
  for (int y = 6; y <= 8; ++y)
    for (int x = 5; x <= 9; ++x) m.at(y, x) = 1;
  auto w_before = distance_weight_mask(m, 2.0, 1.0);
  auto w_after = distance_weight_mask(dilate_mask(m, 3), 2.0, 1.0);
  // boundary pixels of the original region gain interior margin
  for (int x = 5; x <= 9; ++x) {
    CHECK(w_after.at(0, 6, x) > w_before.at(0, 6, x));
    CHECK(w_after.at(0, 8, x) > w_before.at(0, 8, x));
  }
}

TEST_CASE("max-pool downsampling preserves any hit") {
  Mask m(16, 16);
  m.at(0, 0) = 1;
  m.at(7, 9) = 1;
  Mask d = downsample_mask_max(m, 8);
  CHECK(d.h == 2);
  CHECK(d.w == 2);
  CHECK(d.at(0, 0) == 1);
  CHECK(d.at(0, 1) == 1);
  CHECK(d.at(1, 0) == 0);
  CHECK(d.at(1, 1) == 0);

  Tensor<double> w(1, 4, 4, 1.0);
  w.at(0, 1, 1) = 9.0;
  w.at(0, 2, 3) = 3.5;
  auto dw = downsample_weights_max(w, 2);
  CHECK(dw.at(0, 0, 0) == 9.0);
  CHECK(dw.at(0, 1, 1) == 3.5);
  CHECK(dw.at(0, 0, 1) == 1.0);
}
