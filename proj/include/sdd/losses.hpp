#pragma once

#include <cmath>
#include <string>

#include "sdd/errors.hpp"
#include "sdd/tensor.hpp"

namespace sdd {

enum class SupervisionTier {
  kNegative,
  kPositivePixelLabeled,
  kPositiveWeak,
};

inline const char* tier_name(SupervisionTier t) {
  switch (t) {
    case SupervisionTier::kNegative: return "negative";
    case SupervisionTier::kPositivePixelLabeled: return "positive_pixel_labeled";
    case SupervisionTier::kPositiveWeak: return "positive_weak";
  }
  return "?";
}

struct LossConfig {
  double delta = 1.0;   // classification loss weight
  double w_pos = 1.0;   // positive-pixel weight scale
  double p = 1.0;       // power applied to the normalized distance
  int dilation_kernel = 1;
  bool dynamic_balancing = true;
  bool distance_transform_enabled = true;

  void validate() const {
    if (delta <= 0) throw ArgumentError("delta must be > 0");
    if (w_pos <= 0) throw ArgumentError("w_pos must be > 0");
    if (p <= 0) throw ArgumentError("p must be > 0");
    if (dilation_kernel < 1 || dilation_kernel % 2 == 0)
      throw ArgumentError("dilation_kernel must be an odd integer >= 1, got " + std::to_string(dilation_kernel));
  }
};

// Linear shift of the training emphasis from segmentation (1) to
// classification (0) over the epochs. With balancing disabled both terms
// contribute equally from the start.
inline double lambda_schedule(int n, int n_ep, bool dynamic_balancing, double fallback_lambda = 0.5) {
  if (n_ep <= 0) throw ArgumentError("n_ep must be positive");
  if (n < 0 || n > n_ep)
    throw ArgumentError("epoch index " + std::to_string(n) + " outside [0, " + std::to_string(n_ep) + "]");
  if (!dynamic_balancing) return fallback_lambda;
  return 1.0 - static_cast<double>(n) / static_cast<double>(n_ep);
}

// Segmentation learning is enabled for every sample that has a well-defined
// pixel target: negatives (all-zero map) and pixel-labeled positives.
inline int gamma_indicator(SupervisionTier tier) {
  return tier == SupervisionTier::kPositiveWeak ? 0 : 1;
}

inline double total_loss(double seg_loss, double cls_loss, double lambda, int gamma, double delta) {
  return lambda * gamma * seg_loss + (1.0 - lambda) * delta * cls_loss;
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Cross-entropy of sigmoid(logit) against y in {0,1}, computed in the stable
// max(z,0) - z*y + log(1+exp(-|z|)) form.
inline double bce_with_logit(double z, double y) {
  return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

inline double classification_loss(double cls_logit, int label) {
  return bce_with_logit(cls_logit, static_cast<double>(label));
}

inline double classification_loss_grad(double cls_logit, int label) {
  return sigmoid(cls_logit) - static_cast<double>(label);
}

// Mean over all pixels of weight * BCE(sigmoid(logit), target). The mean is
// over the pixel count, not the weight sum.
template <typename T>
double segmentation_loss(const Tensor<T>& seg_logits, const Mask& target, const Tensor<double>& weights) {
  if (seg_logits.c != 1 || seg_logits.h != target.h || seg_logits.w != target.w)
    throw ArgumentError("segmentation_loss: logits/target shape mismatch");
  if (weights.c != 1 || weights.h != target.h || weights.w != target.w)
    throw ArgumentError("segmentation_loss: weights shape mismatch");
  double acc = 0.0;
  const size_t n = target.size();
  for (size_t i = 0; i < n; ++i)
    acc += weights.data[i] * bce_with_logit(static_cast<double>(seg_logits.data[i]), target.data[i]);
  return acc / static_cast<double>(n);
}

// Loss plus d(scale * loss)/d(logit), written into grad_out (allocated here).
template <typename T>
double segmentation_loss_grad(const Tensor<T>& seg_logits, const Mask& target, const Tensor<double>& weights,
                              double scale, Tensor<T>& grad_out) {
  if (seg_logits.c != 1 || seg_logits.h != target.h || seg_logits.w != target.w)
    throw ArgumentError("segmentation_loss: logits/target shape mismatch");
  if (weights.c != 1 || weights.h != target.h || weights.w != target.w)
    throw ArgumentError("segmentation_loss: weights shape mismatch");
  grad_out = Tensor<T>(1, target.h, target.w);
  double acc = 0.0;
  const size_t n = target.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  for (size_t i = 0; i < n; ++i) {
    double z = static_cast<double>(seg_logits.data[i]);
    double y = target.data[i];
    double w = weights.data[i];
    acc += w * bce_with_logit(z, y);
    grad_out.data[i] = static_cast<T>(scale * w * (sigmoid(z) - y) * inv_n);
  }
  return acc * inv_n;
}

}  // namespace sdd
