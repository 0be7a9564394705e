#pragma once

#include "sdd/tensor.hpp"

namespace sdd {

// Morphological dilation with a kernel x kernel square structuring element.
// kernel must be odd; kernel == 1 is the identity.
Mask dilate_mask(const Mask& mask, int kernel);

// Exact squared Euclidean distance to the nearest zero pixel. Positions in an
// all-positive mask get a value larger than any finite image distance.
Tensor<double> squared_distance_to_zero(const Mask& mask);

// 8-connected component labels for positive pixels; 0 marks negatives.
// Returns the number of components.
int label_components(const Mask& mask, std::vector<int>& labels_out);

// Per-pixel segmentation loss weights: 1 on negative pixels, and
// w_pos * (D / D_max)^p on positives, where D is the Euclidean distance to
// the nearest negative pixel and D_max its maximum inside the pixel's
// connected region (or across the whole image with per_region = false).
// A mask with no negative pixel weighs w_pos everywhere.
Tensor<double> distance_weight_mask(const Mask& mask, double w_pos, double p, bool per_region = true);

// Factor x factor max-pool downsampling; extents must divide evenly.
Mask downsample_mask_max(const Mask& mask, int factor);
Tensor<double> downsample_weights_max(const Tensor<double>& weights, int factor);

}  // namespace sdd
