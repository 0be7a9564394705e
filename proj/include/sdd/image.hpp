#pragma once

#include "sdd/tensor.hpp"

namespace sdd {

// Images are CHW float tensors with values in [0,1], 1 or 3 channels.
using Image = Tensor<float>;

// Zero-pads at the bottom/right so both extents divide by `multiple`.
Image pad_to_multiple(const Image& img, int multiple, int* pad_bottom = nullptr, int* pad_right = nullptr);
Mask pad_to_multiple(const Mask& mask, int multiple);

// Separable triangle-filter resize; the kernel widens when shrinking so the
// result is antialiased in both directions.
Image resize_image(const Image& img, int out_h, int out_w);

// Max-preserving resize: an output pixel is positive iff any source pixel it
// covers is positive. Thin structures survive arbitrary shrinking.
Mask resize_mask(const Mask& mask, int out_h, int out_w);

Image to_grayscale(const Image& img);
Image to_channels(const Image& img, int channels);

}  // namespace sdd
