#pragma once

#include <filesystem>

#include "sdd/image.hpp"
#include "sdd/tensor.hpp"

namespace sdd {

// Decodes PNG, JPEG, PGM/PPM or uncompressed BMP by file extension.
// Values are scaled to [0,1]; the channel count follows the file (1 or 3).
Image load_image(const std::filesystem::path& path);

// Any nonzero pixel is positive.
Mask load_mask(const std::filesystem::path& path);

// 8-bit output; tensors are clamped to [0,1].
void save_png(const std::filesystem::path& path, const Image& img);
void save_png(const std::filesystem::path& path, const Mask& mask);
void save_pgm(const std::filesystem::path& path, const Image& img);

}  // namespace sdd
