#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sdd/image.hpp"
#include "sdd/losses.hpp"
#include "sdd/tensor.hpp"

namespace sdd {

struct Sample {
  std::string id;
  Image image;                      // CHW, [0,1]
  bool positive = false;            // image-level label
  std::optional<Mask> pixel_mask;   // same extent as image; absent for negatives
  SupervisionTier tier = SupervisionTier::kNegative;
  int pad_bottom = 0, pad_right = 0;
};

struct DatasetSplit {
  std::vector<Sample> samples;
  std::vector<int> positives;  // indices into samples
  std::vector<int> negatives;

  void rebuild_index() {
    positives.clear();
    negatives.clear();
    for (int i = 0; i < static_cast<int>(samples.size()); ++i)
      (samples[i].positive ? positives : negatives).push_back(i);
  }

  int n_all() const { return static_cast<int>(positives.size()); }
  int n_pixel_labeled() const {
    int n = 0;
    for (int i : positives) n += samples[i].tier == SupervisionTier::kPositivePixelLabeled;
    return n;
  }
};

// Decodes (start, length) runs, 1-indexed in column-major pixel order.
Mask decode_rle(const std::vector<std::pair<int64_t, int64_t>>& runs, int height, int width);

// Inverse of decode_rle; used by the writers and as a test oracle endpoint.
std::vector<std::pair<int64_t, int64_t>> encode_rle(const Mask& mask);

// Rasterizes a rotated ellipse: a pixel is set iff its center lies inside or
// on the boundary. Geometry outside the image is clipped.
Mask ellipse_to_mask(double center_x, double center_y, double semi_major, double semi_minor, double rotation,
                     int height, int width);

// Keeps a seeded uniform choice of N positives pixel-labeled and downgrades
// the rest to weak; labels, images and stored masks are untouched.
DatasetSplit assign_supervision(DatasetSplit split, int n_labeled, uint64_t seed);

// All positives plus an equal-size negative selection taken as a rotating
// window over one fixed seeded permutation, so consecutive epochs cycle
// through every negative. The returned order is shuffled per epoch.
std::vector<int> balanced_epoch_indices(const DatasetSplit& split, int epoch, uint64_t seed);

// Stratified k-fold split: disjoint test partitions covering every sample,
// positives and negatives dealt separately, partition sizes within one.
struct Fold {
  DatasetSplit train;
  DatasetSplit test;
};
std::vector<Fold> make_folds(const DatasetSplit& split, int k, uint64_t seed);

}  // namespace sdd
