#include "sdd/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "sdd/errors.hpp"
#include "sdd/rng.hpp"

namespace sdd {

Mask decode_rle(const std::vector<std::pair<int64_t, int64_t>>& runs, int height, int width) {
  if (height < 1 || width < 1) throw ArgumentError("decode_rle: bad extents");
  Mask mask(height, width);
  const int64_t total = static_cast<int64_t>(height) * width;
  for (auto [start, length] : runs) {
    if (start < 1 || length < 1 || start - 1 + length > total)
      throw IoError("decode_rle: run (" + std::to_string(start) + "," + std::to_string(length) +
                    ") exceeds a " + std::to_string(height) + "x" + std::to_string(width) + " image");
    for (int64_t s = start - 1; s < start - 1 + length; ++s) {
      int64_t row = s % height, col = s / height;
      mask.at(static_cast<int>(row), static_cast<int>(col)) = 1;
    }
  }
  return mask;
}

std::vector<std::pair<int64_t, int64_t>> encode_rle(const Mask& mask) {
  std::vector<std::pair<int64_t, int64_t>> runs;
  const int64_t total = static_cast<int64_t>(mask.h) * mask.w;
  int64_t run_start = 0, run_len = 0;
  for (int64_t s = 0; s < total; ++s) {
    int64_t row = s % mask.h, col = s / mask.h;
    if (mask.at(static_cast<int>(row), static_cast<int>(col))) {
      if (run_len == 0) run_start = s + 1;  // 1-indexed
      ++run_len;
    } else if (run_len) {
      runs.emplace_back(run_start, run_len);
      run_len = 0;
    }
  }
  if (run_len) runs.emplace_back(run_start, run_len);
  return runs;
}

Mask ellipse_to_mask(double center_x, double center_y, double semi_major, double semi_minor, double rotation,
                     int height, int width) {
  if (semi_major <= 0 || semi_minor <= 0) throw ArgumentError("ellipse_to_mask: semi-axes must be positive");
  Mask mask(height, width);
  const double c = std::cos(rotation), s = std::sin(rotation);
  const double tol = 1.0 + 1e-9;  // boundary pixels count as inside
  for (int r = 0; r < height; ++r) {
    for (int x = 0; x < width; ++x) {
      double dx = x - center_x, dy = r - center_y;
      double u = (c * dx + s * dy) / semi_major;
      double v = (-s * dx + c * dy) / semi_minor;
      if (u * u + v * v <= tol) mask.at(r, x) = 1;
    }
  }
  return mask;
}

DatasetSplit assign_supervision(DatasetSplit split, int n_labeled, uint64_t seed) {
  const int n_all = split.n_all();
  if (n_labeled < 0 || n_labeled > n_all)
    throw ArgumentError("assign_supervision: N=" + std::to_string(n_labeled) + " outside [0, " +
                        std::to_string(n_all) + "]");
  Rng rng(derive_seed(seed, /*stream=*/0x5157));
  std::vector<int> order = split.positives;
  rng.shuffle(order);
  for (int i = 0; i < n_all; ++i) {
    Sample& s = split.samples[order[i]];
    s.tier = i < n_labeled ? SupervisionTier::kPositivePixelLabeled : SupervisionTier::kPositiveWeak;
  }
  for (int i : split.negatives) split.samples[i].tier = SupervisionTier::kNegative;
  return split;
}

std::vector<int> balanced_epoch_indices(const DatasetSplit& split, int epoch, uint64_t seed) {
  const int npos = static_cast<int>(split.positives.size());
  const int nneg = static_cast<int>(split.negatives.size());
  if (npos == 0) throw ArgumentError("balanced_epoch_indices: no positive samples");
  if (nneg == 0) throw ArgumentError("balanced_epoch_indices: no negative samples");
  if (epoch < 0) throw ArgumentError("balanced_epoch_indices: negative epoch");

  // one fixed permutation of the negative pool; epochs slide a window over it
  Rng perm_rng(derive_seed(seed, /*stream=*/0xBA1A));
  std::vector<int> perm = split.negatives;
  perm_rng.shuffle(perm);

  std::vector<int> out = split.positives;
  int64_t start = static_cast<int64_t>(epoch) * npos % nneg;
  for (int i = 0; i < npos; ++i) out.push_back(perm[(start + i) % nneg]);

  Rng order_rng(derive_seed(seed, /*stream=*/0xE60C, static_cast<uint64_t>(epoch)));
  order_rng.shuffle(out);
  return out;
}

std::vector<Fold> make_folds(const DatasetSplit& split, int k, uint64_t seed) {
  const int npos = static_cast<int>(split.positives.size());
  if (k < 2) throw ArgumentError("make_folds: k must be at least 2");
  if (k > npos) throw ArgumentError("make_folds: k=" + std::to_string(k) + " exceeds the " +
                                    std::to_string(npos) + " positives");

  Rng rng(derive_seed(seed, /*stream=*/0xF07D));
  std::vector<int> pos = split.positives, neg = split.negatives;
  rng.shuffle(pos);
  rng.shuffle(neg);

  // deal positives then negatives with one running counter, keeping both the
  // class balance and the partition sizes within one sample
  std::vector<std::vector<int>> part(k);
  int cursor = 0;
  for (int i : pos) part[cursor++ % k].push_back(i);
  for (int i : neg) part[cursor++ % k].push_back(i);

  std::vector<Fold> folds(k);
  for (int f = 0; f < k; ++f) {
    for (int g = 0; g < k; ++g) {
      DatasetSplit& dst = (g == f) ? folds[f].test : folds[f].train;
      for (int idx : part[g]) dst.samples.push_back(split.samples[idx]);
    }
    auto by_id = [](const Sample& a, const Sample& b) { return a.id < b.id; };
    std::sort(folds[f].train.samples.begin(), folds[f].train.samples.end(), by_id);
    std::sort(folds[f].test.samples.begin(), folds[f].test.samples.end(), by_id);
    folds[f].train.rebuild_index();
    folds[f].test.rebuild_index();
  }
  return folds;
}

}  // namespace sdd
