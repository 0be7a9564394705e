#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "sdd/dataset.hpp"
#include "sdd/hyperparams.hpp"
#include "sdd/model.hpp"

namespace sdd {

struct EpochRecord {
  int epoch = 0;
  double lambda = 0.0;
  double seg_loss = 0.0;    // mean over the epoch of gamma_i * L_seg,i
  double cls_loss = 0.0;    // mean of L_cls,i
  double total_loss = 0.0;  // mean of the per-sample combined loss
  std::optional<double> val_ap;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
};

struct StepStats {
  double seg_loss = 0.0;
  double cls_loss = 0.0;
  double total_loss = 0.0;
};

struct TrainOptions {
  // evaluated after each epoch when set; the returned AP lands in history
  std::function<double(SegClsModel<float>&, int epoch)> validator;
  // stops after the current epoch when it returns true
  std::function<bool(int epoch, double val_ap)> stop_requested;
  std::filesystem::path checkpoint_path;       // written at the end when set
  int checkpoint_every = 0;                    // also every k epochs when > 0
  std::filesystem::path best_checkpoint_path;  // best validation AP so far
};

// Precomputed segmentation target and pixel weights at the logit-map
// resolution. Dilation and distance weighting happen at full resolution,
// then both maps shrink by max-pooling.
struct SegTarget {
  Mask target;
  Tensor<double> weights;
};
SegTarget prepare_seg_target(const Mask& full_res_mask, int factor, const LossConfig& loss);
SegTarget negative_seg_target(int map_h, int map_w);

// One SGD update over the batch. Per-sample gradients are averaged; the
// returned components are batch means with seg masked by gamma.
StepStats train_step(SegClsModel<float>& model, std::span<const Sample* const> batch,
                     std::span<const SegTarget* const> targets, double lambda, const Hyperparams& hp);

// Full training loop: per-epoch lambda, balanced negative undersampling,
// plain SGD. Throws DivergenceError with epoch/step context if a loss goes
// non-finite.
TrainHistory train(SegClsModel<float>& model, const DatasetSplit& split, const Hyperparams& hp,
                   const TrainOptions& options = {});

}  // namespace sdd
