#include "sdd/trainer.hpp"

#include <cmath>
#include <unordered_map>

#include "sdd/checkpoint.hpp"
#include "sdd/mask_ops.hpp"

namespace sdd {

SegTarget prepare_seg_target(const Mask& full_res_mask, int factor, const LossConfig& loss) {
  Mask dilated = dilate_mask(full_res_mask, loss.dilation_kernel);
  Tensor<double> weights;
  if (loss.distance_transform_enabled) {
    weights = distance_weight_mask(dilated, loss.w_pos, loss.p);
  } else {
    weights = Tensor<double>(1, dilated.h, dilated.w, 1.0);
    for (size_t i = 0; i < dilated.size(); ++i)
      if (dilated.data[i]) weights.data[i] = loss.w_pos;
  }
  return {downsample_mask_max(dilated, factor), downsample_weights_max(weights, factor)};
}

SegTarget negative_seg_target(int map_h, int map_w) {
  return {Mask(map_h, map_w), Tensor<double>(1, map_h, map_w, 1.0)};
}

StepStats train_step(SegClsModel<float>& model, std::span<const Sample* const> batch,
                     std::span<const SegTarget* const> targets, double lambda, const Hyperparams& hp) {
  if (batch.empty()) throw ArgumentError("train_step: empty batch");
  const double inv_bs = 1.0 / static_cast<double>(batch.size());
  StepStats stats;
  model.zero_grad();
  for (size_t i = 0; i < batch.size(); ++i) {
    const Sample& s = *batch[i];
    auto out = model.forward(s.image, /*train=*/true);
    const int gamma = gamma_indicator(s.tier);
    const int label = s.positive ? 1 : 0;

    double seg_loss = 0.0;
    Tensor<float> grad_sh;
    if (gamma) {
      const SegTarget& t = *targets[i];
      seg_loss = segmentation_loss_grad(out.seg_logits, t.target, t.weights, lambda * gamma * inv_bs, grad_sh);
    }
    double cls_loss = classification_loss(out.cls_logit, label);
    float grad_cp = static_cast<float>((1.0 - lambda) * hp.delta * classification_loss_grad(out.cls_logit, label) *
                                       inv_bs);
    model.backward(grad_sh, grad_cp);

    stats.seg_loss += gamma * seg_loss * inv_bs;
    stats.cls_loss += cls_loss * inv_bs;
    stats.total_loss += total_loss(seg_loss, cls_loss, lambda, gamma, hp.delta) * inv_bs;
  }
  if (!std::isfinite(stats.total_loss))
    throw DivergenceError("train_step: non-finite loss");
  model.sgd_step(static_cast<float>(hp.eta));
  return stats;
}

TrainHistory train(SegClsModel<float>& model, const DatasetSplit& split, const Hyperparams& hp,
                   const TrainOptions& options) {
  hp.validate();
  if (split.samples.empty()) throw ArgumentError("train: empty dataset split");

  const int map_h = model.map_height(), map_w = model.map_width();
  const LossConfig loss = hp.loss_config();

  // targets/weights depend only on the stored masks; build them once
  SegTarget negative = negative_seg_target(map_h, map_w);
  std::unordered_map<int, SegTarget> positive_targets;
  for (int idx : split.positives) {
    const Sample& s = split.samples[idx];
    if (s.tier != SupervisionTier::kPositivePixelLabeled) continue;
    if (!s.pixel_mask) throw ArgumentError("train: pixel-labeled sample '" + s.id + "' has no mask");
    positive_targets.emplace(idx, prepare_seg_target(*s.pixel_mask, 8, loss));
  }

  TrainHistory history;
  double best_val = -1.0;
  for (int epoch = 0; epoch < hp.n_ep; ++epoch) {
    const double lambda = lambda_schedule(epoch, hp.n_ep, hp.dynamic_balancing);
    std::vector<int> order = balanced_epoch_indices(split, epoch, hp.seed);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lambda = lambda;
    size_t seen = 0;
    for (size_t off = 0; off < order.size(); off += hp.batch_size) {
      size_t take = std::min<size_t>(hp.batch_size, order.size() - off);
      std::vector<const Sample*> batch(take);
      std::vector<const SegTarget*> targets(take);
      for (size_t i = 0; i < take; ++i) {
        int idx = order[off + i];
        batch[i] = &split.samples[idx];
        auto it = positive_targets.find(idx);
        targets[i] = it != positive_targets.end() ? &it->second : &negative;
      }
      StepStats stats;
      try {
        stats = train_step(model, batch, targets, lambda, hp);
      } catch (const DivergenceError&) {
        throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + ", step " +
                              std::to_string(off / hp.batch_size));
      }
      rec.seg_loss += stats.seg_loss * static_cast<double>(take);
      rec.cls_loss += stats.cls_loss * static_cast<double>(take);
      rec.total_loss += stats.total_loss * static_cast<double>(take);
      seen += take;
    }
    rec.seg_loss /= static_cast<double>(seen);
    rec.cls_loss /= static_cast<double>(seen);
    rec.total_loss /= static_cast<double>(seen);

    double val_ap = std::numeric_limits<double>::quiet_NaN();
    if (options.validator) {
      val_ap = options.validator(model, epoch);
      rec.val_ap = val_ap;
      if (!options.best_checkpoint_path.empty() && std::isfinite(val_ap) && val_ap > best_val) {
        best_val = val_ap;
        save_checkpoint(model, options.best_checkpoint_path);
      }
    }
    history.epochs.push_back(rec);

    if (options.checkpoint_every > 0 && !options.checkpoint_path.empty() &&
        (epoch + 1) % options.checkpoint_every == 0)
      save_checkpoint(model, options.checkpoint_path);
    if (options.stop_requested && options.stop_requested(epoch, val_ap)) break;
  }
  if (!options.checkpoint_path.empty()) save_checkpoint(model, options.checkpoint_path);
  return history;
}

}  // namespace sdd
