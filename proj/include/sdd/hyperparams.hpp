#pragma once

#include <cstdint>
#include <string>

#include "sdd/losses.hpp"

namespace sdd {

struct Hyperparams {
  int n_ep = 50;
  double eta = 0.1;  // plain SGD rate, no momentum, no weight decay
  int batch_size = 1;
  double delta = 1.0;
  double w_pos = 1.0;
  double p = 2.0;
  int dilation_kernel = 7;
  bool dynamic_balancing = true;
  bool stop_gradient_flow = true;
  bool distance_transform = true;
  bool batch_norm = true;
  uint64_t seed = 0;

  void validate() const {
    if (n_ep < 1) throw ArgumentError("n_ep must be >= 1");
    // eta == 0 is admitted so a no-op pass stays expressible in tests
    if (!(eta >= 0)) throw ArgumentError("eta must be >= 0");
    if (batch_size < 1) throw ArgumentError("batch size must be >= 1");
    LossConfig lc = loss_config();
    lc.validate();
  }

  LossConfig loss_config() const {
    return LossConfig{.delta = delta,
                      .w_pos = w_pos,
                      .p = p,
                      .dilation_kernel = dilation_kernel,
                      .dynamic_balancing = dynamic_balancing,
                      .distance_transform_enabled = distance_transform};
  }
};

// Published run settings per dataset. Keys: dagm, ksdd, ksdd_weak, ksdd2,
// severstal (the last one needs the positive-set size to pick its epoch
// count). Weak KSDD runs swap delta/eta and turn dynamic balancing off.
Hyperparams preset_hyperparams(const std::string& dataset_key, int n_all = -1);

}  // namespace sdd
