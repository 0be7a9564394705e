#include "sdd/hyperparams.hpp"

#include <algorithm>
#include <cctype>

#include "sdd/errors.hpp"

namespace sdd {

Hyperparams preset_hyperparams(const std::string& dataset_key, int n_all) {
  std::string key = dataset_key;
  std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });

  Hyperparams hp;
  if (key == "dagm") {
    hp.n_ep = 70;
    hp.eta = 0.05;
    hp.batch_size = 1;
    hp.delta = 1.0;
    hp.w_pos = 10.0;
    hp.p = 1.0;
    hp.dilation_kernel = 7;
  } else if (key == "ksdd") {
    hp.n_ep = 50;
    hp.eta = 1.0;
    hp.batch_size = 1;
    hp.delta = 0.01;
    hp.w_pos = 1.0;
    hp.p = 2.0;
    hp.dilation_kernel = 7;
  } else if (key == "ksdd_weak") {
    // the no-pixel-label run raises delta, lowers eta and starts the
    // classification head immediately
    hp.n_ep = 50;
    hp.eta = 0.01;
    hp.batch_size = 1;
    hp.delta = 1.0;
    hp.w_pos = 1.0;
    hp.p = 2.0;
    hp.dilation_kernel = 7;
    hp.dynamic_balancing = false;
  } else if (key == "ksdd2") {
    hp.n_ep = 50;
    hp.eta = 0.01;
    hp.batch_size = 1;
    hp.delta = 1.0;
    hp.w_pos = 3.0;
    hp.p = 2.0;
    hp.dilation_kernel = 15;
  } else if (key == "severstal") {
    hp.eta = 0.1;
    hp.batch_size = 10;
    hp.delta = 0.1;
    hp.w_pos = 1.0;
    hp.p = 2.0;
    hp.dilation_kernel = 7;
    switch (n_all) {
      case 300: hp.n_ep = 90; break;
      case 750: hp.n_ep = 80; break;
      case 1500: hp.n_ep = 60; break;
      case 3000: hp.n_ep = 40; break;
      default:
        throw ArgumentError("severstal preset needs n_all in {300, 750, 1500, 3000}, got " + std::to_string(n_all));
    }
  } else {
    throw ArgumentError("unknown hyperparameter preset '" + dataset_key + "'");
  }
  return hp;
}

}  // namespace sdd
