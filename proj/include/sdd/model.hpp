#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdd/errors.hpp"
#include "sdd/nn/layers.hpp"
#include "sdd/rng.hpp"
#include "sdd/tensor.hpp"

namespace sdd {

struct ModelConfig {
  int input_channels = 1;
  int input_height = 0;
  int input_width = 0;
  bool stop_gradient_flow = true;
  bool batch_norm = true;
  uint64_t init_seed = 0;

  void validate() const {
    if (input_channels != 1 && input_channels != 3)
      throw ConfigError("input_channels must be 1 or 3, got " + std::to_string(input_channels));
    if (input_height < 8 || input_width < 8 || input_height % 8 != 0 || input_width % 8 != 0)
      throw ConfigError("input size " + std::to_string(input_height) + "x" + std::to_string(input_width) +
                        " must be a multiple of 8 in each dimension");
  }

  bool same_structure(const ModelConfig& o) const {
    return input_channels == o.input_channels && input_height == o.input_height && input_width == o.input_width &&
           batch_norm == o.batch_norm;
  }
};

template <typename T>
struct ModelOutput {
  Tensor<T> seg_features;  // S_f: 1024 x H/8 x W/8, post-activation
  Tensor<T> seg_logits;    // S_h: 1 x H/8 x W/8, pre-activation
  T cls_logit = T(0);      // C_p, pre-activation
};

// Two-sub-network detector: a segmentation trunk producing a feature volume
// S_f and logit map S_h, and a classification branch reading [S_f, S_h] plus
// a pooled S_h shortcut. With stop_gradient_flow the classification loss
// cannot move any trunk parameter: its gradients are cut where the branch
// consumes S_f and S_h.
template <typename T>
class SegClsModel {
 public:
  explicit SegClsModel(const ModelConfig& config) : cfg_(config) {
    cfg_.validate();
    const int ic = cfg_.input_channels;
    conv1a_ = nn::Conv2d<T>(ic, 32, 5);
    conv1b_ = nn::Conv2d<T>(32, 32, 5);
    conv2a_ = nn::Conv2d<T>(32, 64, 5);
    conv2b_ = nn::Conv2d<T>(64, 64, 5);
    conv2c_ = nn::Conv2d<T>(64, 64, 5);
    for (int i = 0; i < 4; ++i) conv3_[i] = nn::Conv2d<T>(64, 64, 5);
    convf_ = nn::Conv2d<T>(64, 1024, 5);
    convh_ = nn::Conv2d<T>(1024, 1, 1);
    conva_ = nn::Conv2d<T>(1025, 8, 5);
    convb_ = nn::Conv2d<T>(8, 16, 5);
    convc_ = nn::Conv2d<T>(16, 32, 5);
    fc_ = nn::Linear<T>(66, 1);

    auto make_bn = [&](int ch) {
      nn::BatchNorm2d<T> bn(ch);
      bn.affine_identity = !cfg_.batch_norm;
      return bn;
    };
    bn1a_ = make_bn(32);
    bn1b_ = make_bn(32);
    bn2a_ = make_bn(64);
    bn2b_ = make_bn(64);
    bn2c_ = make_bn(64);
    for (int i = 0; i < 4; ++i) bn3_[i] = make_bn(64);
    bnf_ = make_bn(1024);
    bna_ = make_bn(8);
    bnb_ = make_bn(16);
    bnc_ = make_bn(32);

    Rng rng(derive_seed(cfg_.init_seed, /*stream=*/0xC0DE));
    conv1a_.init(rng);
    conv1b_.init(rng);
    conv2a_.init(rng);
    conv2b_.init(rng);
    conv2c_.init(rng);
    for (auto& c : conv3_) c.init(rng);
    convf_.init(rng);
    convh_.init(rng);
    conva_.init(rng);
    convb_.init(rng);
    convc_.init(rng);
    fc_.init(rng);
  }

  const ModelConfig& config() const { return cfg_; }
  int map_height() const { return cfg_.input_height / 8; }
  int map_width() const { return cfg_.input_width / 8; }
  int classification_input_channels() const { return conva_.in_ch; }
  int descriptor_size() const { return fc_.in_n; }

  ModelOutput<T> forward(const Tensor<T>& image, bool train) {
    if (image.c != cfg_.input_channels || image.h != cfg_.input_height || image.w != cfg_.input_width)
      throw ArgumentError("forward: image shape " + std::to_string(image.c) + "x" + std::to_string(image.h) + "x" +
                          std::to_string(image.w) + " does not match model config");
    // segmentation trunk
    Tensor<T> t = relu1a_.forward(bn1a_.forward(conv1a_.forward(image), train));
    t = relu1b_.forward(bn1b_.forward(conv1b_.forward(t), train));
    t = pool1_.forward(t);
    t = relu2a_.forward(bn2a_.forward(conv2a_.forward(t), train));
    t = relu2b_.forward(bn2b_.forward(conv2b_.forward(t), train));
    t = relu2c_.forward(bn2c_.forward(conv2c_.forward(t), train));
    t = pool2_.forward(t);
    for (int i = 0; i < 4; ++i) t = relu3_[i].forward(bn3_[i].forward(conv3_[i].forward(t), train));
    t = pool3_.forward(t);
    Tensor<T> sf = reluf_.forward(bnf_.forward(convf_.forward(t), train));
    Tensor<T> sh = convh_.forward(sf);

    // classification branch on [S_f, S_h]
    Tensor<T> cat(1025, sf.h, sf.w);
    std::memcpy(cat.data.data(), sf.data.data(), sf.size() * sizeof(T));
    std::memcpy(cat.channel(1024), sh.data.data(), sh.size() * sizeof(T));
    Tensor<T> u = poolc0_.forward(cat);
    u = relua_.forward(bna_.forward(conva_.forward(u), train));
    u = poolc1_.forward(u);
    u = relub_.forward(bnb_.forward(convb_.forward(u), train));
    u = poolc2_.forward(u);
    u = reluc_.forward(bnc_.forward(convc_.forward(u), train));  // C_f

    std::vector<T> desc = gpool_cf_.forward(u);   // [Ga(Cf), Gm(Cf)]
    std::vector<T> shp = gpool_sh_.forward(sh);   // [Ga(Sh), Gm(Sh)]
    desc.insert(desc.end(), shp.begin(), shp.end());
    T cp = fc_.forward(desc)[0];

    ModelOutput<T> out;
    out.seg_features = std::move(sf);
    out.seg_logits = std::move(sh);
    out.cls_logit = cp;
    return out;
  }

  // Backpropagates d(total)/d(S_h) from the segmentation loss plus the scalar
  // d(total)/d(C_p) from the classification loss, accumulating parameter
  // gradients. grad_seg_logits may be empty when the sample has no
  // segmentation term.
  void backward(const Tensor<T>& grad_seg_logits, T grad_cls_logit) {
    const int mh = poolc0_.in_h, mw = poolc0_.in_w;
    Tensor<T> g_sf;   // gradient reaching S_f (post-activation)
    Tensor<T> g_sh;   // gradient reaching S_h

    if (grad_cls_logit != T(0)) {
      std::vector<T> gdesc = fc_.backward({grad_cls_logit});
      Tensor<T> g_cf = gpool_cf_.backward(gdesc.data(), gdesc.data() + 32);
      Tensor<T> g = bnc_.backward(reluc_.backward(g_cf));
      g = poolc2_.backward(convc_.backward(g));
      g = bnb_.backward(relub_.backward(g));
      g = poolc1_.backward(convb_.backward(g));
      g = bna_.backward(relua_.backward(g));
      Tensor<T> g_cat = poolc0_.backward(conva_.backward(g));
      Tensor<T> g_sh_short = gpool_sh_.backward(gdesc.data() + 64, gdesc.data() + 65);
      if (!cfg_.stop_gradient_flow) {
        g_sf = Tensor<T>(1024, mh, mw);
        std::memcpy(g_sf.data.data(), g_cat.data.data(), g_sf.size() * sizeof(T));
        g_sh = Tensor<T>(1, mh, mw);
        for (int i = 0; i < mh * mw; ++i) g_sh.data[i] = g_cat.channel(1024)[i] + g_sh_short.data[i];
      }
    }

    if (grad_seg_logits.size() != 0) {
      if (g_sh.size() == 0)
        g_sh = grad_seg_logits;
      else
        for (size_t i = 0; i < g_sh.size(); ++i) g_sh.data[i] += grad_seg_logits.data[i];
    }

    if (g_sh.size() == 0 && g_sf.size() == 0) return;  // nothing reaches the trunk

    if (g_sh.size() != 0) {
      Tensor<T> from_h = convh_.backward(g_sh);
      if (g_sf.size() == 0)
        g_sf = std::move(from_h);
      else
        for (size_t i = 0; i < g_sf.size(); ++i) g_sf.data[i] += from_h.data[i];
    }

    Tensor<T> g = bnf_.backward(reluf_.backward(g_sf));
    g = pool3_.backward(convf_.backward(g));
    for (int i = 3; i >= 0; --i) g = conv3_[i].backward(bn3_[i].backward(relu3_[i].backward(g)));
    g = pool2_.backward(g);
    g = bn2c_.backward(relu2c_.backward(g));
    g = bn2b_.backward(relu2b_.backward(conv2c_.backward(g)));
    g = bn2a_.backward(relu2a_.backward(conv2b_.backward(g)));
    g = pool1_.backward(conv2a_.backward(g));
    g = bn1b_.backward(relu1b_.backward(g));
    g = bn1a_.backward(relu1a_.backward(conv1b_.backward(g)));
    conv1a_.backward(g, /*need_dx=*/false);
  }

  std::vector<nn::ParamRef<T>> segmentation_parameters() {
    std::vector<nn::ParamRef<T>> p;
    conv1a_.collect("seg.conv1a", p);
    bn1a_.collect("seg.bn1a", p);
    conv1b_.collect("seg.conv1b", p);
    bn1b_.collect("seg.bn1b", p);
    conv2a_.collect("seg.conv2a", p);
    bn2a_.collect("seg.bn2a", p);
    conv2b_.collect("seg.conv2b", p);
    bn2b_.collect("seg.bn2b", p);
    conv2c_.collect("seg.conv2c", p);
    bn2c_.collect("seg.bn2c", p);
    for (int i = 0; i < 4; ++i) {
      conv3_[i].collect("seg.conv3" + std::string(1, char('a' + i)), p);
      bn3_[i].collect("seg.bn3" + std::string(1, char('a' + i)), p);
    }
    convf_.collect("seg.convf", p);
    bnf_.collect("seg.bnf", p);
    convh_.collect("seg.convh", p);
    return p;
  }

  std::vector<nn::ParamRef<T>> classification_parameters() {
    std::vector<nn::ParamRef<T>> p;
    conva_.collect("cls.conva", p);
    bna_.collect("cls.bna", p);
    convb_.collect("cls.convb", p);
    bnb_.collect("cls.bnb", p);
    convc_.collect("cls.convc", p);
    bnc_.collect("cls.bnc", p);
    fc_.collect("cls.fc", p);
    return p;
  }

  std::vector<nn::ParamRef<T>> parameters() {
    auto p = segmentation_parameters();
    auto q = classification_parameters();
    p.insert(p.end(), q.begin(), q.end());
    return p;
  }

  // Normalization running statistics, serialized alongside parameters.
  std::vector<nn::ParamRef<T>> statistics() {
    std::vector<nn::ParamRef<T>> s;
    auto add = [&](const std::string& n, nn::BatchNorm2d<T>& bn) {
      if (bn.affine_identity) return;
      s.push_back({n + ".run_mean", &bn.run_mean, nullptr});
      s.push_back({n + ".run_var", &bn.run_var, nullptr});
    };
    add("seg.bn1a", bn1a_);
    add("seg.bn1b", bn1b_);
    add("seg.bn2a", bn2a_);
    add("seg.bn2b", bn2b_);
    add("seg.bn2c", bn2c_);
    for (int i = 0; i < 4; ++i) add("seg.bn3" + std::string(1, char('a' + i)), bn3_[i]);
    add("seg.bnf", bnf_);
    add("cls.bna", bna_);
    add("cls.bnb", bnb_);
    add("cls.bnc", bnc_);
    return s;
  }

  void zero_grad() {
    for (auto& p : parameters()) std::fill(p.grad->begin(), p.grad->end(), T(0));
  }

  void sgd_step(T lr) {
    for (auto& p : parameters()) {
      T* v = p.value->data();
      const T* g = p.grad->data();
      for (size_t i = 0; i < p.value->size(); ++i) v[i] -= lr * g[i];
    }
  }

 private:
  ModelConfig cfg_;

  nn::Conv2d<T> conv1a_, conv1b_, conv2a_, conv2b_, conv2c_, convf_, convh_;
  nn::Conv2d<T> conv3_[4];
  nn::BatchNorm2d<T> bn1a_, bn1b_, bn2a_, bn2b_, bn2c_, bnf_;
  nn::BatchNorm2d<T> bn3_[4];
  nn::Relu<T> relu1a_, relu1b_, relu2a_, relu2b_, relu2c_, reluf_;
  nn::Relu<T> relu3_[4];
  nn::MaxPool2x2<T> pool1_, pool2_, pool3_;

  nn::Conv2d<T> conva_, convb_, convc_;
  nn::BatchNorm2d<T> bna_, bnb_, bnc_;
  nn::Relu<T> relua_, relub_, reluc_;
  nn::MaxPool2x2<T> poolc0_, poolc1_, poolc2_;
  nn::GlobalPool<T> gpool_cf_, gpool_sh_;
  nn::Linear<T> fc_;
};

using ModelF = SegClsModel<float>;
using ModelD = SegClsModel<double>;

}  // namespace sdd
