#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "sdd/checkpoint.hpp"
#include "sdd/dataset.hpp"
#include "sdd/hyperparams.hpp"
#include "sdd/loaders.hpp"
#include "sdd/losses.hpp"
#include "sdd/mask_ops.hpp"
#include "sdd/metrics.hpp"
#include "sdd/model.hpp"
#include "sdd/synth.hpp"
#include "sdd/trainer.hpp"

namespace py = pybind11;
using namespace sdd;

namespace {

Mask mask_from_array(const py::array_t<uint8_t, py::array::c_style | py::array::forcecast>& arr) {
  if (arr.ndim() != 2) throw ArgumentError("mask must be a 2D uint8 array");
  Mask m(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)));
  const uint8_t* src = arr.data();
  for (size_t i = 0; i < m.size(); ++i) m.data[i] = src[i] ? 1 : 0;
  return m;
}

py::array_t<uint8_t> mask_to_array(const Mask& m) {
  py::array_t<uint8_t> arr({m.h, m.w});
  std::copy(m.data.begin(), m.data.end(), arr.mutable_data());
  return arr;
}

Image image_from_array(const py::array_t<float, py::array::c_style | py::array::forcecast>& arr) {
  if (arr.ndim() == 2) {
    Image img(1, static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)));
    std::copy(arr.data(), arr.data() + img.size(), img.data.begin());
    return img;
  }
  if (arr.ndim() == 3) {
    Image img(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(2)));
    std::copy(arr.data(), arr.data() + img.size(), img.data.begin());
    return img;
  }
  throw ArgumentError("image must be (H,W) or (C,H,W) float32");
}

py::array_t<float> image_to_array(const Image& img) {
  if (img.c == 1) {
    py::array_t<float> arr({img.h, img.w});
    std::copy(img.data.begin(), img.data.end(), arr.mutable_data());
    return arr;
  }
  py::array_t<float> arr({img.c, img.h, img.w});
  std::copy(img.data.begin(), img.data.end(), arr.mutable_data());
  return arr;
}

py::array_t<double> weights_to_array(const Tensor<double>& t) {
  py::array_t<double> arr({t.h, t.w});
  std::copy(t.data.begin(), t.data.end(), arr.mutable_data());
  return arr;
}

Tensor<double> weights_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
  if (arr.ndim() != 2) throw ArgumentError("weights must be a 2D float64 array");
  Tensor<double> t(1, static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)));
  std::copy(arr.data(), arr.data() + t.size(), t.data.begin());
  return t;
}

Hyperparams hp_from_kwargs(const py::dict& kw) {
  Hyperparams hp;
  if (kw.contains("preset"))
    hp = preset_hyperparams(kw["preset"].cast<std::string>(),
                            kw.contains("n_all") ? kw["n_all"].cast<int>() : -1);
  auto set_if = [&](const char* key, auto& field) {
    if (kw.contains(key)) field = kw[key].cast<std::decay_t<decltype(field)>>();
  };
  set_if("n_ep", hp.n_ep);
  set_if("eta", hp.eta);
  set_if("batch_size", hp.batch_size);
  set_if("delta", hp.delta);
  set_if("w_pos", hp.w_pos);
  set_if("p", hp.p);
  set_if("dilation_kernel", hp.dilation_kernel);
  set_if("dynamic_balancing", hp.dynamic_balancing);
  set_if("stop_gradient_flow", hp.stop_gradient_flow);
  set_if("distance_transform", hp.distance_transform);
  set_if("batch_norm", hp.batch_norm);
  set_if("seed", hp.seed);
  return hp;
}

}  // namespace

PYBIND11_MODULE(_sdd, m) {
  m.doc() = "surface-defect detection: two-head model, supervision-aware losses, metrics";

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<ArgumentError>(m, "ArgumentError");
  py::register_exception<IoError>(m, "IoError");
  py::register_exception<MetricError>(m, "MetricError");
  py::register_exception<DivergenceError>(m, "DivergenceError");

  py::enum_<SupervisionTier>(m, "SupervisionTier")
      .value("NEGATIVE", SupervisionTier::kNegative)
      .value("POSITIVE_PIXEL_LABELED", SupervisionTier::kPositivePixelLabeled)
      .value("POSITIVE_WEAK", SupervisionTier::kPositiveWeak);

  m.def("lambda_schedule", &lambda_schedule, py::arg("n"), py::arg("n_ep"), py::arg("dynamic_balancing") = true,
        py::arg("fallback_lambda") = 0.5);
  m.def("gamma_indicator", &gamma_indicator, py::arg("tier"));
  m.def("total_loss", &total_loss, py::arg("seg_loss"), py::arg("cls_loss"), py::arg("lambda_"), py::arg("gamma"),
        py::arg("delta"));
  m.def("classification_loss", &classification_loss, py::arg("cls_logit"), py::arg("label"));
  m.def(
      "segmentation_loss",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& logits,
         const py::array_t<uint8_t, py::array::c_style | py::array::forcecast>& target,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& weights) {
        Tensor<double> z = weights_from_array(logits);
        return segmentation_loss(z, mask_from_array(target), weights_from_array(weights));
      },
      py::arg("seg_logits"), py::arg("target"), py::arg("weights"));

  m.def(
      "dilate_mask",
      [](const py::array_t<uint8_t, py::array::c_style | py::array::forcecast>& mask, int kernel) {
        return mask_to_array(dilate_mask(mask_from_array(mask), kernel));
      },
      py::arg("mask"), py::arg("kernel"));
  m.def(
      "distance_weight_mask",
      [](const py::array_t<uint8_t, py::array::c_style | py::array::forcecast>& mask, double w_pos, double p,
         bool per_region) {
        return weights_to_array(distance_weight_mask(mask_from_array(mask), w_pos, p, per_region));
      },
      py::arg("mask"), py::arg("w_pos"), py::arg("p"), py::arg("per_region") = true);

  m.def(
      "decode_rle",
      [](const std::vector<std::pair<int64_t, int64_t>>& runs, int height, int width) {
        return mask_to_array(decode_rle(runs, height, width));
      },
      py::arg("runs"), py::arg("height"), py::arg("width"));
  m.def(
      "encode_rle",
      [](const py::array_t<uint8_t, py::array::c_style | py::array::forcecast>& mask) {
        return encode_rle(mask_from_array(mask));
      },
      py::arg("mask"));
  m.def(
      "ellipse_to_mask",
      [](double cx, double cy, double a, double b, double rot, int h, int w) {
        return mask_to_array(ellipse_to_mask(cx, cy, a, b, rot, h, w));
      },
      py::arg("center_x"), py::arg("center_y"), py::arg("semi_major"), py::arg("semi_minor"), py::arg("rotation"),
      py::arg("height"), py::arg("width"));

  m.def("average_precision",
        [](const std::vector<double>& s, const std::vector<int>& y) { return average_precision(s, y); });
  m.def("roc_auc", [](const std::vector<double>& s, const std::vector<int>& y) { return roc_auc(s, y); });
  m.def(
      "threshold_metrics",
      [](const std::vector<double>& s, const std::vector<int>& y, double thr) {
        ThresholdMetrics tm = threshold_metrics(s, y, thr);
        py::dict d;
        d["tp"] = tm.tp;
        d["tn"] = tm.tn;
        d["fp"] = tm.fp;
        d["fn"] = tm.fn;
        d["ca"] = tm.ca;
        d["f1"] = tm.f1;
        d["macc"] = tm.macc;
        return d;
      },
      py::arg("scores"), py::arg("labels"), py::arg("threshold"));
  m.def("best_f1_threshold",
        [](const std::vector<double>& s, const std::vector<int>& y) { return best_f1_threshold(s, y); });

  m.def(
      "generate_background",
      [](uint64_t seed, int h, int w, double texture) {
        return image_to_array(synth::generate_background_textured(seed, h, w, texture));
      },
      py::arg("seed"), py::arg("height"), py::arg("width"), py::arg("texture_amplitude") = 0.25);
  m.def(
      "inject_defect",
      [](const py::array_t<float, py::array::c_style | py::array::forcecast>& image, const py::dict& kw,
         uint64_t seed) {
        synth::DefectSpec spec;
        std::string kind = kw.contains("kind") ? kw["kind"].cast<std::string>() : "scratch";
        spec.kind = kind == "blob" ? synth::DefectKind::kBlob : synth::DefectKind::kScratch;
        if (kw.contains("contrast")) spec.contrast = kw["contrast"].cast<double>();
        if (kw.contains("thickness")) spec.thickness = kw["thickness"].cast<double>();
        if (kw.contains("length")) spec.length = kw["length"].cast<double>();
        if (kw.contains("orientation")) spec.orientation = kw["orientation"].cast<double>();
        if (kw.contains("center_y")) spec.center_y = kw["center_y"].cast<double>();
        if (kw.contains("center_x")) spec.center_x = kw["center_x"].cast<double>();
        auto [img, mask] = synth::inject_defect(image_from_array(image), spec, seed);
        return py::make_tuple(image_to_array(img), mask_to_array(mask));
      },
      py::arg("image"), py::arg("spec"), py::arg("seed") = 0);
  m.def(
      "generate_benchmark",
      [](const std::filesystem::path& out, const py::dict& kw) {
        synth::SynthConfig cfg;
        auto set_if = [&](const char* key, auto& field) {
          if (kw.contains(key)) field = kw[key].cast<std::decay_t<decltype(field)>>();
        };
        std::string tier = kw.contains("tier") ? kw["tier"].cast<std::string>() : "easy";
        cfg = tier == "hard" ? synth::SynthConfig::hard_tier() : synth::SynthConfig::easy_tier();
        set_if("height", cfg.height);
        set_if("width", cfg.width);
        set_if("train_positives", cfg.train_positives);
        set_if("train_negatives", cfg.train_negatives);
        set_if("test_positives", cfg.test_positives);
        set_if("test_negatives", cfg.test_negatives);
        set_if("contrast_lo", cfg.contrast_lo);
        set_if("contrast_hi", cfg.contrast_hi);
        set_if("texture_amplitude", cfg.texture_amplitude);
        set_if("seed", cfg.seed);
        return py::module_::import("json").attr("loads")(synth::generate_benchmark(cfg, out).dump());
      },
      py::arg("out"), py::arg("config") = py::dict());

  py::class_<SegClsModel<float>>(m, "Model")
      .def(py::init([](int channels, int height, int width, bool stop_gradient_flow, bool batch_norm, uint64_t seed) {
             return SegClsModel<float>(ModelConfig{.input_channels = channels,
                                                   .input_height = height,
                                                   .input_width = width,
                                                   .stop_gradient_flow = stop_gradient_flow,
                                                   .batch_norm = batch_norm,
                                                   .init_seed = seed});
           }),
           py::arg("channels"), py::arg("height"), py::arg("width"), py::arg("stop_gradient_flow") = true,
           py::arg("batch_norm") = true, py::arg("seed") = 0)
      .def_property_readonly("descriptor_size", &SegClsModel<float>::descriptor_size)
      .def_property_readonly("classification_input_channels", &SegClsModel<float>::classification_input_channels)
      .def("forward",
           [](SegClsModel<float>& self, const py::array_t<float, py::array::c_style | py::array::forcecast>& image) {
             auto out = self.forward(image_from_array(image), /*train=*/false);
             py::dict d;
             d["seg_logits"] = image_to_array(out.seg_logits);
             d["cls_logit"] = static_cast<double>(out.cls_logit);
             d["score"] = sigmoid(static_cast<double>(out.cls_logit));
             return d;
           })
      .def("score",
           [](SegClsModel<float>& self, const py::array_t<float, py::array::c_style | py::array::forcecast>& image) {
             return score_image(self, image_from_array(image));
           })
      .def("save", [](SegClsModel<float>& self, const std::filesystem::path& p) { save_checkpoint(self, p); })
      .def_static("load", [](const std::filesystem::path& p) { return load_checkpoint<float>(p); });

  m.def(
      "train_model",
      [](SegClsModel<float>& model, const std::string& dataset, const std::filesystem::path& root,
         const std::string& subset, int n_labeled, const py::dict& hp_kwargs) {
        Hyperparams hp = hp_from_kwargs(hp_kwargs);
        LoadOptions opt;
        opt.subset = subset;
        DatasetSplit split = load_dataset(parse_dataset_format(dataset), root, opt);
        if (n_labeled >= 0) split = assign_supervision(std::move(split), n_labeled, hp.seed);
        TrainHistory h = train(model, split, hp);
        py::list out;
        for (const EpochRecord& r : h.epochs) {
          py::dict d;
          d["epoch"] = r.epoch;
          d["lambda"] = r.lambda;
          d["seg_loss"] = r.seg_loss;
          d["cls_loss"] = r.cls_loss;
          d["total_loss"] = r.total_loss;
          out.append(d);
        }
        return out;
      },
      py::arg("model"), py::arg("dataset"), py::arg("root"), py::arg("subset") = "train", py::arg("n_labeled") = -1,
      py::arg("hyperparams") = py::dict());

  m.def(
      "evaluate_dataset",
      [](SegClsModel<float>& model, const std::string& dataset, const std::filesystem::path& root,
         const std::string& subset, const std::string& threshold) {
        LoadOptions opt;
        opt.subset = subset;
        DatasetSplit split = load_dataset(parse_dataset_format(dataset), root, opt);
        ThresholdPolicy pol =
            threshold == "best" ? ThresholdPolicy::best_f1() : ThresholdPolicy::fixed(std::stod(threshold));
        EvalReport rep = evaluate_split(model, split, pol);
        py::dict d;
        d["ap"] = rep.ap;
        d["auc"] = rep.auc;
        d["threshold"] = rep.threshold;
        d["ca"] = rep.ca;
        d["f1"] = rep.f1;
        d["macc"] = rep.macc;
        d["fp"] = rep.fp;
        d["fn"] = rep.fn;
        d["best_f1"] = rep.best_f1;
        py::list rows;
        for (const ScoredRow& r : rep.rows) rows.append(py::make_tuple(r.id, r.score, r.label));
        d["rows"] = rows;
        return d;
      },
      py::arg("model"), py::arg("dataset"), py::arg("root"), py::arg("subset") = "test", py::arg("threshold") = "0.5");
}
