#include "sdd/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "sdd/errors.hpp"
#include "sdd/image_io.hpp"
#include "sdd/rng.hpp"

namespace sdd::synth {

void SynthConfig::validate() const {
  if (height < 8 || width < 8 || height % 8 || width % 8)
    throw ArgumentError("synth: image extents must be multiples of 8");
  if (train_positives < 1 || train_negatives < 1 || test_positives < 1 || test_negatives < 1)
    throw ArgumentError("synth: every subset needs at least one sample");
  if (!(contrast_lo > 0.0) || contrast_hi > 1.0 || contrast_lo > contrast_hi)
    throw ArgumentError("synth: contrast range must satisfy 0 < lo <= hi <= 1");
  if (texture_amplitude < 0.0 || texture_amplitude > 1.0)
    throw ArgumentError("synth: texture amplitude outside [0,1]");
}

SynthConfig SynthConfig::easy_tier() {
  SynthConfig c;
  c.contrast_lo = 0.5;
  c.contrast_hi = 0.9;
  c.texture_amplitude = 0.25;
  return c;
}

SynthConfig SynthConfig::hard_tier() {
  SynthConfig c;
  c.contrast_lo = 0.1;
  c.contrast_hi = 0.29;
  c.texture_amplitude = 0.42;
  return c;
}

namespace {

// one octave of bilinear value noise with `cell`-pixel lattice spacing
void add_noise_octave(Image& img, Rng& rng, int cell, float amplitude) {
  int gh = img.h / cell + 2, gw = img.w / cell + 2;
  std::vector<float> grid(static_cast<size_t>(gh) * gw);
  for (auto& v : grid) v = static_cast<float>(rng.uniform() - 0.5);
  for (int y = 0; y < img.h; ++y) {
    float fy = static_cast<float>(y) / cell;
    int y0 = static_cast<int>(fy);
    float ty = fy - y0;
    for (int x = 0; x < img.w; ++x) {
      float fx = static_cast<float>(x) / cell;
      int x0 = static_cast<int>(fx);
      float tx = fx - x0;
      float a = grid[static_cast<size_t>(y0) * gw + x0];
      float b = grid[static_cast<size_t>(y0) * gw + x0 + 1];
      float c = grid[static_cast<size_t>(y0 + 1) * gw + x0];
      float d = grid[static_cast<size_t>(y0 + 1) * gw + x0 + 1];
      float v = a + (b - a) * tx + (c - a) * ty + (a - b - c + d) * tx * ty;
      img.data[static_cast<size_t>(y) * img.w + x] += amplitude * v;
    }
  }
}

}  // namespace

Image generate_background(uint64_t seed, int height, int width) {
  return generate_background_textured(seed, height, width, 0.25);
}

Image generate_background_textured(uint64_t seed, int height, int width, double texture_amplitude) {
  Rng rng(derive_seed(seed, /*stream=*/0xB6));
  Image img(1, height, width, 0.5f);
  float amp = static_cast<float>(texture_amplitude);
  add_noise_octave(img, rng, std::max(8, height / 4), 1.0f * amp);
  add_noise_octave(img, rng, std::max(4, height / 10), 0.55f * amp);
  add_noise_octave(img, rng, 3, 0.3f * amp);
  for (auto& v : img.data) v = std::clamp(v, 0.0f, 1.0f);
  return img;
}

std::pair<Image, Mask> inject_defect(const Image& image, const DefectSpec& spec, uint64_t seed) {
  if (image.c != 1) throw ArgumentError("inject_defect: grayscale surfaces only");
  if (!(spec.contrast > 0.0) || spec.contrast > 1.0) throw ArgumentError("inject_defect: contrast outside (0,1]");

  const int h = image.h, w = image.w;
  const double cy = spec.center_y, cx = spec.center_x;
  double ex0, ey0, ex1, ey1;  // scratch endpoints
  double support;             // distance at which the profile reaches zero
  if (spec.kind == DefectKind::kScratch) {
    if (spec.thickness < 1.0 || spec.length < 2.0) throw ArgumentError("inject_defect: degenerate scratch");
    double dx = std::cos(spec.orientation) * spec.length / 2.0;
    double dy = std::sin(spec.orientation) * spec.length / 2.0;
    ex0 = cx - dx;
    ey0 = cy - dy;
    ex1 = cx + dx;
    ey1 = cy + dy;
    support = spec.thickness / 2.0 + 0.25;
    for (double px : {ex0, ex1})
      if (px < 0 || px > w - 1) throw ArgumentError("inject_defect: scratch leaves the image");
    for (double py : {ey0, ey1})
      if (py < 0 || py > h - 1) throw ArgumentError("inject_defect: scratch leaves the image");
  } else {
    if (spec.thickness < 1.5) throw ArgumentError("inject_defect: blob radius too small");
    ex0 = ex1 = cx;
    ey0 = ey1 = cy;
    support = spec.thickness;
    if (cx < 0 || cx > w - 1 || cy < 0 || cy > h - 1)
      throw ArgumentError("inject_defect: blob center outside the image");
  }

  // profile: 1 in the core, linear fade to 0 at the support boundary
  const double fade = spec.kind == DefectKind::kScratch ? 0.25 : std::max(1.0, support * 0.4);
  const double vx = ex1 - ex0, vy = ey1 - ey0;
  const double vv = vx * vx + vy * vy;

  Image out = image;
  Mask mask(h, w);
  const int y0 = std::max(0, static_cast<int>(std::floor(std::min(ey0, ey1) - support - 1)));
  const int y1 = std::min(h - 1, static_cast<int>(std::ceil(std::max(ey0, ey1) + support + 1)));
  const int x0 = std::max(0, static_cast<int>(std::floor(std::min(ex0, ex1) - support - 1)));
  const int x1 = std::min(w - 1, static_cast<int>(std::ceil(std::max(ex0, ex1) + support + 1)));

  // choose the sign with the most headroom over the covered surface
  double mean = 0;
  int cnt = 0;
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      mean += image.at(0, y, x);
      ++cnt;
    }
  mean = cnt ? mean / cnt : 0.5;
  Rng rng(derive_seed(seed, /*stream=*/0xDEF));
  double sign = mean < 0.5 ? 1.0 : -1.0;
  if (std::abs(mean - 0.5) < 0.04) sign = rng.uniform() < 0.5 ? 1.0 : -1.0;

  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      double dist;
      if (vv > 0) {
        double t = std::clamp(((x - ex0) * vx + (y - ey0) * vy) / vv, 0.0, 1.0);
        dist = std::hypot(x - (ex0 + t * vx), y - (ey0 + t * vy));
      } else {
        dist = std::hypot(x - ex0, y - ey0);
      }
      double d = std::clamp((support - dist) / fade, 0.0, 1.0);
      if (d <= 0.0) continue;
      mask.at(y, x) = 1;
      float& px = out.at(0, y, x);
      px = std::clamp(px + static_cast<float>(sign * spec.contrast * d), 0.0f, 1.0f);
    }
  }
  if (!mask.any()) throw ArgumentError("inject_defect: geometry touched no pixel");
  return {std::move(out), std::move(mask)};
}

namespace {

DefectSpec draw_spec(const SynthConfig& cfg, Rng& rng) {
  DefectSpec s;
  s.kind = rng.uniform() < 0.6 ? DefectKind::kScratch : DefectKind::kBlob;
  s.contrast = rng.uniform(cfg.contrast_lo, cfg.contrast_hi);
  const double m = std::min(cfg.height, cfg.width);
  if (s.kind == DefectKind::kScratch) {
    s.length = rng.uniform(0.14, 0.34) * m;
    s.thickness = rng.uniform(1.0, 2.2);
    s.orientation = rng.uniform(0.0, 3.14159265358979);
    double margin = s.length / 2.0 + s.thickness + 2.0;
    s.center_y = rng.uniform(margin, cfg.height - 1 - margin);
    s.center_x = rng.uniform(margin, cfg.width - 1 - margin);
  } else {
    s.thickness = rng.uniform(0.02, 0.045) * m + 1.5;  // blob radius
    double margin = s.thickness + 2.0;
    s.center_y = rng.uniform(margin, cfg.height - 1 - margin);
    s.center_x = rng.uniform(margin, cfg.width - 1 - margin);
  }
  return s;
}

nlohmann::json spec_to_json(const DefectSpec& s) {
  return {{"kind", s.kind == DefectKind::kScratch ? "scratch" : "blob"},
          {"contrast", s.contrast},
          {"thickness", s.thickness},
          {"length", s.length},
          {"orientation", s.orientation},
          {"center_y", s.center_y},
          {"center_x", s.center_x}};
}

}  // namespace

nlohmann::json generate_benchmark(const SynthConfig& config, const std::filesystem::path& out) {
  namespace fs = std::filesystem;
  config.validate();

  nlohmann::json manifest;
  manifest["format"] = "sdd-synth-v1";
  manifest["seed"] = config.seed;
  manifest["height"] = config.height;
  manifest["width"] = config.width;
  manifest["contrast"] = {config.contrast_lo, config.contrast_hi};
  manifest["texture_amplitude"] = config.texture_amplitude;

  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create benchmark directory " + out.string() + ": " + ec.message());

  uint64_t counter = 0;
  for (const std::string subset : {"train", "test"}) {
    bool is_train = subset == "train";
    int npos = is_train ? config.train_positives : config.test_positives;
    int nneg = is_train ? config.train_negatives : config.test_negatives;
    fs::create_directories(out / subset / "images", ec);
    fs::create_directories(out / subset / "masks", ec);
    if (ec) throw IoError("cannot create benchmark directory under " + out.string());

    nlohmann::json entries = nlohmann::json::array();
    for (int i = 0; i < npos + nneg; ++i) {
      bool positive = i < npos;
      char id[64];
      std::snprintf(id, sizeof(id), "%s_%s_%04d", subset.c_str(), positive ? "pos" : "neg", positive ? i : i - npos);
      uint64_t sample_seed = derive_seed(config.seed, /*stream=*/0x5A, ++counter);
      Image img = generate_background_textured(sample_seed, config.height, config.width, config.texture_amplitude);
      nlohmann::json entry{{"id", id}, {"label", positive ? "positive" : "negative"}};
      if (positive) {
        Rng rng(derive_seed(sample_seed, 0xD5));
        DefectSpec spec = draw_spec(config, rng);
        auto [defected, mask] = inject_defect(img, spec, sample_seed);
        img = std::move(defected);
        save_png(out / subset / "masks" / (std::string(id) + ".png"), mask);
        entry["defect"] = spec_to_json(spec);
      }
      save_png(out / subset / "images" / (std::string(id) + ".png"), img);
      entries.push_back(std::move(entry));
    }
    manifest["samples"][subset] = std::move(entries);
    manifest["counts"][subset] = {{"positives", npos}, {"negatives", nneg}};
  }

  std::ofstream os(out / "manifest.json");
  if (!os) throw IoError("cannot write manifest under " + out.string());
  os << manifest.dump(2) << "\n";
  return manifest;
}

}  // namespace sdd::synth
