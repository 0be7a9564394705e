#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>

#include <json.hpp>

#include "sdd/image.hpp"
#include "sdd/tensor.hpp"

namespace sdd::synth {

enum class DefectKind { kScratch, kBlob };

struct DefectSpec {
  DefectKind kind = DefectKind::kScratch;
  double contrast = 0.5;     // (0,1]: peak intensity offset against the surface
  double thickness = 1.0;    // scratch half-profile; blob radius for kBlob
  double length = 20.0;      // scratch extent, unused for blobs
  double orientation = 0.0;  // radians
  double center_y = 0.0, center_x = 0.0;
};

struct SynthConfig {
  int height = 128, width = 128;
  int train_positives = 40, train_negatives = 200;
  int test_positives = 20, test_negatives = 100;
  double contrast_lo = 0.5, contrast_hi = 0.9;
  double texture_amplitude = 0.25;  // background roughness
  uint64_t seed = 0;

  void validate() const;

  // difficulty tiers used by the benchmark experiments
  static SynthConfig easy_tier();
  static SynthConfig hard_tier();
};

// Band-limited value noise, deterministic in the seed, values in [0,1].
Image generate_background(uint64_t seed, int height, int width);
Image generate_background_textured(uint64_t seed, int height, int width, double texture_amplitude);

// Blends the defect into the image and returns the touched-pixel mask. The
// peak intensity change equals spec.contrast (before clamping to [0,1]); the
// sign runs toward the farther intensity bound of the covered surface.
std::pair<Image, Mask> inject_defect(const Image& image, const DefectSpec& spec, uint64_t seed);

// Writes the directory layout consumed by the SYNTH dataset adapter:
// <out>/{train,test}/{images,masks}/*.png plus <out>/manifest.json.
// Returns the manifest. Regeneration with the same config is byte-identical.
nlohmann::json generate_benchmark(const SynthConfig& config, const std::filesystem::path& out);

}  // namespace sdd::synth
