#pragma once

#include <filesystem>
#include <string>

#include "sdd/dataset.hpp"

namespace sdd {

enum class DatasetFormat { kDagm, kKsdd, kKsdd2, kSeverstal, kSynth };

DatasetFormat parse_dataset_format(const std::string& name);
std::string dataset_format_name(DatasetFormat f);

struct LoadOptions {
  std::string subset = "train";  // KSDD2 / SYNTH / Severstal subsets
  int channels = 0;              // 0 keeps the file's channel count
  int resize_height = 0;         // 0 keeps the native extent
  int resize_width = 0;
  int pad_multiple = 64;         // 0 disables padding
};

// Format layouts:
//   DAGM      <root>/<class_dir>/ images + labels.txt rows of
//             "<filename> <semi_major> <semi_minor> <rotation> <cx> <cy>"
//   KSDD      <root>/<item_dir>/ images, each with a <stem>_label.<ext> mask
//   KSDD2     <root>/{train,test}/ image files paired with <id>_GT.<ext>
//   SEVERSTAL <root>/images/ + one CSV of (image id, class id, RLE string);
//             keeps every negative and the class-3 positives only
//   SYNTH     layout written by synth::generate_benchmark
DatasetSplit load_dataset(DatasetFormat format, const std::filesystem::path& root, const LoadOptions& options = {});

}  // namespace sdd
