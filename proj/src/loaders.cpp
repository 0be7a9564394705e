#include "sdd/loaders.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "sdd/errors.hpp"
#include "sdd/image_io.hpp"

namespace sdd {

namespace fs = std::filesystem;

DatasetFormat parse_dataset_format(const std::string& name) {
  std::string n = name;
  std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return std::tolower(c); });
  if (n == "dagm") return DatasetFormat::kDagm;
  if (n == "ksdd") return DatasetFormat::kKsdd;
  if (n == "ksdd2") return DatasetFormat::kKsdd2;
  if (n == "severstal") return DatasetFormat::kSeverstal;
  if (n == "synth") return DatasetFormat::kSynth;
  throw ArgumentError("unknown dataset format '" + name + "'");
}

std::string dataset_format_name(DatasetFormat f) {
  switch (f) {
    case DatasetFormat::kDagm: return "dagm";
    case DatasetFormat::kKsdd: return "ksdd";
    case DatasetFormat::kKsdd2: return "ksdd2";
    case DatasetFormat::kSeverstal: return "severstal";
    case DatasetFormat::kSynth: return "synth";
  }
  return "?";
}

namespace {

bool is_image_file(const fs::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e == ".png" || e == ".jpg" || e == ".jpeg" || e == ".bmp" || e == ".pgm" || e == ".ppm" || e == ".pnm";
}

// resize / channel conversion / padding shared by every adapter
void finalize_sample(Sample& s, const LoadOptions& opt) {
  if (opt.channels) s.image = to_channels(s.image, opt.channels);
  if (opt.resize_height && opt.resize_width) {
    s.image = resize_image(s.image, opt.resize_height, opt.resize_width);
    if (s.pixel_mask) *s.pixel_mask = resize_mask(*s.pixel_mask, opt.resize_height, opt.resize_width);
  }
  if (opt.pad_multiple > 1) {
    s.image = pad_to_multiple(s.image, opt.pad_multiple, &s.pad_bottom, &s.pad_right);
    if (s.pixel_mask) *s.pixel_mask = pad_to_multiple(*s.pixel_mask, opt.pad_multiple);
  }
  if (s.pixel_mask && (s.pixel_mask->h != s.image.h || s.pixel_mask->w != s.image.w))
    throw IoError("mask extent does not match image for sample '" + s.id + "'");
  s.tier = s.positive ? SupervisionTier::kPositivePixelLabeled : SupervisionTier::kNegative;
  if (s.positive && s.pixel_mask && !s.pixel_mask->any())
    throw IoError("positive sample '" + s.id + "' has an empty mask");
}

void sort_and_index(DatasetSplit& split) {
  std::sort(split.samples.begin(), split.samples.end(), [](const Sample& a, const Sample& b) { return a.id < b.id; });
  split.rebuild_index();
}

DatasetSplit load_dagm(const fs::path& root, const LoadOptions& opt) {
  DatasetSplit split;
  bool found_class = false;
  std::vector<fs::path> class_dirs;
  for (auto& e : fs::directory_iterator(root))
    if (e.is_directory()) class_dirs.push_back(e.path());
  std::sort(class_dirs.begin(), class_dirs.end());
  for (const auto& dir : class_dirs) {
    fs::path labels = dir / "labels.txt";
    if (!fs::exists(labels)) throw IoError("missing annotation file " + labels.string());
    found_class = true;

    struct EllipseRec {
      double a, b, rot, cx, cy;
    };
    std::map<std::string, EllipseRec> defects;
    std::ifstream is(labels);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ls(line);
      std::string fname;
      EllipseRec r{};
      if (!(ls >> fname >> r.a >> r.b >> r.rot >> r.cx >> r.cy))
        throw IoError("malformed label line " + std::to_string(lineno) + " in " + labels.string());
      defects[fname] = r;
    }

    for (auto& e : fs::directory_iterator(dir)) {
      if (!e.is_regular_file() || !is_image_file(e.path())) continue;
      Sample s;
      s.id = dir.filename().string() + "/" + e.path().filename().string();
      s.image = load_image(e.path());
      auto it = defects.find(e.path().filename().string());
      if (it != defects.end()) {
        s.positive = true;
        s.pixel_mask = ellipse_to_mask(it->second.cx, it->second.cy, it->second.a, it->second.b, it->second.rot,
                                       s.image.h, s.image.w);
      }
      finalize_sample(s, opt);
      split.samples.push_back(std::move(s));
    }
  }
  if (!found_class) throw IoError("no class directories under " + root.string());
  sort_and_index(split);
  return split;
}

DatasetSplit load_ksdd(const fs::path& root, const LoadOptions& opt) {
  DatasetSplit split;
  std::vector<fs::path> item_dirs;
  for (auto& e : fs::directory_iterator(root))
    if (e.is_directory()) item_dirs.push_back(e.path());
  std::sort(item_dirs.begin(), item_dirs.end());
  if (item_dirs.empty()) throw IoError("no item directories under " + root.string());
  for (const auto& dir : item_dirs) {
    for (auto& e : fs::directory_iterator(dir)) {
      if (!e.is_regular_file() || !is_image_file(e.path())) continue;
      std::string stem = e.path().stem().string();
      if (stem.size() > 6 && stem.ends_with("_label")) continue;
      fs::path mask_path;
      for (const char* ext : {".bmp", ".png", ".pgm", ".jpg"}) {
        fs::path cand = dir / (stem + "_label" + ext);
        if (fs::exists(cand)) {
          mask_path = cand;
          break;
        }
      }
      if (mask_path.empty())
        throw IoError("missing annotation file " + (dir / (stem + "_label.bmp")).string());
      Sample s;
      s.id = dir.filename().string() + "/" + stem;
      s.image = load_image(e.path());
      Mask m = load_mask(mask_path);
      if (m.any()) {
        s.positive = true;
        s.pixel_mask = std::move(m);
      }
      finalize_sample(s, opt);
      split.samples.push_back(std::move(s));
    }
  }
  sort_and_index(split);
  return split;
}

DatasetSplit load_ksdd2(const fs::path& root, const LoadOptions& opt) {
  fs::path dir = root / opt.subset;
  if (!fs::is_directory(dir)) throw IoError("missing subset directory " + dir.string());
  DatasetSplit split;
  std::vector<fs::path> images;
  for (auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file() || !is_image_file(e.path())) continue;
    if (e.path().stem().string().ends_with("_GT")) continue;
    images.push_back(e.path());
  }
  if (images.empty()) throw IoError("no images under " + dir.string());
  std::sort(images.begin(), images.end());
  for (const auto& img_path : images) {
    std::string stem = img_path.stem().string();
    fs::path mask_path;
    for (const char* ext : {".png", ".bmp", ".pgm", ".jpg"}) {
      fs::path cand = dir / (stem + "_GT" + ext);
      if (fs::exists(cand)) {
        mask_path = cand;
        break;
      }
    }
    if (mask_path.empty()) throw IoError("missing annotation file " + (dir / (stem + "_GT.png")).string());
    Sample s;
    s.id = stem;
    s.image = load_image(img_path);
    Mask m = load_mask(mask_path);
    if (m.any()) {
      s.positive = true;
      s.pixel_mask = std::move(m);
    }
    finalize_sample(s, opt);
    split.samples.push_back(std::move(s));
  }
  sort_and_index(split);
  return split;
}

std::vector<std::pair<int64_t, int64_t>> parse_rle_pairs(const std::string& text, const std::string& context) {
  std::istringstream ss(text);
  std::vector<std::pair<int64_t, int64_t>> runs;
  int64_t a, b;
  while (ss >> a) {
    if (!(ss >> b)) throw IoError("odd RLE token count in " + context);
    runs.emplace_back(a, b);
  }
  return runs;
}

// split a CSV record, honoring double quotes around the RLE column
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

DatasetSplit load_severstal(const fs::path& root, const LoadOptions& opt) {
  fs::path images_dir = root / "images";
  if (!fs::is_directory(images_dir)) throw IoError("missing images directory " + images_dir.string());
  fs::path csv;
  for (auto& e : fs::directory_iterator(root))
    if (e.is_regular_file() && e.path().extension() == ".csv") {
      if (!csv.empty()) throw IoError("multiple CSV files under " + root.string());
      csv = e.path();
    }
  if (csv.empty()) throw IoError("missing annotation CSV under " + root.string());

  std::map<std::string, std::map<int, std::string>> rows;  // image -> class -> rle
  std::ifstream is(csv);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cols = split_csv(line);
    if (cols.size() < 3) throw IoError("malformed label line " + std::to_string(lineno) + " in " + csv.string());
    if (lineno == 1 && !std::isdigit(static_cast<unsigned char>(cols[1].empty() ? 'x' : cols[1][0])))
      continue;  // header row
    int cls;
    try {
      cls = std::stoi(cols[1]);
    } catch (...) {
      throw IoError("malformed label line " + std::to_string(lineno) + " in " + csv.string());
    }
    if (!cols[2].empty()) rows[cols[0]][cls] = cols[2];
  }

  DatasetSplit split;
  std::vector<fs::path> images;
  for (auto& e : fs::directory_iterator(images_dir))
    if (e.is_regular_file() && is_image_file(e.path())) images.push_back(e.path());
  std::sort(images.begin(), images.end());
  for (const auto& img_path : images) {
    std::string fname = img_path.filename().string();
    auto it = rows.find(fname);
    bool defective = it != rows.end() && !it->second.empty();
    bool has_class3 = defective && it->second.count(3);
    if (defective && !has_class3) continue;  // positives of other defect classes are dropped
    Sample s;
    s.id = img_path.stem().string();
    s.image = load_image(img_path);
    if (has_class3) {
      s.positive = true;
      s.pixel_mask = decode_rle(parse_rle_pairs(it->second[3], csv.string() + " (" + fname + ")"), s.image.h,
                                s.image.w);
    }
    finalize_sample(s, opt);
    split.samples.push_back(std::move(s));
  }
  sort_and_index(split);
  return split;
}

DatasetSplit load_synth(const fs::path& root, const LoadOptions& opt) {
  fs::path manifest_path = root / "manifest.json";
  std::ifstream is(manifest_path);
  if (!is) throw IoError("missing manifest " + manifest_path.string());
  nlohmann::json manifest;
  try {
    is >> manifest;
  } catch (const std::exception& e) {
    throw IoError("malformed manifest " + manifest_path.string() + ": " + e.what());
  }
  if (!manifest.contains("samples") || !manifest["samples"].contains(opt.subset))
    throw IoError("manifest " + manifest_path.string() + " has no subset '" + opt.subset + "'");

  DatasetSplit split;
  for (const auto& entry : manifest["samples"][opt.subset]) {
    Sample s;
    s.id = entry.at("id").get<std::string>();
    s.positive = entry.at("label").get<std::string>() == "positive";
    fs::path img = root / opt.subset / "images" / (s.id + ".png");
    s.image = load_image(img);
    if (s.positive) s.pixel_mask = load_mask(root / opt.subset / "masks" / (s.id + ".png"));
    finalize_sample(s, opt);
    split.samples.push_back(std::move(s));
  }
  sort_and_index(split);
  return split;
}

}  // namespace

DatasetSplit load_dataset(DatasetFormat format, const fs::path& root, const LoadOptions& options) {
  if (!fs::exists(root)) throw IoError("dataset root does not exist: " + root.string());
  switch (format) {
    case DatasetFormat::kDagm: return load_dagm(root, options);
    case DatasetFormat::kKsdd: return load_ksdd(root, options);
    case DatasetFormat::kKsdd2: return load_ksdd2(root, options);
    case DatasetFormat::kSeverstal: return load_severstal(root, options);
    case DatasetFormat::kSynth: return load_synth(root, options);
  }
  throw ArgumentError("unhandled dataset format");
}

}  // namespace sdd
