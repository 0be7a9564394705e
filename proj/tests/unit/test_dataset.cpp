#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "sdd/dataset.hpp"
#include "sdd/image_io.hpp"
#include "sdd/loaders.hpp"
#include "sdd/rng.hpp"
#include "sdd/synth.hpp"

using namespace sdd;
namespace fs = std::filesystem;

namespace {

// column-major pixel scan, independent of the library encoder
std::vector<std::pair<int64_t, int64_t>> rle_encode_oracle(const Mask& m) {
  std::vector<std::pair<int64_t, int64_t>> runs;
  int64_t pos = 0;
  for (int x = 0; x < m.w; ++x)
    for (int y = 0; y < m.h; ++y) {
      ++pos;  // 1-indexed
      if (!m.at(y, x)) continue;
      if (!runs.empty() && runs.back().first + runs.back().second == pos)
        runs.back().second++;
      else
        runs.emplace_back(pos, 1);
    }
  return runs;
}

Mask random_mask(int h, int w, double density, uint64_t seed) {
  Rng rng(seed);
  Mask m(h, w);
  for (auto& v : m.data) v = rng.uniform() < density ? 1 : 0;
  return m;
}

DatasetSplit toy_split(int npos, int nneg) {
  DatasetSplit split;
  for (int i = 0; i < npos + nneg; ++i) {
    Sample s;
    s.positive = i < npos;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%c%04d", s.positive ? 'p' : 'n', i);
    s.id = buf;
    s.image = Image(1, 8, 8, 0.5f);
    if (s.positive) {
      Mask m(8, 8);
      m.at(4, 4) = 1;
      s.pixel_mask = m;
      s.tier = SupervisionTier::kPositivePixelLabeled;
    }
    split.samples.push_back(std::move(s));
  }
  split.rebuild_index();
  return split;
}

}  // namespace

TEST_CASE("rle decoding anchors") {
  CHECK(decode_rle({}, 4, 4).count() == 0);

  Mask m = decode_rle({{1, 2}}, 2, 2);
  CHECK(m.at(0, 0) == 1);
  CHECK(m.at(1, 0) == 1);
  CHECK(m.at(0, 1) == 0);
  CHECK(m.at(1, 1) == 0);

  CHECK_THROWS_AS(decode_rle({{16, 2}}, 4, 4), IoError);
  CHECK_THROWS_AS(decode_rle({{0, 1}}, 4, 4), IoError);
}

TEST_CASE("rle decode is inverse of the oracle encoder") {
  for (uint64_t seed = 0; seed < 24; ++seed) {
    int h = 3 + static_cast<int>(seed % 7), w = 2 + static_cast<int>(seed % 5);
    Mask m = random_mask(h, w, 0.3 + 0.05 * (seed % 8), 900 + seed);
    CHECK(decode_rle(rle_encode_oracle(m), h, w) == m);
    // the library encoder agrees with the oracle
    CHECK(encode_rle(m) == rle_encode_oracle(m));
  }
}

TEST_CASE("ellipse rasterization") {
  // discrete disk of radius 2 centered in a 7x7 image has 13 pixels
  Mask disk = ellipse_to_mask(3, 3, 2, 2, 0, 7, 7);
  CHECK(disk.count() == 13);

  // brute-force point-in-ellipse over all pixels
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    double a = rng.uniform(1, 6), b = rng.uniform(1, 6), rot = rng.uniform(0, 6.28);
    double cx = rng.uniform(0, 15), cy = rng.uniform(0, 15);
    Mask got = ellipse_to_mask(cx, cy, a, b, rot, 16, 16);
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x) {
        double dx = x - cx, dy = y - cy;
        double u = (std::cos(rot) * dx + std::sin(rot) * dy) / a;
        double v = (-std::sin(rot) * dx + std::cos(rot) * dy) / b;
        bool inside = u * u + v * v <= 1.0 + 1e-9;
        CHECK(got.at(y, x) == (inside ? 1 : 0));
      }
  }

  // rotation by pi leaves any ellipse unchanged; circles ignore rotation
  Mask e0 = ellipse_to_mask(8, 7, 5, 2, 0.7, 16, 16);
  Mask e1 = ellipse_to_mask(8, 7, 5, 2, 0.7 + 3.14159265358979323846, 16, 16);
  CHECK(e0 == e1);
  CHECK(ellipse_to_mask(8, 8, 3, 3, 0, 16, 16) == ellipse_to_mask(8, 8, 3, 3, 0.785398, 16, 16));

  CHECK_THROWS_AS(ellipse_to_mask(3, 3, 0, 2, 0, 7, 7), ArgumentError);
}

TEST_CASE("supervision assignment") {
  DatasetSplit base = toy_split(8, 12);

  DatasetSplit weak = assign_supervision(base, 0, 7);
  for (int i : weak.positives) CHECK(weak.samples[i].tier == SupervisionTier::kPositiveWeak);
  CHECK(weak.n_pixel_labeled() == 0);

  DatasetSplit full = assign_supervision(base, 8, 7);
  for (int i : full.positives) CHECK(full.samples[i].tier == SupervisionTier::kPositivePixelLabeled);

  DatasetSplit a = assign_supervision(base, 3, 42), b = assign_supervision(base, 3, 42);
  for (size_t i = 0; i < a.samples.size(); ++i) CHECK(a.samples[i].tier == b.samples[i].tier);
  CHECK(a.n_pixel_labeled() == 3);

  // labels, images and masks survive untouched
  for (size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].positive == base.samples[i].positive);
    CHECK(a.samples[i].image.data == base.samples[i].image.data);
    CHECK(a.samples[i].pixel_mask.has_value() == base.samples[i].pixel_mask.has_value());
  }
  for (int i : a.negatives) CHECK(a.samples[i].tier == SupervisionTier::kNegative);

  CHECK_THROWS_AS(assign_supervision(base, 9, 7), ArgumentError);
  CHECK_THROWS_AS(assign_supervision(base, -1, 7), ArgumentError);
}

TEST_CASE("balanced epoch indices") {
  DatasetSplit even = toy_split(10, 10);
  auto all = balanced_epoch_indices(even, 3, 5);
  CHECK(all.size() == 20);
  CHECK(std::set<int>(all.begin(), all.end()).size() == 20);

  DatasetSplit skew = toy_split(5, 20);
  std::set<int> negs_seen;
  for (int epoch = 0; epoch < 4; ++epoch) {
    auto idx = balanced_epoch_indices(skew, epoch, 11);
    CHECK(idx.size() == 10);
    int pos_count = 0;
    std::set<int> uniq;
    for (int i : idx) {
      uniq.insert(i);
      if (skew.samples[i].positive)
        ++pos_count;
      else
        negs_seen.insert(i);
    }
    CHECK(pos_count == 5);          // every positive exactly once
    CHECK(uniq.size() == idx.size());
  }
  CHECK(negs_seen.size() == 20);  // full negative pool within ceil(20/5) epochs

  auto x = balanced_epoch_indices(skew, 2, 11);
  auto y = balanced_epoch_indices(skew, 2, 11);
  CHECK(x == y);

  DatasetSplit no_pos = toy_split(0, 5);
  CHECK_THROWS_AS(balanced_epoch_indices(no_pos, 0, 1), ArgumentError);
}

TEST_CASE("stratified folds") {
  DatasetSplit ksdd_sized = toy_split(52, 347);
  auto folds = make_folds(ksdd_sized, 3, 9);
  REQUIRE(folds.size() == 3);
  std::multiset<std::string> test_ids;
  for (auto& f : folds) {
    CHECK(f.test.samples.size() == 133);
    CHECK(f.train.samples.size() == 266);
    // stratification within one sample of the global fraction
    double global = 52.0 / 399.0;
    double frac = static_cast<double>(f.test.positives.size()) / f.test.samples.size();
    CHECK(std::abs(frac - global) * f.test.samples.size() <= 1.0 + 1e-9);
    for (auto& s : f.test.samples) test_ids.insert(s.id);
  }
  CHECK(test_ids.size() == 399);  // every sample in exactly one test partition
  std::set<std::string> uniq(test_ids.begin(), test_ids.end());
  CHECK(uniq.size() == 399);

  CHECK_THROWS_AS(make_folds(ksdd_sized, 1, 9), ArgumentError);
  CHECK_THROWS_AS(make_folds(toy_split(2, 10), 3, 9), ArgumentError);
}

TEST_CASE("dataset adapters load the fixture layouts") {
  fs::path root = fs::temp_directory_path() / "sdd_loader_fixtures";
  fs::remove_all(root);
  fs::create_directories(root);

  auto checkered = [](int h, int w) {
    Image img(1, h, w);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) img.at(0, y, x) = ((x + y) % 2) ? 0.75f : 0.25f;
    return img;
  };

  SUBCASE("ksdd2") {
    fs::path train = root / "ksdd2" / "train";
    fs::create_directories(train);
    save_png(train / "10001.png", checkered(32, 16));
    Mask gt1(32, 16);
    for (int y = 10; y < 14; ++y) gt1.at(y, 7) = 1;
    save_png(train / "10001_GT.png", gt1);
    save_png(train / "10002.png", checkered(32, 16));
    save_png(train / "10002_GT.png", Mask(32, 16));

    LoadOptions opt;
    opt.subset = "train";
    opt.pad_multiple = 8;
    auto split = load_dataset(DatasetFormat::kKsdd2, root / "ksdd2", opt);
    CHECK(split.samples.size() == 2);
    CHECK(split.positives.size() == 1);
    CHECK(split.negatives.size() == 1);
    CHECK(split.samples[0].id == "10001");
    CHECK(split.samples[0].pixel_mask->count() == 4);

    fs::remove(train / "10002_GT.png");
    CHECK_THROWS_AS(load_dataset(DatasetFormat::kKsdd2, root / "ksdd2", opt), IoError);
  }

  SUBCASE("dagm with ellipse labels") {
    fs::path cls = root / "dagm" / "Class1";
    fs::create_directories(cls);
    save_png(cls / "0001.png", checkered(32, 32));
    save_png(cls / "0002.png", checkered(32, 32));
    {
      std::ofstream os(cls / "labels.txt");
      os << "0001.png 5 3 0.5 16 16\n";
    }
    LoadOptions opt;
    opt.pad_multiple = 8;
    auto split = load_dataset(DatasetFormat::kDagm, root / "dagm", opt);
    CHECK(split.samples.size() == 2);
    CHECK(split.positives.size() == 1);
    Mask expect = ellipse_to_mask(16, 16, 5, 3, 0.5, 32, 32);
    CHECK(*split.samples[0].pixel_mask == expect);

    {
      std::ofstream os(cls / "labels.txt", std::ios::app);
      os << "0002.png not-a-number\n";
    }
    CHECK_THROWS_AS(load_dataset(DatasetFormat::kDagm, root / "dagm", opt), IoError);
  }

  SUBCASE("ksdd item directories") {
    fs::path item = root / "ksdd" / "kos01";
    fs::create_directories(item);
    save_png(item / "Part0.png", checkered(40, 16));
    Mask lbl(40, 16);
    lbl.at(20, 8) = 1;
    save_png(item / "Part0_label.png", lbl);
    save_png(item / "Part1.png", checkered(40, 16));
    save_png(item / "Part1_label.png", Mask(40, 16));

    LoadOptions opt;
    opt.pad_multiple = 8;
    auto split = load_dataset(DatasetFormat::kKsdd, root / "ksdd", opt);
    CHECK(split.samples.size() == 2);
    CHECK(split.positives.size() == 1);
    CHECK(split.samples[0].id == "kos01/Part0");

    fs::remove(item / "Part1_label.png");
    CHECK_THROWS_AS(load_dataset(DatasetFormat::kKsdd, root / "ksdd", opt), IoError);
  }

  SUBCASE("severstal csv with class filter") {
    fs::path sroot = root / "severstal";
    fs::create_directories(sroot / "images");
    save_png(sroot / "images" / "a.png", checkered(16, 16));  // negative
    save_png(sroot / "images" / "b.png", checkered(16, 16));  // class 3 positive
    save_png(sroot / "images" / "c.png", checkered(16, 16));  // class 1 only: dropped
    Mask bmask = random_mask(16, 16, 0.2, 3);
    if (!bmask.any()) bmask.at(5, 5) = 1;
    std::string rle;
    for (auto [s, l] : encode_rle(bmask)) rle += std::to_string(s) + " " + std::to_string(l) + " ";
    rle.pop_back();
    {
      std::ofstream os(sroot / "train.csv");
      os << "ImageId,ClassId,EncodedPixels\n";
      os << "b.png,3," << rle << "\n";
      os << "c.png,1,1 4\n";
    }
    LoadOptions opt;
    opt.pad_multiple = 8;
    auto split = load_dataset(DatasetFormat::kSeverstal, sroot, opt);
    CHECK(split.samples.size() == 2);  // c.png dropped
    CHECK(split.positives.size() == 1);
    CHECK(split.samples[1].id == "b");
    CHECK(*split.samples[1].pixel_mask == bmask);

    {
      std::ofstream os(sroot / "train.csv", std::ios::app);
      os << "b.png,threeish,1 2\n";
    }
    CHECK_THROWS_AS(load_dataset(DatasetFormat::kSeverstal, sroot, opt), IoError);
  }

  SUBCASE("padding is recorded and applied to masks") {
    fs::path train = root / "pad" / "train";
    fs::create_directories(train);
    save_png(train / "x.png", checkered(100, 60));
    Mask gt(100, 60);
    gt.at(99, 59) = 1;
    save_png(train / "x_GT.png", gt);
    LoadOptions opt;
    opt.subset = "train";
    opt.pad_multiple = 64;
    auto split = load_dataset(DatasetFormat::kKsdd2, root / "pad", opt);
    REQUIRE(split.samples.size() == 1);
    const Sample& s = split.samples[0];
    CHECK(s.image.h == 128);
    CHECK(s.image.w == 64);
    CHECK(s.pad_bottom == 28);
    CHECK(s.pad_right == 4);
    CHECK(s.pixel_mask->h == 128);
    CHECK(s.pixel_mask->at(99, 59) == 1);
    CHECK(s.image.at(0, 120, 10) == 0.0f);  // zero padding
  }

  fs::remove_all(root);
}

TEST_CASE("dataset format names") {
  CHECK(parse_dataset_format("KSDD2") == DatasetFormat::kKsdd2);
  CHECK(parse_dataset_format("synth") == DatasetFormat::kSynth);
  CHECK_THROWS_AS(parse_dataset_format("mnist"), ArgumentError);
  CHECK(dataset_format_name(DatasetFormat::kSeverstal) == "severstal");
}

TEST_CASE("image resize stays in range and masks survive shrinking") {
  Image img(1, 16, 8);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 8; ++x) img.at(0, y, x) = (y * 8 + x) / 127.0f;
  Image small = resize_image(img, 4, 4);
  CHECK(small.h == 4);
  CHECK(small.w == 4);
  for (float v : small.data) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
  // rows average upward along y, so the resized column must too
  CHECK(small.at(0, 0, 0) < small.at(0, 3, 0));
  Image up = resize_image(small, 8, 8);
  CHECK(up.h == 8);

  Mask thin(16, 16);
  for (int x = 0; x < 16; ++x) thin.at(7, x) = 1;  // one-pixel line
  Mask shrunk = resize_mask(thin, 4, 4);
  size_t covered = 0;
  for (int x = 0; x < 4; ++x) covered += shrunk.at(1, x);
  CHECK(covered == 4);  // the line cannot vanish
}
