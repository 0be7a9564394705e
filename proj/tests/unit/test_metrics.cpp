#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "sdd/metrics.hpp"
#include "sdd/rng.hpp"

using namespace sdd;

namespace {

// mean over positives of precision at each positive's pessimistic rank,
// counted pair-by-pair
double ap_oracle(const std::vector<double>& s, const std::vector<int>& y) {
  double sum = 0;
  int pos = 0;
  for (size_t i = 0; i < s.size(); ++i) {
    if (!y[i]) continue;
    ++pos;
    int rank = 0, tp = 0;
    for (size_t j = 0; j < s.size(); ++j) {
      if (s[j] >= s[i]) {  // ties land at the worst rank of the group
        ++rank;
        tp += (y[j] != 0);
      }
    }
    sum += static_cast<double>(tp) / rank;
  }
  return sum / pos;
}

double auc_oracle(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0;
  int64_t pairs = 0;
  for (size_t i = 0; i < s.size(); ++i) {
    if (!y[i]) continue;
    for (size_t j = 0; j < s.size(); ++j) {
      if (y[j]) continue;
      ++pairs;
      if (s[i] > s[j])
        wins += 1.0;
      else if (s[i] == s[j])
        wins += 0.5;
    }
  }
  return wins / pairs;
}

void random_instance(Rng& rng, int n, bool with_ties, std::vector<double>& s, std::vector<int>& y) {
  s.resize(n);
  y.resize(n);
  bool has_pos = false, has_neg = false;
  for (int i = 0; i < n; ++i) {
    s[i] = with_ties ? std::floor(rng.uniform() * 5) / 5.0 : rng.uniform();
    y[i] = rng.uniform() < 0.5;
    has_pos |= y[i] == 1;
    has_neg |= y[i] == 0;
  }
  if (!has_pos) y[rng.next_below(n)] = 1;
  if (!has_neg) y[rng.next_below(n)] = 0;
}

}  // namespace

TEST_CASE("average precision anchors") {
  std::vector<double> s1{0.9, 0.8, 0.1};
  std::vector<int> y1{1, 1, 0};
  CHECK(average_precision(s1, y1) == 1.0);

  std::vector<double> s2{0.9, 0.8, 0.7};
  std::vector<int> y2{1, 0, 1};
  CHECK(average_precision(s2, y2) == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0).epsilon(1e-12));

  std::vector<double> s3{0.2, 0.9, 0.5};
  std::vector<int> y3{1, 1, 1};
  CHECK(average_precision(s3, y3) == 1.0);

  std::vector<int> none{0, 0, 0};
  CHECK_THROWS_AS(average_precision(s3, none), MetricError);
  CHECK_THROWS_AS(average_precision(std::vector<double>{0.5}, std::vector<int>{1, 0}), ArgumentError);
}

TEST_CASE("roc auc anchors") {
  std::vector<double> s{0.9, 0.8, 0.2, 0.1};
  std::vector<int> y{1, 1, 0, 0};
  CHECK(roc_auc(s, y) == 1.0);

  std::vector<double> flat{0.5, 0.5, 0.5, 0.5};
  CHECK(roc_auc(flat, y) == 0.5);

  std::vector<double> s4{0.6, 0.4, 0.8, 0.1};
  std::vector<int> y4{1, 0, 0, 1};
  CHECK(roc_auc(s4, y4) == doctest::Approx(auc_oracle(s4, y4)).epsilon(1e-12));

  std::vector<int> ones{1, 1, 1, 1};
  CHECK_THROWS_AS(roc_auc(s, ones), MetricError);
}

TEST_CASE("ap and auc match exhaustive oracles") {
  Rng rng(77);
  std::vector<double> s;
  std::vector<int> y;
  for (int trial = 0; trial < 400; ++trial) {
    random_instance(rng, 2 + static_cast<int>(rng.next_below(11)), trial % 2 == 0, s, y);
    CHECK(std::abs(average_precision(s, y) - ap_oracle(s, y)) < 1e-12);
    CHECK(std::abs(roc_auc(s, y) - auc_oracle(s, y)) < 1e-12);
  }
}

TEST_CASE("ap and auc are invariant under monotone score transforms") {
  Rng rng(78);
  std::vector<double> s;
  std::vector<int> y;
  random_instance(rng, 12, false, s, y);
  std::vector<double> t(s.size());
  for (size_t i = 0; i < s.size(); ++i) t[i] = std::exp(3.0 * s[i]) + 1.0;
  CHECK(average_precision(s, y) == average_precision(t, y));
  CHECK(roc_auc(s, y) == roc_auc(t, y));
}

TEST_CASE("metrics are invariant under sample duplication") {
  Rng rng(79);
  std::vector<double> s;
  std::vector<int> y;
  random_instance(rng, 9, true, s, y);
  std::vector<double> s2 = s;
  std::vector<int> y2 = y;
  s2.insert(s2.end(), s.begin(), s.end());
  y2.insert(y2.end(), y.begin(), y.end());
  CHECK(average_precision(s, y) == doctest::Approx(average_precision(s2, y2)).epsilon(1e-12));
  CHECK(roc_auc(s, y) == doctest::Approx(roc_auc(s2, y2)).epsilon(1e-12));
  auto m1 = threshold_metrics(s, y, 0.5);
  auto m2 = threshold_metrics(s2, y2, 0.5);
  CHECK(m1.ca == doctest::Approx(m2.ca).epsilon(1e-12));
  CHECK(m1.f1 == doctest::Approx(m2.f1).epsilon(1e-12));
  CHECK(m1.macc == doctest::Approx(m2.macc).epsilon(1e-12));
}

TEST_CASE("threshold metrics") {
  // TPR = 0.8 over 10 positives, TNR = 0.9 over 10 negatives
  std::vector<double> s;
  std::vector<int> y;
  for (int i = 0; i < 10; ++i) {
    s.push_back(i < 8 ? 0.9 : 0.1);
    y.push_back(1);
  }
  for (int i = 0; i < 10; ++i) {
    s.push_back(i < 9 ? 0.1 : 0.9);
    y.push_back(0);
  }
  auto m = threshold_metrics(s, y, 0.5);
  CHECK(m.macc == doctest::Approx(0.85).epsilon(1e-12));
  CHECK(m.tp == 8);
  CHECK(m.fn == 2);
  CHECK(m.fp == 1);
  CHECK(m.tn == 9);

  // all correct
  std::vector<double> sp{0.9, 0.8, 0.1};
  std::vector<int> yp{1, 1, 0};
  auto mp = threshold_metrics(sp, yp, 0.5);
  CHECK(mp.ca == 1.0);
  CHECK(mp.f1 == 1.0);
  CHECK(mp.fp + mp.fn == 0);

  // hand-tabulated 6-item instance at threshold 0.5
  std::vector<double> s6{0.7, 0.5, 0.3, 0.9, 0.2, 0.5};
  std::vector<int> y6{1, 0, 1, 1, 0, 1};
  auto m6 = threshold_metrics(s6, y6, 0.5);
  CHECK(m6.tp == 3);  // 0.7, 0.9, 0.5(pos)
  CHECK(m6.fp == 1);  // 0.5(neg)
  CHECK(m6.fn == 1);  // 0.3
  CHECK(m6.tn == 1);  // 0.2
  CHECK(m6.ca == doctest::Approx(4.0 / 6.0).epsilon(1e-12));
  CHECK(m6.f1 == doctest::Approx(2.0 * 3 / (2.0 * 3 + 1 + 1)).epsilon(1e-12));

  // empty-class conventions
  std::vector<double> sn{0.2, 0.6};
  std::vector<int> yn{0, 0};
  CHECK(threshold_metrics(sn, yn, 0.5).macc == doctest::Approx(0.75).epsilon(1e-12));  // TPR=1
}

TEST_CASE("best F1 search dominates every candidate threshold") {
  Rng rng(80);
  std::vector<double> s;
  std::vector<int> y;
  random_instance(rng, 12, true, s, y);
  auto [best, thr] = best_f1_threshold(s, y);
  for (double cand : s) CHECK(best >= threshold_metrics(s, y, cand).f1 - 1e-12);
  CHECK(best == doctest::Approx(threshold_metrics(s, y, thr).f1).epsilon(1e-12));

  // a constant scorer forces the all-positive prediction
  std::vector<double> flat(8, 0.5);
  std::vector<int> yf{1, 0, 0, 1, 0, 0, 0, 1};
  auto [bf, bthr] = best_f1_threshold(flat, yf);
  CHECK(bf == doctest::Approx(2.0 * 3 / (2.0 * 3 + 5)).epsilon(1e-12));  // 2P/(P+total)
}

TEST_CASE("report assembly from scores") {
  std::vector<ScoredRow> rows{{"a", 0.95, 1}, {"b", 0.9, 1}, {"c", 0.2, 0}, {"d", 0.1, 0}};
  EvalReport rep = report_from_scores(rows, ThresholdPolicy::fixed(0.5));
  CHECK(rep.ap == 1.0);
  CHECK(rep.auc == 1.0);
  CHECK(rep.ca == 1.0);
  CHECK(rep.f1 == 1.0);
  CHECK(rep.fp + rep.fn == 0);
  CHECK(rep.rows.size() == 4);

  EvalReport best = report_from_scores(rows, ThresholdPolicy::best_f1());
  CHECK(best.threshold == best.best_f1_thr);
  CHECK(best.f1 == best.best_f1);
}

#include <filesystem>

#include "sdd/report.hpp"
#include "sdd/synth.hpp"
#include "sdd/trainer.hpp"

namespace {

DatasetSplit micro_split(int npos, int nneg, uint64_t seed) {
  DatasetSplit split;
  for (int i = 0; i < npos + nneg; ++i) {
    bool positive = i < npos;
    Sample s;
    s.id = (positive ? "p" : "n") + std::to_string(i);
    s.image = sdd::synth::generate_background(derive_seed(seed, 1, i), 64, 64);
    if (positive) {
      sdd::synth::DefectSpec spec;
      spec.contrast = 0.7;
      spec.thickness = 1.5;
      spec.length = 18;
      spec.orientation = 0.4 * i;
      spec.center_y = 30 + (i % 3);
      spec.center_x = 32;
      auto [img, mask] = sdd::synth::inject_defect(s.image, spec, derive_seed(seed, 2, i));
      s.image = img;
      s.pixel_mask = mask;
      s.positive = true;
      s.tier = SupervisionTier::kPositivePixelLabeled;
    }
    split.samples.push_back(std::move(s));
  }
  split.rebuild_index();
  return split;
}

Hyperparams micro_hp() {
  Hyperparams hp;
  hp.n_ep = 1;
  hp.eta = 0.01;
  hp.w_pos = 2.0;
  hp.p = 1.0;
  hp.dilation_kernel = 3;
  hp.seed = 4;
  return hp;
}

}  // namespace

TEST_CASE("evaluate_split scores every sample") {
  DatasetSplit split = micro_split(2, 3, 31);
  ModelConfig cfg{.input_channels = 1, .input_height = 64, .input_width = 64, .init_seed = 8};
  SegClsModel<float> model(cfg);
  EvalReport rep = evaluate_split(model, split, ThresholdPolicy::fixed(0.5));
  CHECK(rep.rows.size() == split.samples.size());
  CHECK(rep.ap >= 0.0);
  CHECK(rep.ap <= 1.0);
  CHECK(rep.auc >= 0.0);
  CHECK(rep.auc <= 1.0);
  for (size_t i = 0; i < rep.rows.size(); ++i) CHECK(rep.rows[i].id == split.samples[i].id);
}

TEST_CASE("crossval trains one model per fold and averages AP") {
  DatasetSplit whole = micro_split(4, 6, 33);
  auto folds = make_folds(whole, 2, 7);
  Hyperparams hp = micro_hp();
  auto builder = [&](int fold) {
    return SegClsModel<float>(ModelConfig{.input_channels = 1,
                                          .input_height = 64,
                                          .input_width = 64,
                                          .init_seed = derive_seed(3, 0, static_cast<uint64_t>(fold))});
  };
  CrossvalResult a = crossval(builder, folds, hp);
  CrossvalResult b = crossval(builder, folds, hp);
  REQUIRE(a.fold_reports.size() == 2);
  CHECK(a.fold_reports[0].ap == b.fold_reports[0].ap);  // determinism
  CHECK(a.fold_reports[1].ap == b.fold_reports[1].ap);
  CHECK(a.mean_ap == doctest::Approx((a.fold_reports[0].ap + a.fold_reports[1].ap) / 2).epsilon(1e-12));
  CHECK_THROWS_AS(crossval(builder, std::vector<Fold>{folds[0]}, hp), ArgumentError);
}

TEST_CASE("ablation grid runs every mode and collapses weak duplicates") {
  DatasetSplit train_split = micro_split(4, 4, 35);
  DatasetSplit test_split = micro_split(2, 2, 36);
  auto rows = run_ablation(train_split, test_split, micro_hp(), default_ablation_grid());
  int fs = 0, ms = 0, ws = 0, all_enabled = 0;
  for (const auto& r : rows) {
    if (r.mode == "FS") ++fs;
    if (r.mode == "MS") ++ms;
    if (r.mode == "WS") {
      ++ws;
      CHECK_FALSE(r.toggles.distance_transform);
      CHECK_FALSE(r.distance_transform_applicable);
    }
    if (r.toggles.dynamic_balancing && r.toggles.stop_gradient_flow &&
        (r.toggles.distance_transform || r.mode == "WS"))
      ++all_enabled;
  }
  CHECK(fs == 6);  // one row per triple
  CHECK(ms == 6);
  CHECK(ws == 4);  // six triples collapse after the transform bit drops
  CHECK(all_enabled >= 3);  // the fully-enabled row exists in every mode
  for (const auto& r : rows)
    if (r.mode == "MS") CHECK(r.n_labeled == 1);  // a quarter of 4 positives
}

TEST_CASE("report files round-trip and curves are consistent") {
  namespace fs = std::filesystem;
  std::vector<ScoredRow> rows{{"a", 0.9, 1}, {"b", 0.6, 0}, {"c", 0.4, 1}, {"d", 0.2, 0}};
  EvalReport rep = report_from_scores(rows);
  fs::path dir = fs::temp_directory_path() / "sdd_report_test";
  fs::remove_all(dir);
  write_full_report(dir, rep);
  auto restored = read_report_rows_csv(dir / "report_rows.csv");
  REQUIRE(restored.size() == rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(restored[i].id == rows[i].id);
    CHECK(restored[i].score == rows[i].score);
    CHECK(restored[i].label == rows[i].label);
  }
  std::vector<double> s{0.9, 0.6, 0.4, 0.2};
  std::vector<int> y{1, 0, 1, 0};
  auto pr = pr_curve_points(s, y);
  CHECK(pr.back().first == 1.0);  // full recall at the lowest threshold
  auto roc = roc_curve_points(s, y);
  CHECK(roc.front() == std::pair{0.0, 0.0});
  CHECK(roc.back() == std::pair{1.0, 1.0});
  CHECK(fs::exists(dir / "roc_curve.png"));
  fs::remove_all(dir);
}

TEST_CASE("best-validation checkpoint is kept") {
  namespace fs = std::filesystem;
  DatasetSplit split = micro_split(2, 2, 37);
  Hyperparams hp = micro_hp();
  hp.n_ep = 2;
  ModelConfig cfg{.input_channels = 1, .input_height = 64, .input_width = 64, .init_seed = hp.seed};
  SegClsModel<float> model(cfg);
  fs::path dir = fs::temp_directory_path() / "sdd_best_ckpt";
  fs::remove_all(dir);
  fs::create_directories(dir);
  TrainOptions opt;
  opt.best_checkpoint_path = dir / "best.ckpt";
  opt.validator = [&](SegClsModel<float>& m, int) { return evaluate_split(m, split).ap; };
  train(model, split, hp, opt);
  CHECK(fs::exists(dir / "best.ckpt"));
  fs::remove_all(dir);
}
