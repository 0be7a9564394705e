#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sdd/dataset.hpp"
#include "sdd/hyperparams.hpp"
#include "sdd/model.hpp"

namespace sdd {

// Detection score for one image: sigmoid of the classification logit.
double score_image(SegClsModel<float>& model, const Image& image);

// Area under the precision-recall curve in the rank-mean form: positives are
// ranked by descending score and AP is the mean of the precision at each
// positive's rank. Ties sit at the worst rank of their group.
double average_precision(std::span<const double> scores, std::span<const int> labels);

// Mann-Whitney statistic: probability that a random positive outranks a
// random negative, ties counted half.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

struct ThresholdMetrics {
  int tp = 0, tn = 0, fp = 0, fn = 0;
  double ca = 0.0, f1 = 0.0, macc = 0.0;
};
// Predictions are score >= threshold. Empty classes use the conventions
// TPR=1 with no positives and TNR=1 with no negatives.
ThresholdMetrics threshold_metrics(std::span<const double> scores, std::span<const int> labels, double threshold);

// Best F1 over every distinct score used as a threshold; returns {f1, threshold}.
std::pair<double, double> best_f1_threshold(std::span<const double> scores, std::span<const int> labels);

struct ThresholdPolicy {
  enum class Kind { kFixed, kBestF1 };
  Kind kind = Kind::kFixed;
  double value = 0.5;

  static ThresholdPolicy fixed(double t) { return {Kind::kFixed, t}; }
  static ThresholdPolicy best_f1() { return {Kind::kBestF1, 0.0}; }
};

struct ScoredRow {
  std::string id;
  double score = 0.0;
  int label = 0;
};

struct EvalReport {
  std::vector<ScoredRow> rows;
  double ap = 0.0;
  double auc = 0.0;
  double threshold = 0.5;  // reporting threshold (fixed or best-F1)
  double ca = 0.0, f1 = 0.0, macc = 0.0;
  int fp = 0, fn = 0;
  double best_f1 = 0.0, best_f1_thr = 0.0;  // always reported alongside
};

EvalReport evaluate_split(SegClsModel<float>& model, const DatasetSplit& split,
                          const ThresholdPolicy& policy = {});

// Builds a report from already-computed scores (model-free path for tests
// and the report command).
EvalReport report_from_scores(std::vector<ScoredRow> rows, const ThresholdPolicy& policy = {});

struct CrossvalResult {
  std::vector<EvalReport> fold_reports;
  double mean_ap = 0.0;
};

// Fresh model per fold via the builder, trained on that fold's train part
// and evaluated on its test part.
CrossvalResult crossval(const std::function<SegClsModel<float>(int fold)>& model_builder,
                        const std::vector<Fold>& folds, const Hyperparams& hp, const ThresholdPolicy& policy = {});

struct AblationToggles {
  bool dynamic_balancing = false;
  bool stop_gradient_flow = false;
  bool distance_transform = false;
};

struct AblationRow {
  std::string mode;  // FS / MS / WS
  int n_labeled = 0;
  AblationToggles toggles;
  bool distance_transform_applicable = true;
  double ap = 0.0;
  int fp = 0, fn = 0;
};

// The component grid walked in the experiments: none, balancing only, then
// gradually all three, plus the leave-one-out rows.
std::vector<AblationToggles> default_ablation_grid();

// One train+eval run per toggle triple per supervision mode (FS, MS with a
// quarter of positives labeled, WS). WS rows ignore the distance-transform
// toggle, which has nothing to act on, and collapse duplicates.
std::vector<AblationRow> run_ablation(const DatasetSplit& train, const DatasetSplit& test, const Hyperparams& base_hp,
                                      const std::vector<AblationToggles>& grid, const ThresholdPolicy& policy = {});

}  // namespace sdd
