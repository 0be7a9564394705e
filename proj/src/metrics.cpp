#include "sdd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sdd/errors.hpp"
#include "sdd/trainer.hpp"

namespace sdd {

double score_image(SegClsModel<float>& model, const Image& image) {
  auto out = model.forward(image, /*train=*/false);
  return sigmoid(static_cast<double>(out.cls_logit));
}

namespace {

void check_lengths(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ArgumentError("scores and labels differ in length");
  if (scores.empty()) throw ArgumentError("empty score list");
}

// indices sorted by descending score
std::vector<int> desc_order(std::span<const double> scores) {
  std::vector<int> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return scores[a] > scores[b]; });
  return idx;
}

}  // namespace

double average_precision(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores, labels);
  int total_pos = 0;
  for (int l : labels) total_pos += (l != 0);
  if (total_pos == 0) throw MetricError("average precision undefined without positives");

  auto idx = desc_order(scores);
  double sum = 0.0;
  size_t i = 0, seen = 0;
  int pos_seen = 0;
  while (i < idx.size()) {
    size_t j = i;
    int pos_in_group = 0;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) pos_in_group += (labels[idx[j++]] != 0);
    seen = j;  // everything scoring >= the group's value
    pos_seen += pos_in_group;
    // each tied positive sits at the group's worst rank
    sum += pos_in_group * (static_cast<double>(pos_seen) / static_cast<double>(seen));
    i = j;
  }
  return sum / total_pos;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores, labels);
  int64_t total_pos = 0, total_neg = 0;
  for (int l : labels) (l != 0 ? total_pos : total_neg)++;
  if (total_pos == 0 || total_neg == 0) throw MetricError("ROC AUC undefined for single-class inputs");

  std::vector<int> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return scores[a] < scores[b]; });

  double wins = 0.0;
  int64_t neg_below = 0;
  size_t i = 0;
  while (i < idx.size()) {
    size_t j = i;
    int64_t pos_in_group = 0, neg_in_group = 0;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] != 0 ? pos_in_group : neg_in_group)++;
      ++j;
    }
    wins += static_cast<double>(pos_in_group) * (neg_below + 0.5 * neg_in_group);
    neg_below += neg_in_group;
    i = j;
  }
  return wins / (static_cast<double>(total_pos) * static_cast<double>(total_neg));
}

ThresholdMetrics threshold_metrics(std::span<const double> scores, std::span<const int> labels, double threshold) {
  check_lengths(scores, labels);
  ThresholdMetrics m;
  for (size_t i = 0; i < scores.size(); ++i) {
    bool pred = scores[i] >= threshold;
    bool truth = labels[i] != 0;
    if (pred && truth)
      ++m.tp;
    else if (pred && !truth)
      ++m.fp;
    else if (!pred && truth)
      ++m.fn;
    else
      ++m.tn;
  }
  const int total = static_cast<int>(scores.size());
  m.ca = static_cast<double>(m.tp + m.tn) / total;
  m.f1 = (2 * m.tp + m.fp + m.fn) > 0 ? 2.0 * m.tp / (2.0 * m.tp + m.fp + m.fn) : 1.0;
  double tpr = (m.tp + m.fn) > 0 ? static_cast<double>(m.tp) / (m.tp + m.fn) : 1.0;
  double tnr = (m.tn + m.fp) > 0 ? static_cast<double>(m.tn) / (m.tn + m.fp) : 1.0;
  m.macc = 0.5 * (tpr + tnr);
  return m;
}

std::pair<double, double> best_f1_threshold(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores, labels);
  auto idx = desc_order(scores);
  int total_pos = 0;
  for (int l : labels) total_pos += (l != 0);

  double best_f1 = -1.0, best_thr = 0.0;
  int tp = 0, fp = 0;
  size_t i = 0;
  while (i < idx.size()) {
    size_t j = i;
    double thr = scores[idx[i]];
    while (j < idx.size() && scores[idx[j]] == thr) {
      (labels[idx[j]] != 0 ? tp : fp)++;
      ++j;
    }
    int fn = total_pos - tp;
    double f1 = (2 * tp + fp + fn) > 0 ? 2.0 * tp / (2.0 * tp + fp + fn) : 1.0;
    if (f1 > best_f1) {
      best_f1 = f1;
      best_thr = thr;
    }
    i = j;
  }
  return {best_f1, best_thr};
}

EvalReport report_from_scores(std::vector<ScoredRow> rows, const ThresholdPolicy& policy) {
  if (rows.empty()) throw ArgumentError("empty evaluation");
  EvalReport rep;
  rep.rows = std::move(rows);
  std::vector<double> scores(rep.rows.size());
  std::vector<int> labels(rep.rows.size());
  for (size_t i = 0; i < rep.rows.size(); ++i) {
    scores[i] = rep.rows[i].score;
    labels[i] = rep.rows[i].label;
  }
  rep.ap = average_precision(scores, labels);
  rep.auc = roc_auc(scores, labels);
  auto [bf1, bthr] = best_f1_threshold(scores, labels);
  rep.best_f1 = bf1;
  rep.best_f1_thr = bthr;
  rep.threshold = policy.kind == ThresholdPolicy::Kind::kBestF1 ? bthr : policy.value;
  ThresholdMetrics m = threshold_metrics(scores, labels, rep.threshold);
  rep.ca = m.ca;
  rep.f1 = m.f1;
  rep.macc = m.macc;
  rep.fp = m.fp;
  rep.fn = m.fn;
  return rep;
}

EvalReport evaluate_split(SegClsModel<float>& model, const DatasetSplit& split, const ThresholdPolicy& policy) {
  if (split.samples.empty()) throw ArgumentError("evaluate_split: empty split");
  std::vector<ScoredRow> rows;
  rows.reserve(split.samples.size());
  for (const Sample& s : split.samples)
    rows.push_back({s.id, score_image(model, s.image), s.positive ? 1 : 0});
  return report_from_scores(std::move(rows), policy);
}

CrossvalResult crossval(const std::function<SegClsModel<float>(int fold)>& model_builder,
                        const std::vector<Fold>& folds, const Hyperparams& hp, const ThresholdPolicy& policy) {
  if (folds.size() < 2) throw ArgumentError("crossval: need at least 2 folds");
  CrossvalResult res;
  for (int f = 0; f < static_cast<int>(folds.size()); ++f) {
    SegClsModel<float> model = model_builder(f);
    train(model, folds[f].train, hp);
    res.fold_reports.push_back(evaluate_split(model, folds[f].test, policy));
  }
  double sum = 0.0;
  for (const auto& r : res.fold_reports) sum += r.ap;
  res.mean_ap = sum / static_cast<double>(res.fold_reports.size());
  return res;
}

std::vector<AblationToggles> default_ablation_grid() {
  return {
      {false, false, false},
      {true, false, false},
      {true, true, false},
      {true, false, true},
      {false, true, true},
      {true, true, true},
  };
}

std::vector<AblationRow> run_ablation(const DatasetSplit& train_split, const DatasetSplit& test_split,
                                      const Hyperparams& base_hp, const std::vector<AblationToggles>& grid,
                                      const ThresholdPolicy& policy) {
  if (grid.empty()) throw ArgumentError("run_ablation: empty grid");
  const int n_all = train_split.n_all();
  if (n_all == 0) throw ArgumentError("run_ablation: no positives in the training split");
  const int quarter = std::max(1, (n_all + 2) / 4);

  struct Mode {
    const char* name;
    int n_labeled;
  };
  const Mode modes[] = {{"FS", n_all}, {"MS", quarter}, {"WS", 0}};

  std::vector<AblationRow> rows;
  for (const Mode& mode : modes) {
    DatasetSplit assigned = assign_supervision(train_split, mode.n_labeled, base_hp.seed);
    std::vector<AblationToggles> effective;
    for (AblationToggles t : grid) {
      if (mode.n_labeled == 0) t.distance_transform = false;  // nothing to weight
      bool dup = false;
      for (const auto& seen : effective)
        dup |= (seen.dynamic_balancing == t.dynamic_balancing && seen.stop_gradient_flow == t.stop_gradient_flow &&
                seen.distance_transform == t.distance_transform);
      if (!dup) effective.push_back(t);
    }
    for (const AblationToggles& t : effective) {
      Hyperparams hp = base_hp;
      hp.dynamic_balancing = t.dynamic_balancing;
      hp.stop_gradient_flow = t.stop_gradient_flow;
      hp.distance_transform = t.distance_transform;

      const Sample& probe = assigned.samples.front();
      ModelConfig cfg{.input_channels = probe.image.c,
                      .input_height = probe.image.h,
                      .input_width = probe.image.w,
                      .stop_gradient_flow = hp.stop_gradient_flow,
                      .batch_norm = hp.batch_norm,
                      .init_seed = hp.seed};
      SegClsModel<float> model(cfg);
      train(model, assigned, hp);
      EvalReport rep = evaluate_split(model, test_split, policy);

      AblationRow row;
      row.mode = mode.name;
      row.n_labeled = mode.n_labeled;
      row.toggles = t;
      row.distance_transform_applicable = mode.n_labeled > 0;
      row.ap = rep.ap;
      row.fp = rep.fp;
      row.fn = rep.fn;
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace sdd
