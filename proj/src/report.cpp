#include "sdd/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "sdd/errors.hpp"
#include "sdd/image_io.hpp"

namespace sdd {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  return os;
}

}  // namespace

void write_history_csv(const std::filesystem::path& path, const TrainHistory& history) {
  auto os = open_out(path);
  os << "epoch,lambda,seg_loss,cls_loss,total_loss,val_ap\n";
  for (const EpochRecord& r : history.epochs) {
    os << r.epoch << ',' << fmt_double(r.lambda) << ',' << fmt_double(r.seg_loss) << ',' << fmt_double(r.cls_loss)
       << ',' << fmt_double(r.total_loss) << ',';
    if (r.val_ap && std::isfinite(*r.val_ap)) os << fmt_double(*r.val_ap);
    os << '\n';
  }
  if (!os) throw IoError("short write to " + path.string());
}

void write_report_rows_csv(const std::filesystem::path& path, const EvalReport& report) {
  auto os = open_out(path);
  os << "id,score,label\n";
  for (const ScoredRow& r : report.rows) os << r.id << ',' << fmt_double(r.score) << ',' << r.label << '\n';
  if (!os) throw IoError("short write to " + path.string());
}

std::vector<ScoredRow> read_report_rows_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw IoError("empty report CSV " + path.string());
  std::vector<ScoredRow> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto c1 = line.find(','), c2 = line.rfind(',');
    if (c1 == std::string::npos || c2 == c1)
      throw IoError("malformed row " + std::to_string(lineno) + " in " + path.string());
    ScoredRow r;
    r.id = line.substr(0, c1);
    try {
      r.score = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
      r.label = std::stoi(line.substr(c2 + 1));
    } catch (...) {
      throw IoError("malformed row " + std::to_string(lineno) + " in " + path.string());
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_report_summary(const std::filesystem::path& path, const EvalReport& report) {
  nlohmann::json j;
  j["ap"] = report.ap;
  j["auc"] = report.auc;
  j["threshold"] = report.threshold;
  j["ca"] = report.ca;
  j["f1"] = report.f1;
  j["macc"] = report.macc;
  j["fp"] = report.fp;
  j["fn"] = report.fn;
  j["best_f1"] = report.best_f1;
  j["best_f1_threshold"] = report.best_f1_thr;
  j["images"] = report.rows.size();
  auto os = open_out(path);
  os << j.dump(2) << '\n';
}

std::vector<std::pair<double, double>> pr_curve_points(std::span<const double> scores, std::span<const int> labels) {
  int total_pos = 0;
  for (int l : labels) total_pos += (l != 0);
  std::vector<int> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return scores[a] > scores[b]; });
  std::vector<std::pair<double, double>> pts;
  int tp = 0, fp = 0;
  size_t i = 0;
  while (i < idx.size()) {
    size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] != 0 ? tp : fp)++;
      ++j;
    }
    double recall = total_pos ? static_cast<double>(tp) / total_pos : 0.0;
    double precision = (tp + fp) ? static_cast<double>(tp) / (tp + fp) : 1.0;
    pts.emplace_back(recall, precision);
    i = j;
  }
  return pts;
}

std::vector<std::pair<double, double>> roc_curve_points(std::span<const double> scores, std::span<const int> labels) {
  int total_pos = 0, total_neg = 0;
  for (int l : labels) (l != 0 ? total_pos : total_neg)++;
  std::vector<int> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return scores[a] > scores[b]; });
  std::vector<std::pair<double, double>> pts;
  pts.emplace_back(0.0, 0.0);
  int tp = 0, fp = 0;
  size_t i = 0;
  while (i < idx.size()) {
    size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] != 0 ? tp : fp)++;
      ++j;
    }
    pts.emplace_back(total_neg ? static_cast<double>(fp) / total_neg : 0.0,
                     total_pos ? static_cast<double>(tp) / total_pos : 0.0);
    i = j;
  }
  return pts;
}

void write_curve_csv(const std::filesystem::path& path, std::span<const std::pair<double, double>> points,
                     const char* x_name, const char* y_name) {
  auto os = open_out(path);
  os << x_name << ',' << y_name << '\n';
  for (auto& [x, y] : points) os << fmt_double(x) << ',' << fmt_double(y) << '\n';
}

void write_curve_png(const std::filesystem::path& path, std::span<const std::pair<double, double>> points) {
  const int size = 480, margin = 32;
  Image img(1, size, size, 1.0f);
  auto put = [&](int y, int x, float v) {
    if (y >= 0 && y < size && x >= 0 && x < size) img.at(0, y, x) = std::min(img.at(0, y, x), v);
  };
  // axes
  for (int i = margin; i <= size - margin; ++i) {
    put(size - margin, i, 0.6f);
    put(i, margin, 0.6f);
  }
  auto to_px = [&](double x, double y) {
    int px = margin + static_cast<int>(std::lround(x * (size - 2 * margin)));
    int py = size - margin - static_cast<int>(std::lround(y * (size - 2 * margin)));
    return std::pair{py, px};
  };
  for (size_t i = 1; i < points.size(); ++i) {
    auto [y0, x0] = to_px(points[i - 1].first, points[i - 1].second);
    auto [y1, x1] = to_px(points[i].first, points[i].second);
    int steps = std::max({std::abs(x1 - x0), std::abs(y1 - y0), 1});
    for (int s = 0; s <= steps; ++s) {
      int x = x0 + (x1 - x0) * s / steps;
      int y = y0 + (y1 - y0) * s / steps;
      put(y, x, 0.0f);
      put(y + 1, x, 0.3f);  // thicken slightly
    }
  }
  save_png(path, img);
}

void write_ablation_csv(const std::filesystem::path& path, std::span<const AblationRow> rows) {
  auto os = open_out(path);
  os << "mode,n_labeled,dynamic_balancing,grad_stop,distance_transform,ap,fp,fn,fp_plus_fn\n";
  for (const AblationRow& r : rows) {
    os << r.mode << ',' << r.n_labeled << ',' << (r.toggles.dynamic_balancing ? 1 : 0) << ','
       << (r.toggles.stop_gradient_flow ? 1 : 0) << ','
       << (r.distance_transform_applicable ? (r.toggles.distance_transform ? "1" : "0") : "n/a") << ','
       << fmt_double(r.ap) << ',' << r.fp << ',' << r.fn << ',' << (r.fp + r.fn) << '\n';
  }
}

void write_full_report(const std::filesystem::path& dir, const EvalReport& report) {
  std::filesystem::create_directories(dir);
  write_report_rows_csv(dir / "report_rows.csv", report);
  write_report_summary(dir / "report_summary.json", report);
  std::vector<double> scores(report.rows.size());
  std::vector<int> labels(report.rows.size());
  for (size_t i = 0; i < report.rows.size(); ++i) {
    scores[i] = report.rows[i].score;
    labels[i] = report.rows[i].label;
  }
  auto pr = pr_curve_points(scores, labels);
  auto roc = roc_curve_points(scores, labels);
  write_curve_csv(dir / "pr_curve.csv", pr, "recall", "precision");
  write_curve_csv(dir / "roc_curve.csv", roc, "fpr", "tpr");
  write_curve_png(dir / "pr_curve.png", pr);
  write_curve_png(dir / "roc_curve.png", roc);
}

}  // namespace sdd
