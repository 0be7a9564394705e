#pragma once

#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "sdd/metrics.hpp"
#include "sdd/trainer.hpp"

namespace sdd {

// epoch,lambda,seg_loss,cls_loss,total_loss,val_ap  (val_ap may be blank)
void write_history_csv(const std::filesystem::path& path, const TrainHistory& history);

// id,score,label rows
void write_report_rows_csv(const std::filesystem::path& path, const EvalReport& report);
std::vector<ScoredRow> read_report_rows_csv(const std::filesystem::path& path);

// machine-readable metric summary
void write_report_summary(const std::filesystem::path& path, const EvalReport& report);

// curve sweeps over every distinct score threshold
std::vector<std::pair<double, double>> pr_curve_points(std::span<const double> scores, std::span<const int> labels);
std::vector<std::pair<double, double>> roc_curve_points(std::span<const double> scores, std::span<const int> labels);

void write_curve_csv(const std::filesystem::path& path, std::span<const std::pair<double, double>> points,
                     const char* x_name, const char* y_name);

// minimal polyline plot on a unit square with axes, written as a PNG
void write_curve_png(const std::filesystem::path& path, std::span<const std::pair<double, double>> points);

// mode,n_labeled,dynamic_balancing,grad_stop,distance_transform,ap,fp,fn,fp_plus_fn
void write_ablation_csv(const std::filesystem::path& path, std::span<const AblationRow> rows);

// writes rows, summary, curve CSVs and curve plots under `dir`
void write_full_report(const std::filesystem::path& dir, const EvalReport& report);

}  // namespace sdd
