#include "sdd/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sdd/checkpoint.hpp"
#include "sdd/errors.hpp"
#include "sdd/hyperparams.hpp"
#include "sdd/loaders.hpp"
#include "sdd/metrics.hpp"
#include "sdd/report.hpp"
#include "sdd/synth.hpp"
#include "sdd/trainer.hpp"

namespace sdd::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunConfig {
  std::string command;
  std::string dataset = "synth";
  std::string root;
  std::string subset = "train";
  std::string test_subset = "test";
  int n_labeled = -1;   // -1: every positive keeps its mask
  int n_all_hint = -1;  // severstal preset selector
  int folds = 3;
  uint64_t seed = 0;
  std::string out;
  std::string threshold = "0.5";  // number or "best"
  Hyperparams hp;
  LoadOptions load;

  json to_json() const {
    json j;
    j["command"] = command;
    j["dataset"] = dataset;
    j["root"] = root;
    j["subset"] = subset;
    j["test_subset"] = test_subset;
    j["n_labeled"] = n_labeled;
    j["n_all"] = n_all_hint;
    j["folds"] = folds;
    j["seed"] = seed;
    j["threshold"] = threshold;
    j["hyperparams"] = {{"n_ep", hp.n_ep},
                        {"eta", hp.eta},
                        {"batch_size", hp.batch_size},
                        {"delta", hp.delta},
                        {"w_pos", hp.w_pos},
                        {"p", hp.p},
                        {"dilation_kernel", hp.dilation_kernel},
                        {"dynamic_balancing", hp.dynamic_balancing},
                        {"stop_gradient_flow", hp.stop_gradient_flow},
                        {"distance_transform", hp.distance_transform},
                        {"batch_norm", hp.batch_norm},
                        {"seed", hp.seed}};
    j["load_options"] = {{"channels", load.channels},
                         {"resize_height", load.resize_height},
                         {"resize_width", load.resize_width},
                         {"pad_multiple", load.pad_multiple}};
    return j;
  }

  static RunConfig from_json(const json& j) {
    RunConfig c;
    c.command = j.at("command").get<std::string>();
    c.dataset = j.at("dataset").get<std::string>();
    c.root = j.at("root").get<std::string>();
    c.subset = j.value("subset", "train");
    c.test_subset = j.value("test_subset", "test");
    c.n_labeled = j.value("n_labeled", -1);
    c.n_all_hint = j.value("n_all", -1);
    c.folds = j.value("folds", 3);
    c.seed = j.value("seed", uint64_t{0});
    c.threshold = j.value("threshold", "0.5");
    const json& h = j.at("hyperparams");
    c.hp.n_ep = h.at("n_ep");
    c.hp.eta = h.at("eta");
    c.hp.batch_size = h.at("batch_size");
    c.hp.delta = h.at("delta");
    c.hp.w_pos = h.at("w_pos");
    c.hp.p = h.at("p");
    c.hp.dilation_kernel = h.at("dilation_kernel");
    c.hp.dynamic_balancing = h.at("dynamic_balancing");
    c.hp.stop_gradient_flow = h.at("stop_gradient_flow");
    c.hp.distance_transform = h.at("distance_transform");
    c.hp.batch_norm = h.at("batch_norm");
    c.hp.seed = h.at("seed");
    const json& l = j.at("load_options");
    c.load.channels = l.at("channels");
    c.load.resize_height = l.at("resize_height");
    c.load.resize_width = l.at("resize_width");
    c.load.pad_multiple = l.at("pad_multiple");
    return c;
  }
};

ThresholdPolicy parse_threshold(const std::string& text) {
  if (text == "best" || text == "best_f1") return ThresholdPolicy::best_f1();
  try {
    return ThresholdPolicy::fixed(std::stod(text));
  } catch (...) {
    throw ArgumentError("threshold must be a number or 'best', got '" + text + "'");
  }
}

fs::path resolve_out(const RunConfig& cfg) {
  if (!cfg.out.empty()) return cfg.out;
  const char* env_root = std::getenv("SDD_OUT_ROOT");
  if (!env_root || !*env_root) throw ArgumentError("no --out given and SDD_OUT_ROOT is not set");
  std::string name =
      cfg.command + "_" + cfg.dataset + "_N" + std::to_string(cfg.n_labeled) + "_seed" + std::to_string(cfg.seed);
  return fs::path(env_root) / name;
}

void write_manifest(const fs::path& out_dir, const RunConfig& cfg, const char* name = "manifest.json") {
  fs::create_directories(out_dir);
  std::ofstream os(out_dir / name);
  if (!os) throw IoError("cannot write manifest under " + out_dir.string());
  os << cfg.to_json().dump(2) << "\n";
}

ModelConfig model_config_for(const DatasetSplit& split, const Hyperparams& hp) {
  if (split.samples.empty()) throw ArgumentError("empty dataset split");
  const Sample& s = split.samples.front();
  return ModelConfig{.input_channels = s.image.c,
                     .input_height = s.image.h,
                     .input_width = s.image.w,
                     .stop_gradient_flow = hp.stop_gradient_flow,
                     .batch_norm = hp.batch_norm,
                     .init_seed = hp.seed};
}

DatasetSplit load_for(const RunConfig& cfg, const std::string& subset) {
  LoadOptions opt = cfg.load;
  opt.subset = subset;
  return load_dataset(parse_dataset_format(cfg.dataset), cfg.root, opt);
}

DatasetSplit apply_supervision(DatasetSplit split, int n_labeled, uint64_t seed) {
  if (n_labeled < 0) return split;  // keep every available mask
  int n = std::min(n_labeled, split.n_all());
  return assign_supervision(std::move(split), n, seed);
}

int cmd_synth(const RunConfig& cfg, const synth::SynthConfig& synth_cfg) {
  fs::path out = resolve_out(cfg);
  synth::generate_benchmark(synth_cfg, out);
  // manifest.json belongs to the benchmark layout; the run config sits beside it
  write_manifest(out, cfg, "run_manifest.json");
  std::cout << "benchmark written to " << out.string() << "\n";
  return 0;
}

int cmd_train(RunConfig cfg) {
  cfg.hp.validate();
  fs::path out = resolve_out(cfg);
  DatasetSplit split = load_for(cfg, cfg.subset);
  cfg.n_all_hint = split.n_all();
  DatasetSplit assigned = apply_supervision(std::move(split), cfg.n_labeled, cfg.seed);

  write_manifest(out, cfg);
  SegClsModel<float> model(model_config_for(assigned, cfg.hp));
  TrainOptions topt;
  topt.checkpoint_path = out / "checkpoint.ckpt";
  TrainHistory history = train(model, assigned, cfg.hp, topt);
  write_history_csv(out / "history.csv", history);
  std::cout << "trained " << history.epochs.size() << " epochs; artifacts in " << out.string() << "\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& checkpoint) {
  fs::path out = resolve_out(cfg);
  SegClsModel<float> model = load_checkpoint<float>(checkpoint);
  DatasetSplit split = load_for(cfg, cfg.test_subset);
  EvalReport rep = evaluate_split(model, split, parse_threshold(cfg.threshold));
  write_manifest(out, cfg);
  write_full_report(out, rep);
  std::cout << "ap=" << rep.ap << " auc=" << rep.auc << " f1@" << rep.threshold << "=" << rep.f1 << " fp=" << rep.fp
            << " fn=" << rep.fn << "\n";
  return 0;
}

int cmd_crossval(RunConfig cfg) {
  cfg.hp.validate();
  fs::path out = resolve_out(cfg);
  DatasetSplit whole = load_for(cfg, cfg.subset);
  auto folds = make_folds(whole, cfg.folds, cfg.seed);
  for (auto& f : folds) f.train = apply_supervision(std::move(f.train), cfg.n_labeled, cfg.seed);
  write_manifest(out, cfg);

  auto builder = [&](int fold) {
    Hyperparams hp = cfg.hp;
    hp.seed = derive_seed(cfg.hp.seed, 0xF0, static_cast<uint64_t>(fold));
    return SegClsModel<float>(model_config_for(folds[fold].train, hp));
  };
  CrossvalResult res = crossval(builder, folds, cfg.hp, parse_threshold(cfg.threshold));

  json summary;
  summary["mean_ap"] = res.mean_ap;
  summary["folds"] = json::array();
  for (int f = 0; f < static_cast<int>(res.fold_reports.size()); ++f) {
    fs::path fold_dir = out / ("fold" + std::to_string(f));
    write_full_report(fold_dir, res.fold_reports[f]);
    summary["folds"].push_back({{"ap", res.fold_reports[f].ap}, {"auc", res.fold_reports[f].auc}});
  }
  std::ofstream os(out / "crossval_summary.json");
  os << summary.dump(2) << "\n";
  std::cout << "mean ap over " << res.fold_reports.size() << " folds: " << res.mean_ap << "\n";
  return 0;
}

int cmd_ablate(RunConfig cfg) {
  cfg.hp.validate();
  fs::path out = resolve_out(cfg);
  DatasetSplit train_split = load_for(cfg, cfg.subset);
  DatasetSplit test_split = load_for(cfg, cfg.test_subset);
  write_manifest(out, cfg);
  auto rows = run_ablation(train_split, test_split, cfg.hp, default_ablation_grid(), parse_threshold(cfg.threshold));
  write_ablation_csv(out / "ablation.csv", rows);
  std::cout << rows.size() << " ablation rows written to " << (out / "ablation.csv").string() << "\n";
  return 0;
}

int cmd_report(const std::string& run_dir) {
  fs::path dir(run_dir);
  auto rows = read_report_rows_csv(dir / "report_rows.csv");
  EvalReport rep = report_from_scores(std::move(rows));
  write_full_report(dir, rep);
  std::cout << "images=" << rep.rows.size() << " ap=" << rep.ap << " auc=" << rep.auc << "\n";
  return 0;
}

struct HpFlagSet {
  CLI::Option* epochs;
  CLI::Option* lr;
  CLI::Option* bs;
  CLI::Option* delta;
  CLI::Option* wpos;
  CLI::Option* p;
  CLI::Option* dilate;
};

HpFlagSet add_hp_flags(CLI::App* app, RunConfig& cfg, std::string& preset, bool& no_dyn, bool& no_stop, bool& no_dt,
                       bool& no_bn) {
  app->add_option("--preset", preset, "hyperparameter preset: dagm, ksdd, ksdd_weak, ksdd2, severstal");
  app->add_option("--N-all", cfg.n_all_hint, "positive-set size used by the severstal preset");
  HpFlagSet set;
  set.epochs = app->add_option("--epochs", cfg.hp.n_ep, "training epochs");
  set.lr = app->add_option("--lr", cfg.hp.eta, "SGD learning rate");
  set.bs = app->add_option("--bs", cfg.hp.batch_size, "batch size");
  set.delta = app->add_option("--delta", cfg.hp.delta, "classification loss weight");
  set.wpos = app->add_option("--wpos", cfg.hp.w_pos, "positive-pixel weight scale");
  set.p = app->add_option("--p", cfg.hp.p, "distance weighting exponent");
  set.dilate = app->add_option("--dilate", cfg.hp.dilation_kernel, "mask dilation kernel (odd)");
  app->add_flag("--no-dynamic-balancing", no_dyn, "constant loss balance instead of the linear schedule");
  app->add_flag("--no-grad-stop", no_stop, "let classification gradients reach the trunk");
  app->add_flag("--no-distance-transform", no_dt, "uniform positive-pixel weights");
  app->add_flag("--no-batch-norm", no_bn, "disable normalization layers");
  return set;
}

// preset values fill every field the command line left untouched
void apply_preset(const std::string& preset, RunConfig& cfg, const HpFlagSet& flags) {
  if (preset.empty()) return;
  Hyperparams parsed = cfg.hp;
  cfg.hp = preset_hyperparams(preset, cfg.n_all_hint);
  if (flags.epochs->count()) cfg.hp.n_ep = parsed.n_ep;
  if (flags.lr->count()) cfg.hp.eta = parsed.eta;
  if (flags.bs->count()) cfg.hp.batch_size = parsed.batch_size;
  if (flags.delta->count()) cfg.hp.delta = parsed.delta;
  if (flags.wpos->count()) cfg.hp.w_pos = parsed.w_pos;
  if (flags.p->count()) cfg.hp.p = parsed.p;
  if (flags.dilate->count()) cfg.hp.dilation_kernel = parsed.dilation_kernel;
}

void add_data_flags(CLI::App* app, RunConfig& cfg) {
  app->add_option("--dataset", cfg.dataset, "dataset format: dagm, ksdd, ksdd2, severstal, synth");
  app->add_option("--root", cfg.root, "dataset root directory")->required();
  app->add_option("--subset", cfg.subset, "train subset name");
  app->add_option("--test-subset", cfg.test_subset, "test subset name");
  app->add_option("--channels", cfg.load.channels, "force channel count (1 or 3)");
  app->add_option("--resize-height", cfg.load.resize_height, "resize images to this height");
  app->add_option("--resize-width", cfg.load.resize_width, "resize images to this width");
  app->add_option("--pad-multiple", cfg.load.pad_multiple, "zero-pad extents to a multiple (default 64)");
}

}  // namespace

int dispatch(const std::vector<std::string>& args) {
  CLI::App app{"surface-defect detection: training, evaluation and benchmarks"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string preset, checkpoint, manifest_path, run_dir;
  bool no_dyn = false, no_stop = false, no_dt = false, no_bn = false;
  bool tier_easy = false, tier_hard = false;
  synth::SynthConfig synth_cfg;

  CLI::App* synth_cmd = app.add_subcommand("synth", "generate the synthetic benchmark");
  synth_cmd->add_option("--out", cfg.out, "output directory");
  synth_cmd->add_option("--seed", cfg.seed, "generator seed");
  synth_cmd->add_flag("--easy", tier_easy, "easy difficulty tier (default)");
  synth_cmd->add_flag("--hard", tier_hard, "hard difficulty tier");
  synth_cmd->add_option("--height", synth_cfg.height, "image height (multiple of 8)");
  synth_cmd->add_option("--width", synth_cfg.width, "image width (multiple of 8)");
  synth_cmd->add_option("--train-pos", synth_cfg.train_positives, "train positives");
  synth_cmd->add_option("--train-neg", synth_cfg.train_negatives, "train negatives");
  synth_cmd->add_option("--test-pos", synth_cfg.test_positives, "test positives");
  synth_cmd->add_option("--test-neg", synth_cfg.test_negatives, "test negatives");
  CLI::Option* opt_clo = synth_cmd->add_option("--contrast-lo", synth_cfg.contrast_lo, "defect contrast lower bound");
  CLI::Option* opt_chi = synth_cmd->add_option("--contrast-hi", synth_cfg.contrast_hi, "defect contrast upper bound");
  CLI::Option* opt_tex = synth_cmd->add_option("--texture", synth_cfg.texture_amplitude, "background texture");

  CLI::App* train_cmd = app.add_subcommand("train", "train a model");
  train_cmd->add_option("--manifest", manifest_path, "rerun a previous run from its manifest");
  train_cmd->add_option("--dataset", cfg.dataset, "dataset format");
  train_cmd->add_option("--root", cfg.root, "dataset root");
  train_cmd->add_option("--subset", cfg.subset, "subset to train on");
  train_cmd->add_option("--N", cfg.n_labeled, "positives that keep pixel labels (-1: all)");
  train_cmd->add_option("--seed", cfg.seed, "run seed");
  train_cmd->add_option("--out", cfg.out, "output directory");
  train_cmd->add_option("--channels", cfg.load.channels, "force channel count");
  train_cmd->add_option("--resize-height", cfg.load.resize_height, "resize images to this height");
  train_cmd->add_option("--resize-width", cfg.load.resize_width, "resize images to this width");
  train_cmd->add_option("--pad-multiple", cfg.load.pad_multiple, "pad extents to a multiple");
  HpFlagSet train_flags = add_hp_flags(train_cmd, cfg, preset, no_dyn, no_stop, no_dt, no_bn);

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  add_data_flags(eval_cmd, cfg);
  eval_cmd->add_option("--threshold", cfg.threshold, "reporting threshold or 'best'");
  eval_cmd->add_option("--seed", cfg.seed, "run seed");
  eval_cmd->add_option("--out", cfg.out, "output directory");

  CLI::App* cross_cmd = app.add_subcommand("crossval", "k-fold cross validation");
  add_data_flags(cross_cmd, cfg);
  cross_cmd->add_option("--folds", cfg.folds, "number of folds");
  cross_cmd->add_option("--N", cfg.n_labeled, "pixel-labeled positives per fold (-1: all)");
  cross_cmd->add_option("--seed", cfg.seed, "run seed");
  cross_cmd->add_option("--out", cfg.out, "output directory");
  cross_cmd->add_option("--threshold", cfg.threshold, "reporting threshold or 'best'");
  HpFlagSet cross_flags = add_hp_flags(cross_cmd, cfg, preset, no_dyn, no_stop, no_dt, no_bn);

  CLI::App* ablate_cmd = app.add_subcommand("ablate", "component ablation grid over FS/MS/WS");
  add_data_flags(ablate_cmd, cfg);
  ablate_cmd->add_option("--seed", cfg.seed, "run seed");
  ablate_cmd->add_option("--out", cfg.out, "output directory");
  ablate_cmd->add_option("--threshold", cfg.threshold, "reporting threshold or 'best'");
  HpFlagSet ablate_flags = add_hp_flags(ablate_cmd, cfg, preset, no_dyn, no_stop, no_dt, no_bn);

  CLI::App* report_cmd = app.add_subcommand("report", "recompute reports for a finished run");
  report_cmd->add_option("--run", run_dir, "run directory containing report_rows.csv")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*train_cmd && !manifest_path.empty()) {
      std::ifstream is(manifest_path);
      if (!is) throw IoError("cannot open manifest " + manifest_path);
      json j;
      is >> j;
      std::string out_override = cfg.out;
      cfg = RunConfig::from_json(j);
      if (!out_override.empty()) cfg.out = out_override;
      return cmd_train(cfg);
    }

    HpFlagSet* flags = *train_cmd ? &train_flags : (*cross_cmd ? &cross_flags : &ablate_flags);
    apply_preset(preset, cfg, *flags);
    if (no_dyn) cfg.hp.dynamic_balancing = false;
    if (no_stop) cfg.hp.stop_gradient_flow = false;
    if (no_dt) cfg.hp.distance_transform = false;
    if (no_bn) cfg.hp.batch_norm = false;
    cfg.hp.seed = cfg.seed;

    if (*synth_cmd) {
      cfg.command = "synth";
      cfg.dataset = "synth";
      if (tier_easy && tier_hard) throw ArgumentError("choose one of --easy / --hard");
      synth::SynthConfig tier = tier_hard ? synth::SynthConfig::hard_tier() : synth::SynthConfig::easy_tier();
      if (!opt_clo->count()) synth_cfg.contrast_lo = tier.contrast_lo;
      if (!opt_chi->count()) synth_cfg.contrast_hi = tier.contrast_hi;
      if (!opt_tex->count()) synth_cfg.texture_amplitude = tier.texture_amplitude;
      synth_cfg.seed = cfg.seed;
      return cmd_synth(cfg, synth_cfg);
    }
    if (*train_cmd) {
      cfg.command = "train";
      return cmd_train(cfg);
    }
    if (*eval_cmd) {
      cfg.command = "eval";
      return cmd_eval(cfg, checkpoint);
    }
    if (*cross_cmd) {
      cfg.command = "crossval";
      return cmd_crossval(cfg);
    }
    if (*ablate_cmd) {
      cfg.command = "ablate";
      return cmd_ablate(cfg);
    }
    if (*report_cmd) return cmd_report(run_dir);
    std::cerr << "no command given\n";
    return 2;
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int dispatch(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dispatch(args);
}

}  // namespace sdd::cli
