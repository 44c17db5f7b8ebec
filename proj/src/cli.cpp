#include "graphhist/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "graphhist/dataset.hpp"
#include "graphhist/gradcheck.hpp"
#include "graphhist/model.hpp"
#include "graphhist/train.hpp"
#include "json.hpp"

namespace graphhist {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kVersion = "graphhist 1.0.0";

std::string default_out_dir() {
  if (const char* env = std::getenv("GRAPHHIST_OUT_DIR")) return env;
  return "runs";
}

json config_json(const ModelConfig& cfg) {
  return {
      {"k", cfg.bins},
      {"h", cfg.max_power},
      {"u", cfg.embed_width},
      {"dropout", cfg.dropout},
      {"classes", cfg.classes},
      {"in_features", cfg.in_features},
      {"alpha", cfg.alpha},
      {"normalize_hist", cfg.normalize_hist},
  };
}

json train_config_json(const TrainConfig& cfg) {
  return {
      {"lr0", cfg.lr0},
      {"factor", cfg.factor},
      {"patience", cfg.patience},
      {"cooldown", cfg.cooldown},
      {"lr_min", cfg.lr_min},
      {"batch", cfg.batch},
      {"stop_patience", cfg.stop_patience},
      {"max_epochs", cfg.max_epochs},
      {"seed", cfg.seed},
      {"oversample", cfg.oversample_train},
      {"momentum", cfg.momentum},
      {"stop_metric", cfg.stop_metric == StopMetric::f1 ? "f1" : "loss"},
      {"eval_protocol",
       cfg.eval_protocol == EvalProtocol::test_as_val ? "test_as_val" : "held_out_val"},
      {"val_fraction", cfg.val_fraction},
      {"positive_class", cfg.positive_class},
  };
}

json metrics_json(const Metrics& m) {
  return {
      {"accuracy", m.accuracy},
      {"precision", m.precision},
      {"recall", m.recall},
      {"f1", m.f1},
      {"confusion", m.confusion},
  };
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

/// Sufficient to replay the run: command, full config snapshot, seed, data
/// location and output directory. Written before training begins.
void write_manifest(const std::string& out_dir, const std::string& command,
                    const std::string& dataset_dir, const std::string& dataset_name,
                    const ModelConfig& model_cfg, const TrainConfig& train_cfg, json extra) {
  json manifest = {
      {"version", kVersion},
      {"command", command},
      {"dataset_dir", dataset_dir},
      {"dataset_name", dataset_name},
      {"model_config", config_json(model_cfg)},
      {"train_config", train_config_json(train_cfg)},
      {"seed", train_cfg.seed},
      {"out_dir", out_dir},
  };
  manifest.update(extra);
  write_json((fs::path(out_dir) / "manifest.json").string(), manifest);
}

struct CommonFlags {
  std::string dataset_dir;
  std::string dataset_name;  // defaults to the directory basename
  std::string out_dir = default_out_dir();
  bool use_node_labels = false;

  ModelConfig model;
  TrainConfig train;
  std::string stop_metric = "loss";
  std::string eval_protocol = "held_out_val";
};

void add_model_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->set_help_flag("--help", "print help");  // --h is the Laplacian power flag
  cmd->add_option("--dataset", f.dataset_dir, "TU dataset directory")->required();
  cmd->add_option("--dataset-name", f.dataset_name,
                  "dataset file prefix (default: directory basename)");
  cmd->add_option("--k", f.model.bins, "histogram bins")->capture_default_str();
  cmd->add_option("--h", f.model.max_power, "max Laplacian power")->capture_default_str();
  cmd->add_option("--u", f.model.embed_width, "per-branch embedding width")->capture_default_str();
  cmd->add_option("--dropout", f.model.dropout, "dropout rate")->capture_default_str();
  cmd->add_option("--alpha", f.model.alpha, "binning sharpness")->capture_default_str();
  cmd->add_flag("--normalize-hist", f.model.normalize_hist,
                "divide histogram counts by node count");
  cmd->add_flag("--use-node-labels", f.use_node_labels,
                "one-hot node labels as features when available");
  cmd->add_option("--out", f.out_dir, "output directory (default $GRAPHHIST_OUT_DIR or ./runs)");
}

void add_train_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--seed", f.train.seed, "run seed")->capture_default_str();
  cmd->add_option("--epochs", f.train.max_epochs, "epoch budget")->capture_default_str();
  cmd->add_option("--batch", f.train.batch, "mini-batch size")->capture_default_str();
  cmd->add_option("--lr", f.train.lr0, "initial learning rate")->capture_default_str();
  cmd->add_option("--lr-min", f.train.lr_min, "learning rate floor")->capture_default_str();
  cmd->add_option("--factor", f.train.factor, "plateau reduction factor")->capture_default_str();
  cmd->add_option("--patience", f.train.patience, "plateau patience (epochs)")->capture_default_str();
  cmd->add_option("--cooldown", f.train.cooldown, "plateau cooldown (epochs)")->capture_default_str();
  cmd->add_option("--stop-patience", f.train.stop_patience, "early-stop patience (epochs)")->capture_default_str();
  cmd->add_option("--momentum", f.train.momentum, "SGD momentum")->capture_default_str();
  cmd->add_flag("--oversample", f.train.oversample_train,
                "balance classes by resampling with replacement");
  cmd->add_option("--stop-metric", f.stop_metric, "loss or f1")->capture_default_str()
      ->check(CLI::IsMember({"loss", "f1"}));
  cmd->add_option("--eval-protocol", f.eval_protocol, "held_out_val or test_as_val")->capture_default_str()
      ->check(CLI::IsMember({"held_out_val", "test_as_val"}));
  cmd->add_option("--val-fraction", f.train.val_fraction,
                  "validation carve for held_out_val")->capture_default_str();
  cmd->add_option("--positive-class", f.train.positive_class, "class index for P/R/F1")->capture_default_str();
}

GraphDataset load_for(const CommonFlags& f) {
  std::string name = f.dataset_name;
  if (name.empty()) name = fs::path(f.dataset_dir).filename().string();
  LoadOptions opt;
  opt.use_node_labels = f.use_node_labels;
  return load_tu_dataset(f.dataset_dir, name, opt);
}

void finalize_config(CommonFlags& f, const GraphDataset& ds) {
  f.model.classes = ds.num_classes;
  f.model.in_features = ds.graphs.front().features->cols();
  f.train.stop_metric = f.stop_metric == "f1" ? StopMetric::f1 : StopMetric::loss;
  f.train.eval_protocol =
      f.eval_protocol == "test_as_val" ? EvalProtocol::test_as_val : EvalProtocol::held_out_val;
  f.model.validate();
  f.train.validate();
}

int cmd_train(CommonFlags& f, int n_folds, int fold_index) {
  const GraphDataset ds = load_for(f);
  finalize_config(f, ds);
  if (fold_index < 0 || fold_index >= n_folds) {
    throw std::invalid_argument("--fold must lie in [0, --folds)");
  }
  fs::create_directories(f.out_dir);
  write_manifest(f.out_dir, "train", f.dataset_dir, ds.name, f.model, f.train,
                 {{"folds", n_folds}, {"fold", fold_index}});

  const FoldPlan plan = split_folds(ds, n_folds, f.train.seed);
  const auto& [train_idx, test_idx] = plan.folds[static_cast<std::size_t>(fold_index)];
  const FoldResult result = train_fold(ds, train_idx, test_idx, f.model, f.train);

  write_history_csv((fs::path(f.out_dir) / "history.csv").string(), result.history,
                    f.train.stop_metric == StopMetric::f1);
  save_checkpoint((fs::path(f.out_dir) / "checkpoint.bin").string(), f.model,
                  result.best_params);
  write_json((fs::path(f.out_dir) / "metrics.json").string(),
             {{"dataset", ds.name},
              {"config", config_json(f.model)},
              {"fold", fold_index},
              {"best_epoch", result.best_epoch},
              {"metrics", metrics_json(result.metrics)}});

  std::printf("train %s fold %d/%d: best epoch %d, test accuracy %.4f, f1 %.4f\n",
              ds.name.c_str(), fold_index, n_folds, result.best_epoch, result.metrics.accuracy,
              result.metrics.f1);
  return 0;
}

int cmd_cv(CommonFlags& f, int n_folds) {
  const GraphDataset ds = load_for(f);
  finalize_config(f, ds);
  fs::create_directories(f.out_dir);
  write_manifest(f.out_dir, "cv", f.dataset_dir, ds.name, f.model, f.train,
                 {{"folds", n_folds}});

  const CvResult cv = cross_validate(ds, f.model, f.train, n_folds);

  json folds = json::array();
  for (const Metrics& m : cv.fold_metrics) {
    folds.push_back({{"accuracy", m.accuracy},
                     {"precision", m.precision},
                     {"recall", m.recall},
                     {"f1", m.f1}});
  }
  write_json((fs::path(f.out_dir) / "summary.json").string(),
             {{"dataset", ds.name},
              {"config", config_json(f.model)},
              {"folds", folds},
              {"mean_accuracy", cv.mean_accuracy},
              {"std_accuracy", cv.std_accuracy}});

  std::printf("%s %d-fold accuracy: %.1f ± %.1f\n", ds.name.c_str(), n_folds,
              100.0 * cv.mean_accuracy, 100.0 * cv.std_accuracy);
  return 0;
}

int cmd_eval(const std::string& checkpoint_path, CommonFlags& f,
             const std::string& hist_dump_dir) {
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  const GraphDataset ds = load_for(f);
  if (ds.num_classes != ckpt.config.classes ||
      ds.graphs.front().features->cols() != ckpt.config.in_features) {
    throw std::runtime_error("dataset does not match checkpoint config (classes/features)");
  }
  fs::create_directories(f.out_dir);

  std::vector<std::int64_t> all(static_cast<std::size_t>(ds.size()));
  for (std::int64_t i = 0; i < ds.size(); ++i) all[static_cast<std::size_t>(i)] = i;
  const EvalResult res =
      evaluate(ds, all, ckpt.params, ckpt.config, f.train.batch, f.train.positive_class);

  write_json((fs::path(f.out_dir) / "metrics.json").string(),
             {{"dataset", ds.name},
              {"config", config_json(ckpt.config)},
              {"metrics", metrics_json(res.metrics)}});

  std::ofstream probs((fs::path(f.out_dir) / "probabilities.csv").string());
  probs << "graph,label";
  for (std::int64_t j = 0; j < ckpt.config.classes; ++j) probs << ",p" << j;
  probs << ",predicted\n";
  char buf[64];
  for (std::int64_t i = 0; i < ds.size(); ++i) {
    std::int64_t arg = 0;
    probs << i << "," << ds.labels[static_cast<std::size_t>(i)];
    for (std::int64_t j = 0; j < ckpt.config.classes; ++j) {
      if (res.probs(i, j) > res.probs(i, arg)) arg = j;
      std::snprintf(buf, sizeof(buf), ",%.17g", res.probs(i, j));
      probs << buf;
    }
    probs << "," << arg << "\n";
  }

  if (!hist_dump_dir.empty()) {
    fs::create_directories(hist_dump_dir);
    const BinLayout layout = bin_centers(ckpt.config.bins);
    for (std::int64_t i = 0; i < ds.size(); ++i) {
      const Batch one = make_batch(ds, {i});
      const Tensor c2 = embed(one, ckpt.params, ckpt.config);
      const Tensor hist = histogram_forward(c2, layout);
      std::ofstream hout((fs::path(hist_dump_dir) / ("hist_" + std::to_string(i) + ".csv")).string());
      for (std::int64_t r = 0; r < hist.rows(); ++r) {
        for (std::int64_t c = 0; c < hist.cols(); ++c) {
          if (c) hout << ",";
          hout << hist(r, c);
        }
        hout << "\n";
      }
    }
  }

  std::printf("eval %s: accuracy %.4f, precision %.4f, recall %.4f, f1 %.4f\n", ds.name.c_str(),
              res.metrics.accuracy, res.metrics.precision, res.metrics.recall, res.metrics.f1);
  return 0;
}

int cmd_gradcheck(std::uint64_t seed) {
  const auto reports = gradcheck::run_kernel_suite(seed);
  bool all_pass = true;
  for (const GradCheckReport& r : reports) {
    std::printf("%-24s max rel err %.3e  %s\n", r.op.c_str(), r.max_rel_err,
                r.pass ? "PASS" : "FAIL");
    all_pass = all_pass && r.pass;
  }
  const GradCheckReport hist = gradcheck::run_histbin_suite(seed);
  std::printf("%-24s max rel err %.3e  %s\n", hist.op.c_str(), hist.max_rel_err,
              hist.pass ? "PASS" : "FAIL");
  all_pass = all_pass && hist.pass;
  return all_pass ? 0 : 1;
}

int cmd_synth(const std::string& kind, std::int64_t count, std::int64_t min_nodes,
              std::int64_t max_nodes, std::uint64_t seed, const std::string& out_dir,
              std::string name) {
  const GraphDataset ds = synth_dataset(parse_synth_kind(kind), count, min_nodes, max_nodes, seed);
  if (name.empty()) name = ds.name;
  GraphDataset named = ds;
  named.name = name;
  write_tu_dataset(named, out_dir, name);
  std::printf("synth %s: %lld graphs (%lld classes) written to %s\n", name.c_str(),
              static_cast<long long>(named.size()), static_cast<long long>(named.num_classes),
              out_dir.c_str());
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Graph classification from latent feature histograms"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  CommonFlags train_flags, cv_flags, eval_flags;
  int train_folds = 10, train_fold_index = 0, cv_folds = 10;

  CLI::App* train_cmd = app.add_subcommand("train", "train a single fold and save a checkpoint");
  add_model_flags(train_cmd, train_flags);
  add_train_flags(train_cmd, train_flags);
  train_cmd->add_option("--folds", train_folds, "fold plan size")->capture_default_str();
  train_cmd->add_option("--fold", train_fold_index, "fold to train")->capture_default_str();

  CLI::App* cv_cmd = app.add_subcommand("cv", "k-fold cross-validation");
  add_model_flags(cv_cmd, cv_flags);
  add_train_flags(cv_cmd, cv_flags);
  cv_cmd->add_option("--folds", cv_folds, "number of folds")->capture_default_str();

  CLI::App* eval_cmd = app.add_subcommand("eval", "score a dataset with a saved checkpoint");
  std::string eval_checkpoint, eval_hist_dump;
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "checkpoint file")->required();
  eval_cmd->add_option("--dataset", eval_flags.dataset_dir, "TU dataset directory")->required();
  eval_cmd->add_option("--dataset-name", eval_flags.dataset_name, "dataset file prefix");
  eval_cmd->add_flag("--use-node-labels", eval_flags.use_node_labels,
                     "one-hot node labels as features");
  eval_cmd->add_option("--batch", eval_flags.train.batch, "evaluation batch size")->capture_default_str();
  eval_cmd->add_option("--positive-class", eval_flags.train.positive_class,
                       "class index for P/R/F1")->capture_default_str();
  eval_cmd->add_option("--out", eval_flags.out_dir, "output directory");
  eval_cmd->add_option("--dump-histograms", eval_hist_dump,
                       "write per-graph histogram CSVs to this directory");

  CLI::App* gradcheck_cmd =
      app.add_subcommand("gradcheck", "finite-difference and binning-oracle suites");
  std::uint64_t gradcheck_seed = 20240101;
  gradcheck_cmd->add_option("--seed", gradcheck_seed, "suite seed")->capture_default_str();

  CLI::App* synth_cmd = app.add_subcommand("synth", "write a synthetic dataset in TU format");
  std::string synth_kind = "stars_vs_cycles", synth_out, synth_name;
  std::int64_t synth_count = 40, synth_min = 10, synth_max = 30;
  std::uint64_t synth_seed = 7;
  synth_cmd->add_option("--kind", synth_kind, "stars_vs_cycles or er_density_pair")->capture_default_str();
  synth_cmd->add_option("--count", synth_count, "number of graphs")->capture_default_str();
  synth_cmd->add_option("--min-nodes", synth_min, "smallest graph")->capture_default_str();
  synth_cmd->add_option("--max-nodes", synth_max, "largest graph")->capture_default_str();
  synth_cmd->add_option("--seed", synth_seed, "generator seed")->capture_default_str();
  synth_cmd->add_option("--out", synth_out, "output directory")->required();
  synth_cmd->add_option("--name", synth_name, "dataset name (default: the kind)");

  try {
    app.parse(argc, argv);
    if (train_cmd->parsed()) return cmd_train(train_flags, train_folds, train_fold_index);
    if (cv_cmd->parsed()) return cmd_cv(cv_flags, cv_folds);
    if (eval_cmd->parsed()) return cmd_eval(eval_checkpoint, eval_flags, eval_hist_dump);
    if (gradcheck_cmd->parsed()) return cmd_gradcheck(gradcheck_seed);
    if (synth_cmd->parsed()) {
      return cmd_synth(synth_kind, synth_count, synth_min, synth_max, synth_seed, synth_out,
                       synth_name);
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace graphhist
