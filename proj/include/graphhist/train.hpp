#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "graphhist/dataset.hpp"
#include "graphhist/model.hpp"

namespace graphhist {

enum class StopMetric { loss, f1 };
enum class EvalProtocol { held_out_val, test_as_val };

struct TrainConfig {
  double lr0 = 1e-4;
  double factor = 0.5;
  int patience = 2;
  int cooldown = 0;
  double lr_min = 1e-7;
  std::int64_t batch = 32;
  int stop_patience = 9;
  int max_epochs = 100;
  std::uint64_t seed = 0;
  bool oversample_train = false;
  double momentum = 0.0;  // plain SGD by default
  StopMetric stop_metric = StopMetric::loss;
  EvalProtocol eval_protocol = EvalProtocol::held_out_val;
  double val_fraction = 0.1;       // held_out_val carve from the training fold
  std::int64_t positive_class = 1;  // for binary precision/recall/F1
  bool track_train_accuracy = false;

  void validate() const;
};

/// Reduce-on-plateau state. Improvement is a strict inequality against the
/// best monitored value; after `patience` consecutive non-improving epochs
/// (outside cooldown) the rate drops to max(lr * factor, lr_min).
struct SchedulerState {
  double lr = 1e-4;
  double best = 0.0;
  bool has_best = false;
  int bad_epochs = 0;
  int cooldown_left = 0;
  bool higher_is_better = false;
};

SchedulerState make_scheduler(const TrainConfig& cfg);
/// Feeds one epoch's monitored value; returns the (possibly reduced) rate.
double scheduler_update(SchedulerState& state, const TrainConfig& cfg, double monitored);

/// True when the last `stop_patience` entries all failed to improve on the
/// best value seen before them.
bool early_stop(const std::vector<double>& history, int stop_patience, bool higher_is_better);

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::int64_t classes = 0;
  std::vector<std::int64_t> confusion;  // classes x classes, row = true label

  std::int64_t confusion_at(std::int64_t truth, std::int64_t pred) const {
    return confusion[static_cast<std::size_t>(truth * classes + pred)];
  }
};

/// Confusion-matrix derived metrics. Precision/recall/F1 treat
/// `positive_class` against the rest; F1 = 2PR/(P+R), defined as 0 when
/// P + R = 0.
Metrics compute_metrics(const std::vector<std::int64_t>& predictions,
                        const std::vector<std::int64_t>& labels, std::int64_t num_classes,
                        std::int64_t positive_class);

/// Optional momentum buffers; unused while momentum is 0.
struct SgdState {
  std::optional<ModelParams> velocity;
};

/// p <- p - lr * (g / batch_size). The loss is a sum over the batch, so the
/// division makes the step an average and keeps lr meaningful across batch
/// sizes.
void sgd_step(ModelParams& params, const ModelParams& grads, double lr, std::int64_t batch_size);
void sgd_step(ModelParams& params, const ModelParams& grads, double lr, std::int64_t batch_size,
              double momentum, SgdState& state);

struct EpochStats {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;  // mean per training graph
  double eval_loss = 0.0;   // mean per eval graph
  double eval_accuracy = 0.0;
  double eval_f1 = 0.0;
  double train_accuracy = -1.0;  // only when track_train_accuracy
};

struct FoldResult {
  ModelConfig config;
  ModelParams best_params;
  int best_epoch = 0;
  std::vector<EpochStats> history;
  Metrics metrics;  // on the eval indices, best-epoch parameters
};

/// Loss and metrics of `params` on the given dataset indices (eval mode).
struct EvalResult {
  double mean_loss = 0.0;
  Metrics metrics;
  Tensor probs;  // num_indices x m
};
EvalResult evaluate(const GraphDataset& ds, const std::vector<std::int64_t>& indices,
                    const ModelParams& params, const ModelConfig& cfg, std::int64_t batch_size,
                    std::int64_t positive_class);

/// One optimization run: optional oversampling, seeded per-epoch shuffles,
/// mini-batches, plateau scheduling and early stopping driven by the
/// monitored split, best-epoch parameters restored at the end.
FoldResult train_fold(const GraphDataset& ds, const std::vector<std::int64_t>& train_indices,
                      const std::vector<std::int64_t>& eval_indices, const ModelConfig& model_cfg,
                      const TrainConfig& train_cfg);

struct CvResult {
  std::vector<Metrics> fold_metrics;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // sample standard deviation
};

/// 10-fold (by default) cross-validation; fold seeds derive from
/// train_cfg.seed + fold index.
CvResult cross_validate(const GraphDataset& ds, const ModelConfig& model_cfg,
                        const TrainConfig& train_cfg, int n_folds = 10);

/// One line per epoch: epoch, lr, train loss, eval loss, eval accuracy
/// (and F1 in f1 mode).
void write_history_csv(const std::string& path, const std::vector<EpochStats>& history,
                       bool f1_mode);

}  // namespace graphhist
