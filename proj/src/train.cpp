#include "graphhist/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

#include "graphhist/rng.hpp"

namespace graphhist {

void TrainConfig::validate() const {
  if (factor <= 0.0 || factor >= 1.0) throw std::invalid_argument("train: factor outside (0, 1)");
  if (lr_min > lr0) throw std::invalid_argument("train: lr_min exceeds lr0");
  if (batch < 1) throw std::invalid_argument("train: batch must be positive");
  if (patience < 1) throw std::invalid_argument("train: patience must be positive");
  if (stop_patience < 1) throw std::invalid_argument("train: stop_patience must be positive");
  if (max_epochs < 1) throw std::invalid_argument("train: max_epochs must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw std::invalid_argument("train: momentum outside [0, 1)");
  if (val_fraction <= 0.0 || val_fraction >= 1.0) {
    throw std::invalid_argument("train: val_fraction outside (0, 1)");
  }
}

SchedulerState make_scheduler(const TrainConfig& cfg) {
  SchedulerState s;
  s.lr = cfg.lr0;
  s.higher_is_better = cfg.stop_metric == StopMetric::f1;
  return s;
}

double scheduler_update(SchedulerState& state, const TrainConfig& cfg, double monitored) {
  const bool improved =
      !state.has_best ||
      (state.higher_is_better ? monitored > state.best : monitored < state.best);
  if (improved) {
    state.best = monitored;
    state.has_best = true;
    state.bad_epochs = 0;
  } else if (state.cooldown_left == 0) {
    ++state.bad_epochs;
  }
  if (state.cooldown_left > 0) --state.cooldown_left;
  if (state.bad_epochs >= cfg.patience) {
    state.lr = std::max(state.lr * cfg.factor, cfg.lr_min);
    state.bad_epochs = 0;
    state.cooldown_left = cfg.cooldown;
  }
  return state.lr;
}

bool early_stop(const std::vector<double>& history, int stop_patience, bool higher_is_better) {
  if (history.empty()) return false;
  std::size_t best_index = 0;
  for (std::size_t i = 1; i < history.size(); ++i) {
    const bool improved = higher_is_better ? history[i] > history[best_index]
                                           : history[i] < history[best_index];
    if (improved) best_index = i;
  }
  return history.size() - 1 - best_index >= static_cast<std::size_t>(stop_patience);
}

Metrics compute_metrics(const std::vector<std::int64_t>& predictions,
                        const std::vector<std::int64_t>& labels, std::int64_t num_classes,
                        std::int64_t positive_class) {
  if (predictions.size() != labels.size()) {
    throw std::invalid_argument("compute_metrics: predictions and labels differ in length");
  }
  Metrics m;
  m.classes = num_classes;
  m.confusion.assign(static_cast<std::size_t>(num_classes * num_classes), 0);
  std::int64_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ++m.confusion[static_cast<std::size_t>(labels[i] * num_classes + predictions[i])];
    if (labels[i] == predictions[i]) ++correct;
  }
  m.accuracy = labels.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(labels.size());

  std::int64_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool pred_pos = predictions[i] == positive_class;
    const bool true_pos = labels[i] == positive_class;
    if (pred_pos && true_pos) ++tp;
    if (pred_pos && !true_pos) ++fp;
    if (!pred_pos && true_pos) ++fn;
  }
  m.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  m.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                                      : 0.0;
  return m;
}

namespace {

std::vector<Tensor*> tensor_list(ModelParams& p) {
  std::vector<Tensor*> out;
  p.for_each([&out](const std::string&, Tensor& t) { out.push_back(&t); });
  return out;
}

std::vector<const Tensor*> tensor_list(const ModelParams& p) {
  std::vector<const Tensor*> out;
  p.for_each([&out](const std::string&, const Tensor& t) { out.push_back(&t); });
  return out;
}

}  // namespace

void sgd_step(ModelParams& params, const ModelParams& grads, double lr, std::int64_t batch_size) {
  SgdState none;
  sgd_step(params, grads, lr, batch_size, 0.0, none);
}

void sgd_step(ModelParams& params, const ModelParams& grads, double lr, std::int64_t batch_size,
              double momentum, SgdState& state) {
  auto ps = tensor_list(params);
  auto gs = tensor_list(grads);
  const double inv_batch = 1.0 / static_cast<double>(batch_size);
  if (momentum == 0.0) {
    for (std::size_t t = 0; t < ps.size(); ++t) {
      Tensor& p = *ps[t];
      const Tensor& g = *gs[t];
      for (std::int64_t i = 0; i < p.numel(); ++i) p[i] -= lr * g[i] * inv_batch;
    }
    return;
  }
  if (!state.velocity) {
    state.velocity = params;
    state.velocity->for_each([](const std::string&, Tensor& t) { t.fill(0.0); });
  }
  auto vs = tensor_list(*state.velocity);
  for (std::size_t t = 0; t < ps.size(); ++t) {
    Tensor& p = *ps[t];
    Tensor& v = *vs[t];
    const Tensor& g = *gs[t];
    for (std::int64_t i = 0; i < p.numel(); ++i) {
      v[i] = momentum * v[i] + g[i] * inv_batch;
      p[i] -= lr * v[i];
    }
  }
}

EvalResult evaluate(const GraphDataset& ds, const std::vector<std::int64_t>& indices,
                    const ModelParams& params, const ModelConfig& cfg, std::int64_t batch_size,
                    std::int64_t positive_class) {
  EvalResult out;
  out.probs = Tensor({static_cast<std::int64_t>(indices.size()), cfg.classes});
  std::vector<std::int64_t> predictions, truth;
  predictions.reserve(indices.size());
  truth.reserve(indices.size());
  double loss_sum = 0.0;
  Rng rng(0);  // dropout is an identity in eval mode; never drawn
  for (std::size_t start = 0; start < indices.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(indices.size(), start + static_cast<std::size_t>(batch_size));
    const std::vector<std::int64_t> chunk(indices.begin() + static_cast<std::ptrdiff_t>(start),
                                          indices.begin() + static_cast<std::ptrdiff_t>(end));
    const Batch batch = make_batch(ds, chunk);
    const ForwardResult res = forward(batch, params, cfg, false, rng);
    loss_sum += res.loss;
    for (std::size_t b = 0; b < chunk.size(); ++b) {
      std::int64_t arg = 0;
      for (std::int64_t j = 0; j < cfg.classes; ++j) {
        const double v = res.probs(static_cast<std::int64_t>(b), j);
        out.probs(static_cast<std::int64_t>(start + b), j) = v;
        if (v > res.probs(static_cast<std::int64_t>(b), arg)) arg = j;
      }
      predictions.push_back(arg);
      truth.push_back(batch.labels[b]);
    }
  }
  out.mean_loss = indices.empty() ? 0.0 : loss_sum / static_cast<double>(indices.size());
  out.metrics = compute_metrics(predictions, truth, cfg.classes, positive_class);
  return out;
}

namespace {

/// Stratified carve of a validation split from the training indices.
void carve_validation(const GraphDataset& ds, const std::vector<std::int64_t>& train,
                      double fraction, std::uint64_t seed, std::vector<std::int64_t>& fit,
                      std::vector<std::int64_t>& val) {
  std::map<std::int64_t, std::vector<std::int64_t>> per_class;
  for (std::int64_t i : train) per_class[ds.labels[static_cast<std::size_t>(i)]].push_back(i);
  for (auto& [cls, members] : per_class) {
    Rng rng(Rng::derive(seed, 7000 + static_cast<std::uint64_t>(cls)));
    rng.shuffle(members);
    std::size_t take = static_cast<std::size_t>(
        std::floor(fraction * static_cast<double>(members.size()) + 0.5));
    take = std::max<std::size_t>(1, std::min(take, members.size() - 1));
    for (std::size_t i = 0; i < members.size(); ++i) {
      (i < take ? val : fit).push_back(members[i]);
    }
  }
  std::sort(fit.begin(), fit.end());
  std::sort(val.begin(), val.end());
}

}  // namespace

FoldResult train_fold(const GraphDataset& ds, const std::vector<std::int64_t>& train_indices,
                      const std::vector<std::int64_t>& eval_indices, const ModelConfig& model_cfg,
                      const TrainConfig& train_cfg) {
  model_cfg.validate();
  train_cfg.validate();
  if (train_indices.empty() || eval_indices.empty()) {
    throw std::invalid_argument("train_fold: empty train or eval split");
  }

  std::vector<std::int64_t> fit = train_indices;
  std::vector<std::int64_t> monitor = eval_indices;
  if (train_cfg.eval_protocol == EvalProtocol::held_out_val) {
    fit.clear();
    monitor.clear();
    carve_validation(ds, train_indices, train_cfg.val_fraction, train_cfg.seed, fit, monitor);
  }
  if (train_cfg.oversample_train) {
    fit = oversample(fit, ds.labels, Rng::derive(train_cfg.seed, 11));
  }

  FoldResult result;
  result.config = model_cfg;
  ModelParams params = init_params(model_cfg, train_cfg.seed);
  SchedulerState scheduler = make_scheduler(train_cfg);
  SgdState sgd_state;
  const bool higher = train_cfg.stop_metric == StopMetric::f1;
  const bool monitor_is_eval = train_cfg.eval_protocol == EvalProtocol::test_as_val;

  std::vector<double> monitored_history;
  double best_value = 0.0;
  bool has_best = false;

  for (int epoch = 1; epoch <= train_cfg.max_epochs; ++epoch) {
    std::vector<std::int64_t> order = fit;
    Rng shuffle_rng(Rng::derive(train_cfg.seed, 2000 + static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);
    Rng dropout_rng(Rng::derive(train_cfg.seed, 100000 + static_cast<std::uint64_t>(epoch)));

    double train_loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(train_cfg.batch)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(train_cfg.batch));
      const std::vector<std::int64_t> chunk(order.begin() + static_cast<std::ptrdiff_t>(start),
                                            order.begin() + static_cast<std::ptrdiff_t>(end));
      const Batch batch = make_batch(ds, chunk);
      Tape tape;
      ModelParams grads = zero_params(model_cfg);
      const ForwardResult res = forward(batch, params, model_cfg, true, dropout_rng, &tape, &grads);
      backward(tape);
      sgd_step(params, grads, scheduler.lr, static_cast<std::int64_t>(chunk.size()),
               train_cfg.momentum, sgd_state);
      train_loss_sum += res.loss;
    }

    const EvalResult eval_res =
        evaluate(ds, eval_indices, params, model_cfg, train_cfg.batch, train_cfg.positive_class);
    const EvalResult monitor_res =
        monitor_is_eval ? eval_res
                        : evaluate(ds, monitor, params, model_cfg, train_cfg.batch,
                                   train_cfg.positive_class);
    const double monitored = higher ? monitor_res.metrics.f1 : monitor_res.mean_loss;

    EpochStats stats;
    stats.epoch = epoch;
    stats.lr = scheduler.lr;  // rate in effect during this epoch
    stats.train_loss = order.empty() ? 0.0 : train_loss_sum / static_cast<double>(order.size());
    stats.eval_loss = eval_res.mean_loss;
    stats.eval_accuracy = eval_res.metrics.accuracy;
    stats.eval_f1 = eval_res.metrics.f1;
    if (train_cfg.track_train_accuracy) {
      stats.train_accuracy = evaluate(ds, train_indices, params, model_cfg, train_cfg.batch,
                                      train_cfg.positive_class)
                                 .metrics.accuracy;
    }
    result.history.push_back(stats);

    const bool improved = !has_best || (higher ? monitored > best_value : monitored < best_value);
    if (improved) {
      best_value = monitored;
      has_best = true;
      result.best_params = params;
      result.best_epoch = epoch;
    }

    scheduler_update(scheduler, train_cfg, monitored);
    monitored_history.push_back(monitored);
    if (early_stop(monitored_history, train_cfg.stop_patience, higher)) break;
  }

  result.metrics = evaluate(ds, eval_indices, result.best_params, model_cfg, train_cfg.batch,
                            train_cfg.positive_class)
                       .metrics;
  return result;
}

CvResult cross_validate(const GraphDataset& ds, const ModelConfig& model_cfg,
                        const TrainConfig& train_cfg, int n_folds) {
  const FoldPlan plan = split_folds(ds, n_folds, train_cfg.seed);
  CvResult result;
  double sum = 0.0;
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    TrainConfig fold_cfg = train_cfg;
    fold_cfg.seed = train_cfg.seed + f;
    const FoldResult fold =
        train_fold(ds, plan.folds[f].first, plan.folds[f].second, model_cfg, fold_cfg);
    result.fold_metrics.push_back(fold.metrics);
    sum += fold.metrics.accuracy;
  }
  const double n = static_cast<double>(result.fold_metrics.size());
  result.mean_accuracy = sum / n;
  double sq = 0.0;
  for (const Metrics& m : result.fold_metrics) {
    sq += (m.accuracy - result.mean_accuracy) * (m.accuracy - result.mean_accuracy);
  }
  result.std_accuracy = result.fold_metrics.size() > 1 ? std::sqrt(sq / (n - 1.0)) : 0.0;
  return result;
}

void write_history_csv(const std::string& path, const std::vector<EpochStats>& history,
                       bool f1_mode) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write history: " + path);
  out << "epoch,lr,train_loss,eval_loss,eval_accuracy";
  if (f1_mode) out << ",eval_f1";
  out << "\n";
  char buf[256];
  for (const EpochStats& s : history) {
    if (f1_mode) {
      std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.epoch, s.lr,
                    s.train_loss, s.eval_loss, s.eval_accuracy, s.eval_f1);
    } else {
      std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n", s.epoch, s.lr, s.train_loss,
                    s.eval_loss, s.eval_accuracy);
    }
    out << buf;
  }
}

}  // namespace graphhist
