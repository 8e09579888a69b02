#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "naim/common.hpp"
#include "naim/data.hpp"
#include "naim/metrics.hpp"
#include "naim/missingness.hpp"
#include "naim/model.hpp"
#include "naim/optim.hpp"
#include "naim/tape.hpp"

namespace naim {

// "Improved" means better by more than this, absolutely; shared by the LR
// plateau schedule and early stopping.
constexpr double kImprovementThreshold = 1e-6;

struct TrainConfig {
  std::size_t max_epochs = 1500;
  std::size_t batch_size = 32;
  std::size_t patience = 50;        // early-stopping patience (post-warm-up)
  std::size_t warmup_epochs = 50;   // early stop and LR schedule frozen here
  std::size_t plateau_window = 25;  // stagnant epochs before an LR drop
  double lr_drop_factor = 10.0;
  double initial_lr = 1e-3;
  double l1 = 0.0;
  double l2 = 0.0;
  bool augmentation = true;
  std::uint64_t seed = 0;
  AdamConfig adam;

  void validate() const {
    if (max_epochs == 0 || batch_size == 0) throw DataError("TrainConfig: max_epochs and batch_size must be positive");
    if (patience == 0 || plateau_window == 0) throw DataError("TrainConfig: patience and plateau_window must be positive");
    if (lr_drop_factor <= 1.0) throw DataError("TrainConfig: lr_drop_factor must exceed 1");
    if (!(initial_lr > 0.0)) throw DataError("TrainConfig: initial_lr must be positive");
    if (l1 < 0.0 || l2 < 0.0) throw DataError("TrainConfig: l1/l2 must be non-negative");
  }
};

// Drops lr by the factor after `window` consecutive non-improving epochs;
// the stagnation counter resets on improvement or on a drop.
struct PlateauSchedule {
  double lr = 1e-3;
  std::size_t window = 25;
  double factor = 10.0;
  double best = std::numeric_limits<double>::infinity();
  std::size_t stagnant = 0;

  // Warm-up observation: track the best loss without counting stagnation.
  void observe(double val_loss) {
    if (best - val_loss > kImprovementThreshold) best = val_loss;
  }

  double step(double val_loss) {
    if (best - val_loss > kImprovementThreshold) {
      best = val_loss;
      stagnant = 0;
    } else if (++stagnant >= window) {
      lr /= factor;
      stagnant = 0;
    }
    return lr;
  }
};

// Stops after `patience` consecutive non-improving epochs.
struct EarlyStop {
  std::size_t patience = 50;
  double best = std::numeric_limits<double>::infinity();
  std::size_t stagnant = 0;

  void observe(double val_loss) {
    if (best - val_loss > kImprovementThreshold) best = val_loss;
  }

  bool step(double val_loss) {
    if (best - val_loss > kImprovementThreshold) {
      best = val_loss;
      stagnant = 0;
      return false;
    }
    return ++stagnant >= patience;
  }
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_auc = -1.0;  // -1 when not computable (non-binary task or single-class split)
  double lr = 0.0;        // rate in effect during the epoch
  std::size_t masked_cells = 0;  // augmentation masks drawn this epoch
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  std::size_t best_epoch = 0;  // 1-based epoch of the returned snapshot
  double best_val_loss = std::numeric_limits<double>::infinity();
};

struct TrainResult {
  NaimParameters params;  // snapshot from the best-validation-loss epoch
  TrainHistory history;
};

// Mean cross-entropy over a dataset, evaluated without augmentation.
inline double dataset_loss(NaimParameters& params, const TabularDataset& data,
                           std::size_t eval_batch = 128) {
  if (data.n == 0) throw DataError("dataset_loss: empty dataset");
  const std::size_t F = data.feature_count();
  double total = 0.0;
  for (std::size_t start = 0; start < data.n; start += eval_batch) {
    const std::size_t stop = std::min(data.n, start + eval_batch);
    Tape tape;
    TapeModel tm = bind_model(tape, params);
    std::vector<Tape::NodeId> logits;
    std::vector<int> labels;
    for (std::size_t r = start; r < stop; ++r) {
      std::vector<double> values(data.values.begin() + static_cast<std::ptrdiff_t>(r * F),
                                 data.values.begin() + static_cast<std::ptrdiff_t>((r + 1) * F));
      std::vector<std::uint8_t> present(data.present.begin() + static_cast<std::ptrdiff_t>(r * F),
                                        data.present.begin() + static_cast<std::ptrdiff_t>((r + 1) * F));
      logits.push_back(forward(tape, tm, values, present));
      labels.push_back(data.labels[r]);
    }
    Tape::NodeId loss = tape.cross_entropy_logits(tape.concat_rows(logits), labels);
    total += tape.value(loss).at(0, 0) * static_cast<double>(stop - start);
  }
  return total / static_cast<double>(data.n);
}

// Positive-class (class index 1) probability per sample; requires C == 2.
inline std::vector<double> predict_scores(NaimParameters& params, const TabularDataset& data,
                                          std::size_t eval_batch = 128) {
  if (params.spec.n_classes != 2)
    throw MetricError("predict_scores: positive-class scoring requires a binary task");
  const std::size_t F = data.feature_count();
  std::vector<double> scores;
  scores.reserve(data.n);
  for (std::size_t start = 0; start < data.n; start += eval_batch) {
    const std::size_t stop = std::min(data.n, start + eval_batch);
    Tape tape;
    TapeModel tm = bind_model(tape, params);
    for (std::size_t r = start; r < stop; ++r) {
      std::vector<double> values(data.values.begin() + static_cast<std::ptrdiff_t>(r * F),
                                 data.values.begin() + static_cast<std::ptrdiff_t>((r + 1) * F));
      std::vector<std::uint8_t> present(data.present.begin() + static_cast<std::ptrdiff_t>(r * F),
                                        data.present.begin() + static_cast<std::ptrdiff_t>((r + 1) * F));
      scores.push_back(softmax_vec(tape.value(forward(tape, tm, values, present)))[1]);
    }
  }
  return scores;
}

// Reference training protocol: seeded per-epoch shuffles, mini-batches
// (last partial batch kept), optional per-sample masking augmentation with a
// fresh mask each epoch, Adam, warm-up, plateau LR drops, early stopping on
// validation loss, best-epoch parameter snapshot.
inline TrainResult train(const NaimParameters& initial, const TabularDataset& train_set,
                         const TabularDataset& val_set, const TrainConfig& cfg) {
  cfg.validate();
  if (!train_set.encoded || !val_set.encoded) throw DataError("train: expects encoded datasets");
  if (train_set.n == 0 || val_set.n == 0) throw DataError("train: empty split");
  if (train_set.feature_count() != initial.spec.features.size())
    throw DataError("train: dataset arity does not match the model");

  TrainResult out;
  out.params = initial;
  NaimParameters& params = out.params;
  std::vector<NamedParam> named = params.named();
  AdamState adam;
  adam.config = cfg.adam;
  adam.init(named);

  PlateauSchedule schedule{cfg.initial_lr, cfg.plateau_window, cfg.lr_drop_factor};
  EarlyStop stopper{cfg.patience};
  NaimParameters best = params;
  std::size_t best_epoch = 0;
  double best_val = std::numeric_limits<double>::infinity();

  const std::size_t n = train_set.n;
  const std::size_t F = train_set.feature_count();
  std::vector<std::size_t> order(n);

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const double lr = schedule.lr;
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    {
      Rng shuffle_rng(mix64({cfg.seed, hash_str("shuffle"), epoch}));
      shuffle_rng.shuffle(order);
    }

    double epoch_loss = 0.0;
    std::size_t masked_cells = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t stop = std::min(n, start + cfg.batch_size);
      const std::size_t batch_index = start / cfg.batch_size;
      try {
        Tape tape;
        TapeModel tm = bind_model(tape, params);
        std::vector<Tape::NodeId> logits;
        std::vector<int> labels;
        for (std::size_t bi = start; bi < stop; ++bi) {
          const std::size_t r = order[bi];
          std::vector<double> values(train_set.values.begin() + static_cast<std::ptrdiff_t>(r * F),
                                     train_set.values.begin() + static_cast<std::ptrdiff_t>((r + 1) * F));
          std::vector<std::uint8_t> present(train_set.present.begin() + static_cast<std::ptrdiff_t>(r * F),
                                            train_set.present.begin() + static_cast<std::ptrdiff_t>((r + 1) * F));
          if (cfg.augmentation) {
            Rng aug_rng(mix64({cfg.seed, hash_str("augment"), epoch, r}));
            std::size_t before = 0;
            for (std::uint8_t p : present) before += p;
            present = augment_present(present, aug_rng);
            std::size_t after = 0;
            for (std::uint8_t p : present) after += p;
            masked_cells += before - after;
          }
          logits.push_back(forward(tape, tm, values, present));
          labels.push_back(train_set.labels[r]);
        }
        Tape::NodeId loss = tape.cross_entropy_logits(tape.concat_rows(logits), labels);
        epoch_loss += tape.value(loss).at(0, 0) * static_cast<double>(stop - start);
        tape.backward(loss);
        std::vector<const Tensor*> grads;
        grads.reserve(tm.ordered.size());
        for (Tape::NodeId id : tm.ordered) grads.push_back(&tape.grad(id));
        adam_step(named, grads, adam, lr, cfg.l2, cfg.l1);
      } catch (const NumericError& e) {
        throw NumericError("train: aborted at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_index) + ": " + e.what());
      }
    }
    epoch_loss /= static_cast<double>(n);

    const double val_loss = dataset_loss(params, val_set);
    double val_auc = -1.0;
    if (params.spec.n_classes == 2) {
      bool has0 = false, has1 = false;
      for (int y : val_set.labels) (y == 1 ? has1 : has0) = true;
      if (has0 && has1) val_auc = auc(predict_scores(params, val_set), val_set.labels);
    }

    out.history.epochs.push_back(EpochStats{epoch, epoch_loss, val_loss, val_auc, lr, masked_cells});

    if (val_loss < best_val) {
      best_val = val_loss;
      best_epoch = epoch;
      best = params;
    }

    // Both schedules are frozen during warm-up: they track the best loss but
    // count no stagnation, so neither LR drops nor stopping can fire early.
    if (epoch > cfg.warmup_epochs) {
      schedule.step(val_loss);
      if (stopper.step(val_loss)) break;
    } else {
      schedule.observe(val_loss);
      stopper.observe(val_loss);
    }
  }

  out.history.best_epoch = best_epoch;
  out.history.best_val_loss = best_val;
  out.params = std::move(best);
  return out;
}

}  // namespace naim
