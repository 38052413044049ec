#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "octskin/config.hpp"
#include "octskin/metrics.hpp"
#include "octskin/patching.hpp"
#include "octskin/segnet.hpp"

namespace octskin {

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_mean_iou = 0.0;
  double seconds = 0.0;
};

struct Hyperparams {
  double learning_rate = 1e-5;
  int epochs = 30;
  int batch_size = 8;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double val_fraction = 0.2;
  std::uint64_t split_seed = 0;
  /// Seeds batch shuffling.
  std::uint64_t train_seed = 0;
  bool split_by_image = false;
  /// Called after every epoch, e.g. for progress output.
  std::function<void(const EpochRecord&)> on_epoch;

  void validate() const;
  static Hyperparams from_config(const RunConfig& cfg);
};

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  std::vector<double> val_mean_iou;
  /// Index of the epoch with the highest validation mean IoU; -1 before any epoch.
  int best_epoch = -1;

  std::size_t epochs() const { return train_loss.size(); }
  /// `epoch,train_loss,val_loss,val_mean_iou` with a header row; epochs are 1-based.
  std::string to_csv() const;
  static TrainHistory from_csv(const std::string& text);
};

class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, TrainHistory history)
      : Error(what), history_(std::move(history)) {}
  const TrainHistory& history() const { return history_; }

 private:
  TrainHistory history_;
};

/// Disjoint, exhaustive split with ceil((1 - f) * n) training patches.
/// With `by_image`, whole source images are assigned to one side and the
/// training side is filled until it reaches that size.
std::pair<PatchSet, PatchSet> split_dataset(const PatchSet& ps, double val_fraction, std::uint64_t seed,
                                            bool by_image = false);

/// Mean over pixels of -log p(true class), with p clamped to >= 1e-12.
double cross_entropy(const ProbabilityMap& pm, const LabelMask& mask);

struct Evaluation {
  double loss = 0.0;
  double mean_iou = 0.0;
  ConfusionMatrix confusion;
};

/// Eval-mode pass over labelled patches: mean cross-entropy and dataset-level IoU.
Evaluation evaluate(const Model& model, const PatchSet& patches, int batch_size = 8);

struct TrainResult {
  Model model;
  TrainHistory history;
  /// Training and validation patches actually used.
  PatchSet train_split;
  PatchSet val_split;
};

/// Adam mini-batch training with per-epoch validation. The returned model
/// carries the weights of the best validation mean IoU epoch.
TrainResult train(Model model, const PatchSet& data, const Hyperparams& hp);

}  // namespace octskin
