#pragma once

#include <span>
#include <vector>

#include "octskin/metrics.hpp"
#include "octskin/types.hpp"

namespace octskin {

/// Non-negative member weights summing to 1 (within 1e-9).
class EnsembleWeights {
 public:
  explicit EnsembleWeights(std::vector<double> weights);
  static EnsembleWeights uniform(std::size_t k);

  std::size_t size() const { return w_.size(); }
  double operator[](std::size_t i) const { return w_[i]; }
  const std::vector<double>& values() const { return w_; }

 private:
  std::vector<double> w_;
};

/// p(i) = sum_j w_j p_j(i) per pixel. Renormalizes a pixel only when the
/// accumulated sum drifts from 1 by more than 1e-6.
ProbabilityMap combine_probabilities(std::span<const ProbabilityMap> members,
                                     const EnsembleWeights& weights);

/// Every weight vector on the k-simplex with spacing `step`, in ascending
/// lexicographic order. `step` must divide 1.
std::vector<std::vector<double>> simplex_grid(std::size_t k, double step);

struct WeightSearchResult {
  EnsembleWeights weights;
  double mean_iou = 0.0;
  /// Mean per-pixel negative log-likelihood of the chosen weights.
  double mean_nll = 0.0;
  /// mean IoU of every evaluated candidate, aligned with simplex_grid order.
  std::vector<double> candidate_scores;
  std::vector<double> candidate_nll;
};

/// Exhaustive simplex-grid search. `member_maps[j][v]` is member j's map for
/// validation item v; scores use a dataset-wide confusion matrix. Equal mean
/// IoU is decided by lower mean negative log-likelihood of the ground truth,
/// and remaining ties go to the lexicographically smallest weight vector.
WeightSearchResult grid_search_weights(const std::vector<std::vector<ProbabilityMap>>& member_maps,
                                       const std::vector<LabelMask>& ground_truth, double step = 0.1);

/// Dataset-level mean IoU of argmax(combine(maps, w)) against ground truth.
double ensemble_mean_iou(const std::vector<std::vector<ProbabilityMap>>& member_maps,
                         const std::vector<LabelMask>& ground_truth, const EnsembleWeights& w);

}  // namespace octskin
