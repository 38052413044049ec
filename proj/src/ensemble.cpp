#include "octskin/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace octskin {

EnsembleWeights::EnsembleWeights(std::vector<double> weights) : w_(std::move(weights)) {
  if (w_.empty()) throw ContractError("ensemble weights: need at least one member");
  double sum = 0.0;
  for (double v : w_) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ContractError("ensemble weights must be non-negative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw ContractError("ensemble weights must sum to 1, got " + std::to_string(sum));
}

EnsembleWeights EnsembleWeights::uniform(std::size_t k) {
  if (k == 0) throw ContractError("ensemble weights: need at least one member");
  return EnsembleWeights(std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

ProbabilityMap combine_probabilities(std::span<const ProbabilityMap> members,
                                     const EnsembleWeights& weights) {
  if (members.size() != weights.size())
    throw ContractError("ensemble: " + std::to_string(members.size()) + " member maps but " +
                        std::to_string(weights.size()) + " weights");
  const int h = members[0].height(), w = members[0].width();
  for (const auto& m : members)
    if (m.height() != h || m.width() != w) throw ContractError("ensemble: member output shapes differ");
  if (members.size() == 1) return members[0];

  ProbabilityMap out(h, w);
  auto& acc = out.data();
  for (std::size_t j = 0; j < members.size(); ++j) {
    const double wj = weights[j];
    const auto& src = members[j].data();
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += wj * src[i];
  }
  const std::size_t n = out.plane_size();
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (int c = 0; c < kNumClasses; ++c) total += acc[c * n + i];
    if (std::abs(total - 1.0) > 1e-6 && total > 0.0)
      for (int c = 0; c < kNumClasses; ++c) acc[c * n + i] /= total;
  }
  return out;
}

std::vector<std::vector<double>> simplex_grid(std::size_t k, double step) {
  if (k == 0) throw ContractError("simplex_grid: k must be positive");
  if (!(step > 0.0) || step > 1.0) throw ContractError("simplex_grid: step must lie in (0,1]");
  const double inv = 1.0 / step;
  const long long n = std::llround(inv);
  if (std::abs(inv - static_cast<double>(n)) > 1e-9)
    throw ContractError("simplex_grid: step " + std::to_string(step) + " does not divide 1");

  std::vector<std::vector<double>> out;
  std::vector<long long> units(k, 0);
  // Enumerate compositions of n into k parts in ascending lexicographic order.
  auto recurse = [&](auto&& self, std::size_t pos, long long remaining) -> void {
    if (pos + 1 == k) {
      units[pos] = remaining;
      std::vector<double> w(k);
      for (std::size_t i = 0; i < k; ++i) w[i] = static_cast<double>(units[i]) / static_cast<double>(n);
      out.push_back(std::move(w));
      return;
    }
    for (long long u = 0; u <= remaining; ++u) {
      units[pos] = u;
      self(self, pos + 1, remaining - u);
    }
  };
  recurse(recurse, 0, n);
  return out;
}

namespace {

struct CandidateScore {
  double mean_iou;
  double mean_nll;
};

CandidateScore score_candidate(const std::vector<std::vector<ProbabilityMap>>& member_maps,
                               const std::vector<LabelMask>& ground_truth, const EnsembleWeights& w) {
  ConfusionMatrix cm;
  double nll = 0.0;
  std::vector<ProbabilityMap> item(member_maps.size());
  for (std::size_t v = 0; v < ground_truth.size(); ++v) {
    for (std::size_t j = 0; j < member_maps.size(); ++j) item[j] = member_maps[j][v];
    const ProbabilityMap combined = combine_probabilities(item, w);
    const LabelMask& gt = ground_truth[v];
    cm += confusion(argmax_mask(combined), gt);
    for (int r = 0; r < gt.labels.height(); ++r)
      for (int c = 0; c < gt.labels.width(); ++c) nll -= std::log(std::max(combined(gt(r, c), r, c), 1e-12));
  }
  return {iou(cm).mean_iou, nll / static_cast<double>(cm.total())};
}

}  // namespace

double ensemble_mean_iou(const std::vector<std::vector<ProbabilityMap>>& member_maps,
                         const std::vector<LabelMask>& ground_truth, const EnsembleWeights& w) {
  return score_candidate(member_maps, ground_truth, w).mean_iou;
}

WeightSearchResult grid_search_weights(const std::vector<std::vector<ProbabilityMap>>& member_maps,
                                       const std::vector<LabelMask>& ground_truth, double step) {
  if (ground_truth.empty()) throw ContractError("optimize_weights: empty validation set");
  if (member_maps.empty()) throw ContractError("optimize_weights: no members");
  for (const auto& m : member_maps)
    if (m.size() != ground_truth.size())
      throw ContractError("optimize_weights: every member needs one map per validation item");

  const auto grid = simplex_grid(member_maps.size(), step);
  WeightSearchResult best{EnsembleWeights(grid.front()), -1.0, 0.0, {}, {}};
  for (const auto& cand : grid) {
    const EnsembleWeights w(cand);
    const CandidateScore s = score_candidate(member_maps, ground_truth, w);
    best.candidate_scores.push_back(s.mean_iou);
    best.candidate_nll.push_back(s.mean_nll);
    // Grid order is lexicographic, so keeping the first of equals settles the last tie.
    const bool better = s.mean_iou > best.mean_iou ||
                        (s.mean_iou == best.mean_iou && s.mean_nll < best.mean_nll - 1e-12);
    if (better) {
      best.mean_iou = s.mean_iou;
      best.mean_nll = s.mean_nll;
      best.weights = w;
    }
  }
  return best;
}

}  // namespace octskin
