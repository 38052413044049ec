#include "octskin/types.hpp"

#include <algorithm>
#include <cmath>

namespace octskin {

double ProbabilityMap::max_normalization_error() const {
  double worst = 0.0;
  const std::size_t n = plane_size();
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int c = 0; c < kNumClasses; ++c) sum += probs_[c * n + i];
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  return worst;
}

ProbabilityMap one_hot(const LabelMask& mask) {
  ProbabilityMap pm(mask.height(), mask.width());
  const auto& ids = mask.labels.data();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= kNumClasses) throw SchemaError("one_hot: class id out of range");
    pm.data()[ids[i] * pm.plane_size() + i] = 1.0;
  }
  return pm;
}

LabelMask argmax_mask(const ProbabilityMap& pm) {
  LabelMask mask(pm.height(), pm.width());
  const std::size_t n = pm.plane_size();
  const auto& p = pm.data();
  auto& out = mask.labels.data();
  for (std::size_t i = 0; i < n; ++i) {
    int best = 0;
    for (int c = 1; c < kNumClasses; ++c)
      if (p[c * n + i] > p[best * n + i]) best = c;
    out[i] = static_cast<std::uint8_t>(best);
  }
  return mask;
}

}  // namespace octskin
