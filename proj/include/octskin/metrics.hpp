#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "octskin/types.hpp"

namespace octskin {

/// counts[gt][pred]. Matrices over disjoint pixel sets merge by addition.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts{};

  std::uint64_t total() const;
  ConfusionMatrix& operator+=(const ConfusionMatrix& o);
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct IoUReport {
  /// nullopt marks a class with empty union (absent from both masks).
  std::array<std::optional<double>, kNumClasses> per_class{};
  double mean_iou = 0.0;
};

ConfusionMatrix confusion(const LabelMask& pred, const LabelMask& gt);

/// Per-class IoU from a confusion matrix; undefined classes are excluded
/// from the mean. Throws MetricError when no class is defined.
IoUReport iou(const ConfusionMatrix& cm);

/// Chance-corrected per-pixel agreement. Degenerate p_e == 1 yields 1.
double cohen_kappa(const LabelMask& a, const LabelMask& b);

}  // namespace octskin
