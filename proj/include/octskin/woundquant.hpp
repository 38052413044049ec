#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "octskin/types.hpp"

namespace octskin {

struct ThicknessProfile {
  /// per_column_um[class][column], 0 where the class is absent.
  std::array<std::vector<double>, kNumClasses> per_column_um;
  /// Statistics over columns where the class is present; nullopt if absent everywhere.
  std::array<std::optional<double>, kNumClasses> mean_um;
  std::array<std::optional<double>, kNumClasses> std_um;
};

ThicknessProfile layer_thickness(const LabelMask& mask, double axial_um_per_px);

struct WoundExtent {
  std::vector<bool> wound_columns;
  double width_um = 0.0;
  double area_um2 = 0.0;
  /// Median epidermis thickness of intact columns (the depth proxy), if any.
  std::optional<double> reference_epidermis_um;
};

/// A column is wound-positive when it holds no epidermis pixel. Runs shorter
/// than `min_gap_px` are dropped. Area is width times the median thickness of
/// intact epidermis columns.
WoundExtent wound_extent(const LabelMask& mask, const Spacing& spacing, int min_gap_px = 3);

struct CurvePoint {
  int day = 0;
  double area_um2 = 0.0;
  double closure_frac = 0.0;
};

struct HealingCurve {
  std::vector<CurvePoint> points;
};

/// closure = clamp(1 - area(day) / area(day 0), 0, 1), sorted by day.
HealingCurve healing_curve(const std::vector<std::pair<int, WoundExtent>>& series);

/// CSV with header `day,area_um2,closure_frac`.
std::string healing_curve_csv(const HealingCurve& curve);
HealingCurve parse_healing_curve_csv(const std::string& text);

}  // namespace octskin
