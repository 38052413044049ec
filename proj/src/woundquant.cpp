#include "octskin/woundquant.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "octskin/config.hpp"

namespace octskin {

ThicknessProfile layer_thickness(const LabelMask& mask, double axial_um_per_px) {
  if (!(axial_um_per_px > 0)) throw ParameterError("layer_thickness: spacing must be positive");
  const int h = mask.height(), w = mask.width();
  ThicknessProfile tp;
  std::array<std::vector<int>, kNumClasses> counts;
  for (auto& c : counts) c.assign(w, 0);
  for (int r = 0; r < h; ++r) {
    const auto row = mask.labels.row(r);
    for (int x = 0; x < w; ++x) {
      if (row[x] >= kNumClasses) throw SchemaError("layer_thickness: class id out of range");
      ++counts[row[x]][x];
    }
  }
  for (int c = 0; c < kNumClasses; ++c) {
    auto& col = tp.per_column_um[c];
    col.resize(w);
    double sum = 0.0, sumsq = 0.0;
    int present = 0;
    for (int x = 0; x < w; ++x) {
      col[x] = counts[c][x] * axial_um_per_px;
      if (counts[c][x] > 0) {
        sum += col[x];
        ++present;
      }
    }
    if (present == 0) continue;
    const double mean = sum / present;
    for (int x = 0; x < w; ++x)
      if (counts[c][x] > 0) sumsq += (col[x] - mean) * (col[x] - mean);
    tp.mean_um[c] = mean;
    tp.std_um[c] = std::sqrt(sumsq / present);
  }
  return tp;
}

WoundExtent wound_extent(const LabelMask& mask, const Spacing& spacing, int min_gap_px) {
  if (min_gap_px < 1) throw ParameterError("wound_extent: min_gap_px must be at least 1");
  const int w = mask.width();
  const ThicknessProfile tp = layer_thickness(mask, spacing.axial_um_per_px);
  const auto& epi = tp.per_column_um[1];

  WoundExtent we;
  we.wound_columns.assign(w, false);
  for (int x = 0; x < w;) {
    if (epi[x] > 0) {
      ++x;
      continue;
    }
    int end = x;
    while (end < w && epi[end] == 0) ++end;
    if (end - x >= min_gap_px) std::fill(we.wound_columns.begin() + x, we.wound_columns.begin() + end, true);
    x = end;
  }

  std::vector<double> intact;
  for (int x = 0; x < w; ++x)
    if (epi[x] > 0) intact.push_back(epi[x]);
  if (!intact.empty()) {
    const auto mid = intact.begin() + static_cast<long>(intact.size() / 2);
    std::nth_element(intact.begin(), mid, intact.end());
    double med = *mid;
    if (intact.size() % 2 == 0) med = 0.5 * (med + *std::max_element(intact.begin(), mid));
    we.reference_epidermis_um = med;
  }

  const auto n_wound = std::count(we.wound_columns.begin(), we.wound_columns.end(), true);
  we.width_um = static_cast<double>(n_wound) * spacing.lateral_um_per_px;
  if (n_wound == 0) return we;
  if (!we.reference_epidermis_um)
    throw DegenerateInputError(
        "wound_extent: no column with intact epidermis to derive the depth proxy; "
        "fall back to width_um alone for this image");
  we.area_um2 = we.width_um * *we.reference_epidermis_um;
  return we;
}

HealingCurve healing_curve(const std::vector<std::pair<int, WoundExtent>>& series) {
  std::vector<std::pair<int, double>> pts;
  for (const auto& [day, we] : series) pts.emplace_back(day, we.area_um2);
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (pts[i].first == pts[i - 1].first)
      throw ContractError("healing_curve: day " + std::to_string(pts[i].first) + " appears twice");
  if (pts.empty() || pts.front().first != 0)
    throw ContractError("healing_curve: the series must contain day 0");
  const double base = pts.front().second;
  if (!(base > 0)) throw ContractError("healing_curve: day-0 wound area must be positive");

  HealingCurve curve;
  for (const auto& [day, area] : pts)
    curve.points.push_back({day, area, std::clamp(1.0 - area / base, 0.0, 1.0)});
  return curve;
}

std::string healing_curve_csv(const HealingCurve& curve) {
  std::ostringstream ss;
  ss.precision(10);
  ss << "day,area_um2,closure_frac\n";
  for (const auto& p : curve.points) ss << p.day << ',' << p.area_um2 << ',' << p.closure_frac << '\n';
  return ss.str();
}

HealingCurve parse_healing_curve_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  HealingCurve curve;
  bool header = true;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    const auto cols = split(line, ',');
    if (cols.size() < 3) throw FormatError("healing CSV: expected day,area_um2,closure_frac");
    curve.points.push_back({static_cast<int>(parse_int(cols[0], "day")), parse_double(cols[1], "area_um2"),
                            parse_double(cols[2], "closure_frac")});
  }
  return curve;
}

}  // namespace octskin
