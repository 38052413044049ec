#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "octskin/config.hpp"
#include "octskin/types.hpp"

namespace octskin {

/// Layered-skin phantom parameters. Thicknesses and intensities are ordered
/// epidermis, dermis, subcutaneous.
struct PhantomSpec {
  int height_px = 256;
  int width_px = 512;
  double top_margin_px = 40.0;
  std::array<double, 3> layer_mean_thickness_px{18.0, 70.0, 60.0};
  double boundary_wobble_px = 6.0;
  std::array<double, 3> layer_mean_intensity{0.85, 0.55, 0.3};
  double background_intensity = 0.06;
  double speckle_shape = 4.0;
  double wound_center_frac = 0.5;
  double wound_halfwidth_frac = 0.0;
  std::uint64_t seed = 0;
  Spacing spacing = {10.0, 25.0};

  /// Throws ParameterError on the first violated invariant.
  void validate() const;
  static PhantomSpec from_config(const RunConfig& cfg);
};

/// Per-column layer boundaries: rows [surface, epi/dermis, dermis/subcut,
/// subcut bottom). Rows below the last boundary are background.
struct PhantomGeometry {
  std::vector<std::array<int, 4>> boundaries;
  std::vector<bool> wound_columns;
};

struct Phantom {
  OctImage image;
  LabelMask mask;
  PhantomGeometry geometry;
};

/// Half-open column range [first, last) covered by the wound.
std::pair<int, int> wound_column_range(const PhantomSpec& spec);

/// Geometry only; depends on spec and seed, not on speckle.
PhantomGeometry phantom_geometry(const PhantomSpec& spec);

/// Deterministic in (spec, seed).
Phantom generate_phantom(const PhantomSpec& spec);

struct HealingPoint {
  OctImage image;
  LabelMask mask;
  int day = 0;
};

/// One phantom per halfwidth. All points share the base boundary geometry;
/// point i draws its speckle from seed + i and is assigned day 4*i.
std::vector<HealingPoint> generate_healing_series(const PhantomSpec& base,
                                                  const std::vector<double>& halfwidths);

}  // namespace octskin
