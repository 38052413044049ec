#include "octskin/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace octskin {

namespace {

constexpr double kWoundDermisAttenuation = 0.6;

PhantomGeometry build_geometry(const PhantomSpec& spec, std::uint64_t geometry_seed) {
  std::mt19937_64 rng(geometry_seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);

  std::array<double, 4> nominal{};
  nominal[0] = spec.top_margin_px;
  for (int k = 0; k < 3; ++k) nominal[k + 1] = nominal[k] + spec.layer_mean_thickness_px[k];

  std::array<std::array<double, 2>, 4> phases{};
  for (auto& p : phases) p = {phase(rng), phase(rng)};
  // The epidermis base follows the surface, so epidermal thickness stays at its mean.
  phases[1] = phases[0];

  PhantomGeometry geo;
  geo.boundaries.resize(spec.width_px);
  geo.wound_columns.assign(spec.width_px, false);
  const double w = spec.width_px;
  for (int x = 0; x < spec.width_px; ++x) {
    std::array<int, 4> b{};
    for (int k = 0; k < 4; ++k) {
      const double t = 2.0 * std::numbers::pi * (x + 0.5) / w;
      const double wobble = spec.boundary_wobble_px *
                            (0.6 * std::sin(t + phases[k][0]) + 0.4 * std::sin(3.0 * t + phases[k][1]));
      b[k] = static_cast<int>(std::lround(nominal[k] + wobble));
    }
    b[0] = std::clamp(b[0], 0, spec.height_px);
    for (int k = 1; k < 4; ++k) b[k] = std::clamp(std::max(b[k], b[k - 1] + 1), 0, spec.height_px);
    geo.boundaries[x] = b;
  }
  const auto [first, last] = wound_column_range(spec);
  for (int x = first; x < last; ++x) geo.wound_columns[x] = true;
  return geo;
}

Phantom render(const PhantomSpec& spec, std::uint64_t geometry_seed, std::uint64_t speckle_seed) {
  spec.validate();
  Phantom ph;
  ph.geometry = build_geometry(spec, geometry_seed);
  ph.mask = LabelMask(spec.height_px, spec.width_px, 0);
  ph.image.pixels = Raster<float>(spec.height_px, spec.width_px);
  ph.image.spacing = spec.spacing;
  ph.image.subject_id = "phantom-" + std::to_string(speckle_seed);

  std::mt19937_64 rng(speckle_seed);
  std::gamma_distribution<double> speckle(spec.speckle_shape, 1.0 / spec.speckle_shape);

  for (int x = 0; x < spec.width_px; ++x) {
    const auto& b = ph.geometry.boundaries[x];
    const bool wound = ph.geometry.wound_columns[x];
    for (int r = b[0]; r < b[3]; ++r) {
      std::uint8_t cls = r < b[1] ? 1 : (r < b[2] ? 2 : 3);
      if (wound && cls == 1) cls = 0;
      ph.mask(r, x) = cls;
    }
  }
  // Row-major speckle draw keeps the stream independent of the mask layout.
  for (int r = 0; r < spec.height_px; ++r) {
    for (int x = 0; x < spec.width_px; ++x) {
      const std::uint8_t cls = ph.mask(r, x);
      double mean = cls == 0 ? spec.background_intensity : spec.layer_mean_intensity[cls - 1];
      if (cls == 2 && ph.geometry.wound_columns[x]) mean *= kWoundDermisAttenuation;
      ph.image.pixels(r, x) = static_cast<float>(std::clamp(mean * speckle(rng), 0.0, 1.0));
    }
  }
  return ph;
}

void require(bool ok, const char* what) {
  if (!ok) throw ParameterError(std::string("phantom: ") + what);
}

}  // namespace

void PhantomSpec::validate() const {
  require(height_px > 0 && width_px > 0, "height_px and width_px must be positive");
  require(top_margin_px >= 0, "top_margin_px must be non-negative");
  for (double t : layer_mean_thickness_px) require(t > 0, "layer thicknesses must be positive");
  for (double i : layer_mean_intensity) require(i > 0 && i <= 1, "layer intensities must lie in (0,1]");
  require(background_intensity >= 0 && background_intensity <= 1,
          "background intensity must lie in [0,1]");
  require(boundary_wobble_px >= 0, "boundary_wobble_px must be non-negative");
  require(speckle_shape > 0, "speckle_shape must be positive");
  require(wound_center_frac >= 0 && wound_center_frac <= 1, "wound_center_frac must lie in [0,1]");
  require(wound_halfwidth_frac >= 0 && wound_halfwidth_frac <= 1,
          "wound_halfwidth_frac must lie in [0,1]");
  require(top_margin_px + layer_mean_thickness_px[0] + layer_mean_thickness_px[1] +
                  layer_mean_thickness_px[2] <= height_px,
          "layer thicknesses plus top margin exceed height_px");
  require(spacing.axial_um_per_px > 0 && spacing.lateral_um_per_px > 0, "spacing must be positive");
}

PhantomSpec PhantomSpec::from_config(const RunConfig& cfg) {
  PhantomSpec s;
  s.height_px = static_cast<int>(cfg.get_int("phantom_height_px"));
  s.width_px = static_cast<int>(cfg.get_int("phantom_width_px"));
  s.top_margin_px = cfg.get_real("phantom_top_margin_px");
  s.layer_mean_thickness_px = {cfg.get_real("phantom_epidermis_px"), cfg.get_real("phantom_dermis_px"),
                               cfg.get_real("phantom_subcutaneous_px")};
  s.boundary_wobble_px = cfg.get_real("phantom_wobble_px");
  s.layer_mean_intensity = {cfg.get_real("phantom_epidermis_intensity"),
                            cfg.get_real("phantom_dermis_intensity"),
                            cfg.get_real("phantom_subcutaneous_intensity")};
  s.background_intensity = cfg.get_real("phantom_background_intensity");
  s.speckle_shape = cfg.get_real("phantom_speckle_shape");
  s.wound_center_frac = cfg.get_real("phantom_wound_center_frac");
  s.wound_halfwidth_frac = cfg.get_real("phantom_wound_halfwidth_frac");
  s.seed = static_cast<std::uint64_t>(cfg.get_int("phantom_seed"));
  s.spacing = {cfg.get_real("axial_um_per_px"), cfg.get_real("lateral_um_per_px")};
  return s;
}

std::pair<int, int> wound_column_range(const PhantomSpec& spec) {
  if (spec.wound_halfwidth_frac <= 0) return {0, 0};
  const double lo = std::clamp(spec.wound_center_frac - spec.wound_halfwidth_frac, 0.0, 1.0);
  const double hi = std::clamp(spec.wound_center_frac + spec.wound_halfwidth_frac, 0.0, 1.0);
  // Column x is inside when its center (x + 0.5) / W falls in [lo, hi).
  const double w = spec.width_px;
  const int first = std::clamp(static_cast<int>(std::ceil(lo * w - 0.5)), 0, spec.width_px);
  const int last = std::clamp(static_cast<int>(std::ceil(hi * w - 0.5)), first, spec.width_px);
  return {first, last};
}

PhantomGeometry phantom_geometry(const PhantomSpec& spec) {
  spec.validate();
  return build_geometry(spec, spec.seed);
}

Phantom generate_phantom(const PhantomSpec& spec) { return render(spec, spec.seed, spec.seed); }

std::vector<HealingPoint> generate_healing_series(const PhantomSpec& base,
                                                  const std::vector<double>& halfwidths) {
  std::vector<HealingPoint> out;
  out.reserve(halfwidths.size());
  for (std::size_t i = 0; i < halfwidths.size(); ++i) {
    if (!(halfwidths[i] >= 0)) throw ParameterError("phantom: halfwidths must be non-negative");
    PhantomSpec spec = base;
    spec.wound_halfwidth_frac = halfwidths[i];
    Phantom ph = render(spec, base.seed, base.seed + i);
    const int day = static_cast<int>(4 * i);
    ph.image.day = day;
    out.push_back({std::move(ph.image), std::move(ph.mask), day});
  }
  return out;
}

}  // namespace octskin
