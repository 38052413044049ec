#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "octskin/types.hpp"

namespace octskin {

struct PatchGeometry {
  std::string source_id;
  int row0 = 0;
  int col0 = 0;
  int patch_px = 0;
  friend bool operator==(const PatchGeometry&, const PatchGeometry&) = default;
};

struct Patch {
  Raster<float> image;
  std::optional<LabelMask> mask;
  PatchGeometry geometry;
};

struct PatchSet {
  std::vector<Patch> patches;
  int patch_px = 0;
  int stride_px = 0;

  std::size_t size() const { return patches.size(); }
  bool empty() const { return patches.empty(); }
};

/// Grid offsets along one axis: 0, stride, 2*stride, ... plus a final offset
/// clamped to `extent - patch_px` so the last patch touches the border.
std::vector<int> patch_offsets(int extent, int patch_px, int stride_px);

PatchSet extract_patches(const OctImage& img, const LabelMask* mask, int patch_px, int stride_px);
inline PatchSet extract_patches(const OctImage& img, const LabelMask& mask, int patch_px,
                                int stride_px) {
  return extract_patches(img, &mask, patch_px, stride_px);
}

/// Keeps patches whose mask holds at least `min_unique` distinct class ids.
PatchSet filter_background(const PatchSet& ps, int min_unique = 2);

/// Number of distinct class ids in a mask.
int distinct_classes(const LabelMask& mask);

using ProbabilityPatch = std::pair<ProbabilityMap, PatchGeometry>;

/// Coverage-weighted mean of overlapping patch distributions, renormalized
/// per pixel. Every output pixel must be covered; patches are accumulated in
/// the order given.
ProbabilityMap stitch(const std::vector<ProbabilityPatch>& prob_patches, int out_height,
                      int out_width);

/// Geometry index: one `source_id<TAB>row0<TAB>col0<TAB>patch_px` line per patch.
void save_geometry_index(const std::vector<PatchGeometry>& geoms, const std::filesystem::path& path);
std::vector<PatchGeometry> load_geometry_index(const std::filesystem::path& path);

/// Writes `patch_NNNNN_image.png` / `patch_NNNNN_mask.png` plus `patches.tsv`.
void save_patch_set(const PatchSet& ps, const std::filesystem::path& dir);

}  // namespace octskin
