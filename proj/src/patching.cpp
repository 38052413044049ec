#include "octskin/patching.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "octskin/config.hpp"
#include "octskin/data_io.hpp"

namespace octskin {

std::vector<int> patch_offsets(int extent, int patch_px, int stride_px) {
  if (patch_px < 1 || stride_px < 1 || stride_px > patch_px)
    throw ParameterError("patching: require 1 <= stride <= patch, got patch " +
                         std::to_string(patch_px) + ", stride " + std::to_string(stride_px));
  if (patch_px > extent)
    throw ParameterError("patching: patch " + std::to_string(patch_px) +
                         " is larger than the image side " + std::to_string(extent));
  std::vector<int> out;
  int off = 0;
  for (; off + patch_px <= extent; off += stride_px) out.push_back(off);
  if (out.back() + patch_px < extent) out.push_back(extent - patch_px);
  return out;
}

PatchSet extract_patches(const OctImage& img, const LabelMask* mask, int patch_px, int stride_px) {
  if (mask && (mask->height() != img.height() || mask->width() != img.width()))
    throw ContractError("extract_patches: mask shape differs from image shape");
  const auto rows = patch_offsets(img.height(), patch_px, stride_px);
  const auto cols = patch_offsets(img.width(), patch_px, stride_px);
  PatchSet ps;
  ps.patch_px = patch_px;
  ps.stride_px = stride_px;
  ps.patches.reserve(rows.size() * cols.size());
  for (int r0 : rows) {
    for (int c0 : cols) {
      Patch p;
      p.geometry = {img.subject_id, r0, c0, patch_px};
      p.image = Raster<float>(patch_px, patch_px);
      for (int r = 0; r < patch_px; ++r) {
        const auto src = img.pixels.row(r0 + r).subspan(c0, patch_px);
        std::copy(src.begin(), src.end(), p.image.row(r).begin());
      }
      if (mask) {
        LabelMask m(patch_px, patch_px);
        for (int r = 0; r < patch_px; ++r) {
          const auto src = mask->labels.row(r0 + r).subspan(c0, patch_px);
          std::copy(src.begin(), src.end(), m.labels.row(r).begin());
        }
        p.mask = std::move(m);
      }
      ps.patches.push_back(std::move(p));
    }
  }
  return ps;
}

int distinct_classes(const LabelMask& mask) {
  std::array<bool, 256> seen{};
  int n = 0;
  for (auto v : mask.labels.data())
    if (!seen[v]) {
      seen[v] = true;
      ++n;
    }
  return n;
}

PatchSet filter_background(const PatchSet& ps, int min_unique) {
  PatchSet out;
  out.patch_px = ps.patch_px;
  out.stride_px = ps.stride_px;
  for (std::size_t i = 0; i < ps.patches.size(); ++i) {
    const auto& p = ps.patches[i];
    if (!p.mask) throw ContractError("filter_background: patch " + std::to_string(i) + " has no mask");
    if (distinct_classes(*p.mask) >= min_unique) out.patches.push_back(p);
  }
  return out;
}

ProbabilityMap stitch(const std::vector<ProbabilityPatch>& prob_patches, int out_height, int out_width) {
  ProbabilityMap sum(out_height, out_width);
  Raster<int> coverage(out_height, out_width, 0);
  for (const auto& [pm, g] : prob_patches) {
    if (pm.height() != g.patch_px || pm.width() != g.patch_px)
      throw ContractError("stitch: patch map shape does not match its geometry");
    if (g.row0 < 0 || g.col0 < 0 || g.row0 + g.patch_px > out_height || g.col0 + g.patch_px > out_width)
      throw ContractError("stitch: patch at (" + std::to_string(g.row0) + "," + std::to_string(g.col0) +
                          ") exceeds the output frame");
    for (int c = 0; c < kNumClasses; ++c)
      for (int r = 0; r < g.patch_px; ++r)
        for (int x = 0; x < g.patch_px; ++x) sum(c, g.row0 + r, g.col0 + x) += pm(c, r, x);
    for (int r = 0; r < g.patch_px; ++r)
      for (int x = 0; x < g.patch_px; ++x) ++coverage(g.row0 + r, g.col0 + x);
  }
  for (int r = 0; r < out_height; ++r) {
    for (int x = 0; x < out_width; ++x) {
      const int n = coverage(r, x);
      if (n == 0)
        throw CoverageError("stitch: pixel (row " + std::to_string(r) + ", col " + std::to_string(x) +
                            ") is not covered by any patch");
      double total = 0.0;
      for (int c = 0; c < kNumClasses; ++c) {
        sum(c, r, x) /= n;
        total += sum(c, r, x);
      }
      if (total > 0.0 && total != 1.0)
        for (int c = 0; c < kNumClasses; ++c) sum(c, r, x) /= total;
    }
  }
  return sum;
}

void save_geometry_index(const std::vector<PatchGeometry>& geoms, const std::filesystem::path& path) {
  std::ostringstream ss;
  for (const auto& g : geoms)
    ss << g.source_id << '\t' << g.row0 << '\t' << g.col0 << '\t' << g.patch_px << '\n';
  write_text_atomic(path, ss.str());
}

std::vector<PatchGeometry> load_geometry_index(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::vector<PatchGeometry> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cols = split(line, '\t');
    if (cols.size() != 4)
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected 4 fields");
    out.push_back({cols[0], static_cast<int>(parse_int(cols[1], "row0")),
                   static_cast<int>(parse_int(cols[2], "col0")),
                   static_cast<int>(parse_int(cols[3], "patch_px"))});
  }
  return out;
}

void save_patch_set(const PatchSet& ps, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<PatchGeometry> geoms;
  char name[64];
  for (std::size_t i = 0; i < ps.patches.size(); ++i) {
    const auto& p = ps.patches[i];
    OctImage img;
    img.pixels = p.image;
    std::snprintf(name, sizeof name, "patch_%05zu_image.png", i);
    save_image(img, dir / name);
    if (p.mask) {
      std::snprintf(name, sizeof name, "patch_%05zu_mask.png", i);
      save_mask(*p.mask, dir / name);
    }
    geoms.push_back(p.geometry);
  }
  save_geometry_index(geoms, dir / "patches.tsv");
}

}  // namespace octskin
