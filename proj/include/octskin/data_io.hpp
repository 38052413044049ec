#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "octskin/types.hpp"

namespace octskin {

namespace fs = std::filesystem;

inline constexpr Spacing kDefaultSpacing{10.0, 25.0};
inline constexpr int kMinImageSide = 32;

struct ManifestEntry {
  fs::path image_path;
  fs::path mask_path;
  std::string subject_id;
  int day = 0;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::array<std::string_view, kNumClasses> class_names = kClassNames;
};

/// Loads a single-channel 8- or 16-bit PNG/TIFF, rescaled by the maximum
/// representable value. Spacing comes from `<path>.meta` when present.
OctImage load_image(const fs::path& path);

/// Writes `img` as a 16-bit PNG/TIFF (by extension) plus a `.meta` sidecar.
void save_image(const OctImage& img, const fs::path& path);

/// Reads `<image>.meta`; nullopt when the sidecar does not exist.
std::optional<Spacing> read_spacing_sidecar(const fs::path& image_path);
void write_spacing_sidecar(const fs::path& image_path, const Spacing& spacing);

/// Reads an 8-bit grayscale or palette PNG; palette indices are the class ids.
LabelMask load_mask(const fs::path& path);

/// Writes an 8-bit indexed PNG whose palette colors the three skin layers.
void save_mask(const LabelMask& mask, const fs::path& path);

/// Checks every id is in {0..3}; throws SchemaError naming the first offender.
void validate_mask(const LabelMask& mask);

/// TSV: image_path, mask_path, subject_id, day. Relative paths resolve
/// against the manifest's directory. `#` lines and blank lines are skipped.
DatasetManifest load_manifest(const fs::path& path);
void save_manifest(const DatasetManifest& manifest, const fs::path& path);

/// Writes `bytes` to `path` through a sibling temporary and a rename, so a
/// reader never observes a partial file.
void write_file_atomic(const fs::path& path, std::span<const unsigned char> bytes);
void write_text_atomic(const fs::path& path, const std::string& text);

/// NumPy .npy (float32, shape 4 x H x W).
void save_probability_npy(const ProbabilityMap& pm, const fs::path& path);
ProbabilityMap load_probability_npy(const fs::path& path);

}  // namespace octskin

namespace octskin {

/// Image (with manifest subject/day) and mask of one manifest entry.
std::pair<OctImage, LabelMask> load_entry(const ManifestEntry& entry);

}  // namespace octskin
