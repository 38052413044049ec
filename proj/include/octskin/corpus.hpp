#pragma once

#include <cstddef>
#include <filesystem>
#include <utility>
#include <vector>

#include "octskin/data_io.hpp"
#include "octskin/patching.hpp"
#include "octskin/phantom.hpp"
#include "octskin/preprocess.hpp"

namespace octskin {

struct CorpusOptions {
  int patch_px = 128;
  int stride_px = 64;
  int min_unique = 2;
  DespeckleParams despeckle;
};

struct CorpusStats {
  std::size_t images = 0;
  std::size_t extracted = 0;
  std::size_t kept = 0;
};

using LabelledImage = std::pair<OctImage, LabelMask>;

/// Preprocesses every image, cuts labelled patches and drops background-only
/// ones. Patch source ids are `<subject>@<day>` so image-level splits work.
PatchSet build_patch_corpus(const std::vector<LabelledImage>& items, const CorpusOptions& opt,
                            CorpusStats* stats = nullptr);
PatchSet build_patch_corpus(const DatasetManifest& manifest, const CorpusOptions& opt,
                            CorpusStats* stats = nullptr);

/// Writes `<stem>_image.png` (with spacing sidecar), `<stem>_mask.png` and
/// `manifest.tsv` into `dir`.
DatasetManifest write_labelled_dataset(const std::vector<LabelledImage>& items, const std::filesystem::path& dir);

}  // namespace octskin
