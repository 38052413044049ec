#include "octskin/corpus.hpp"

#include <cstdio>

namespace octskin {

PatchSet build_patch_corpus(const std::vector<LabelledImage>& items, const CorpusOptions& opt, CorpusStats* stats) {
  PatchSet all;
  all.patch_px = opt.patch_px;
  all.stride_px = opt.stride_px;
  CorpusStats local;
  for (const auto& [image, mask] : items) {
    OctImage clean = preprocess(image, opt.despeckle);
    clean.subject_id = image.subject_id + "@" + std::to_string(image.day);
    const PatchSet raw = extract_patches(clean, mask, opt.patch_px, opt.stride_px);
    PatchSet kept = filter_background(raw, opt.min_unique);
    ++local.images;
    local.extracted += raw.size();
    local.kept += kept.size();
    for (auto& p : kept.patches) all.patches.push_back(std::move(p));
  }
  if (stats) *stats = local;
  return all;
}

PatchSet build_patch_corpus(const DatasetManifest& manifest, const CorpusOptions& opt, CorpusStats* stats) {
  std::vector<LabelledImage> items;
  items.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) items.push_back(load_entry(e));
  return build_patch_corpus(items, opt, stats);
}

DatasetManifest write_labelled_dataset(const std::vector<LabelledImage>& items, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  DatasetManifest manifest;
  for (std::size_t i = 0; i < items.size(); ++i) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "%04zu", i);
    const auto& [image, mask] = items[i];
    ManifestEntry e;
    e.image_path = dir / (std::string(stem) + "_image.png");
    e.mask_path = dir / (std::string(stem) + "_mask.png");
    e.subject_id = image.subject_id.empty() ? stem : image.subject_id;
    e.day = image.day;
    save_image(image, e.image_path);
    save_mask(mask, e.mask_path);
    manifest.entries.push_back(std::move(e));
  }
  save_manifest(manifest, dir / "manifest.tsv");
  return manifest;
}

}  // namespace octskin
