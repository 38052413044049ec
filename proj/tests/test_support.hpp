#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "octskin/types.hpp"

namespace octskin::testing {

/// Unique directory removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag = "octskin") {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / (tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline LabelMask random_mask(int h, int w, std::mt19937_64& rng, int num_classes = kNumClasses) {
  std::uniform_int_distribution<int> cls(0, num_classes - 1);
  LabelMask m(h, w);
  for (auto& v : m.labels.data()) v = static_cast<std::uint8_t>(cls(rng));
  return m;
}

inline LabelMask mask_from(int h, int w, std::initializer_list<int> ids) {
  LabelMask m(h, w);
  std::size_t i = 0;
  for (int v : ids) m.labels.data()[i++] = static_cast<std::uint8_t>(v);
  return m;
}

/// Random per-pixel distributions (Dirichlet(1) via normalized exponentials).
inline ProbabilityMap random_probs(int h, int w, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  ProbabilityMap pm(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      double v[kNumClasses], s = 0;
      for (auto& x : v) s += (x = e(rng));
      for (int k = 0; k < kNumClasses; ++k) pm(k, r, c) = v[k] / s;
    }
  return pm;
}

inline OctImage image_from(const Raster<float>& px) {
  OctImage img;
  img.pixels = px;
  return img;
}

}  // namespace octskin::testing
