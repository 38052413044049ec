#include "octskin/preprocess.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace octskin {

OctImage median_filter(const OctImage& img, int kernel_px) {
  if (kernel_px < 1 || kernel_px % 2 == 0)
    throw ParameterError("median_filter: kernel must be odd and positive, got " +
                         std::to_string(kernel_px));
  if (kernel_px > std::min(img.height(), img.width()))
    throw ParameterError("median_filter: kernel " + std::to_string(kernel_px) +
                         " exceeds the image side");
  OctImage out = img;
  if (kernel_px == 1) return out;

  const int h = img.height(), w = img.width(), rad = kernel_px / 2;
  const auto& src = img.pixels;
  std::vector<float> window(static_cast<std::size_t>(kernel_px) * kernel_px);
  const auto mid = window.begin() + static_cast<long>(window.size() / 2);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      std::size_t n = 0;
      for (int dr = -rad; dr <= rad; ++dr) {
        const int rr = std::clamp(r + dr, 0, h - 1);
        for (int dc = -rad; dc <= rad; ++dc) window[n++] = src(rr, std::clamp(c + dc, 0, w - 1));
      }
      std::nth_element(window.begin(), mid, window.end());
      out.pixels(r, c) = *mid;
    }
  }
  return out;
}

OctImage despeckle(const OctImage& img, int kernel_px, int passes) {
  if (passes < 0) throw ParameterError("despeckle: passes must be non-negative");
  if (kernel_px < 1 || kernel_px % 2 == 0 || kernel_px > std::min(img.height(), img.width()))
    throw ParameterError("despeckle: invalid kernel " + std::to_string(kernel_px));
  OctImage out = img;
  for (int i = 0; i < passes; ++i) out = median_filter(out, kernel_px);
  return out;
}

OctImage normalize(const OctImage& img) {
  OctImage out = img;
  auto& px = out.pixels.data();
  if (px.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(px.begin(), px.end());
  const double lo = *lo_it, hi = *hi_it;
  if (hi <= lo) {
    std::fill(px.begin(), px.end(), 0.0f);
    return out;
  }
  const double inv = 1.0 / (hi - lo);
  for (auto& v : px) v = static_cast<float>(std::clamp((v - lo) * inv, 0.0, 1.0));
  return out;
}

OctImage preprocess(const OctImage& img, const DespeckleParams& params) {
  return normalize(despeckle(img, params.kernel_px, params.passes));
}

}  // namespace octskin
