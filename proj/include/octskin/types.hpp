#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "octskin/error.hpp"

namespace octskin {

inline constexpr int kNumClasses = 4;

enum class SkinClass : std::uint8_t {
  kBackground = 0,
  kEpidermis = 1,
  kDermis = 2,
  kSubcutaneous = 3,
};

inline constexpr std::array<std::string_view, kNumClasses> kClassNames = {
    "background", "epidermis", "dermis", "subcutaneous"};

/// Dense row-major 2-D array.
template <typename T>
class Raster {
 public:
  Raster() = default;
  Raster(int height, int width, T fill = T{})
      : height_(height), width_(width),
        data_(static_cast<std::size_t>(checked(height, width)), fill) {}
  Raster(int height, int width, std::vector<T> data)
      : height_(height), width_(width), data_(std::move(data)) {
    if (static_cast<long long>(data_.size()) != checked(height, width))
      throw ParameterError("raster data size does not match " +
                           std::to_string(height) + "x" + std::to_string(width));
  }

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int row, int col) { return data_[index(row, col)]; }
  const T& operator()(int row, int col) const { return data_[index(row, col)]; }

  std::span<T> row(int r) { return {data_.data() + index(r, 0), static_cast<std::size_t>(width_)}; }
  std::span<const T> row(int r) const {
    return {data_.data() + index(r, 0), static_cast<std::size_t>(width_)};
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool same_shape(const Raster& o) const { return height_ == o.height_ && width_ == o.width_; }
  template <typename U>
  bool same_shape(const Raster<U>& o) const {
    return height_ == o.height() && width_ == o.width();
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  static long long checked(int h, int w) {
    if (h < 0 || w < 0) throw ParameterError("raster dimensions must be non-negative");
    return static_cast<long long>(h) * w;
  }
  std::size_t index(int r, int c) const {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(c);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<T> data_;
};

/// Micrometers per pixel along depth (rows) and across the scan (columns).
struct Spacing {
  double axial_um_per_px = 10.0;
  double lateral_um_per_px = 25.0;
  friend bool operator==(const Spacing&, const Spacing&) = default;
};

/// Grayscale B-scan with intensities in [0,1].
struct OctImage {
  Raster<float> pixels;
  Spacing spacing;
  std::string subject_id;
  int day = 0;

  int height() const { return pixels.height(); }
  int width() const { return pixels.width(); }
};

/// Per-pixel class ids in {0,1,2,3}.
struct LabelMask {
  Raster<std::uint8_t> labels;

  LabelMask() = default;
  explicit LabelMask(Raster<std::uint8_t> l) : labels(std::move(l)) {}
  LabelMask(int height, int width, std::uint8_t fill = 0) : labels(height, width, fill) {}

  int height() const { return labels.height(); }
  int width() const { return labels.width(); }
  std::uint8_t operator()(int r, int c) const { return labels(r, c); }
  std::uint8_t& operator()(int r, int c) { return labels(r, c); }

  friend bool operator==(const LabelMask&, const LabelMask&) = default;
};

/// Channel-major class probabilities, kNumClasses x height x width.
class ProbabilityMap {
 public:
  ProbabilityMap() = default;
  ProbabilityMap(int height, int width)
      : height_(height), width_(width),
        probs_(static_cast<std::size_t>(kNumClasses) * height * width, 0.0) {}

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t plane_size() const { return static_cast<std::size_t>(height_) * width_; }

  double& operator()(int cls, int row, int col) { return probs_[index(cls, row, col)]; }
  double operator()(int cls, int row, int col) const { return probs_[index(cls, row, col)]; }

  std::span<double> plane(int cls) { return {probs_.data() + cls * plane_size(), plane_size()}; }
  std::span<const double> plane(int cls) const {
    return {probs_.data() + cls * plane_size(), plane_size()};
  }

  std::vector<double>& data() { return probs_; }
  const std::vector<double>& data() const { return probs_; }

  /// Largest |sum_c p(c) - 1| over all pixels.
  double max_normalization_error() const;

  friend bool operator==(const ProbabilityMap&, const ProbabilityMap&) = default;

 private:
  std::size_t index(int c, int r, int x) const {
    return static_cast<std::size_t>(c) * plane_size() +
           static_cast<std::size_t>(r) * width_ + static_cast<std::size_t>(x);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<double> probs_;
};

/// One-hot encoding of a mask.
ProbabilityMap one_hot(const LabelMask& mask);

/// Per-pixel argmax; ties go to the lowest class id.
LabelMask argmax_mask(const ProbabilityMap& pm);

}  // namespace octskin
