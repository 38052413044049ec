#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "octskin/preprocess.hpp"
#include "octskin/types.hpp"

namespace octskin {

enum class Arch { kBaseUnet, kVgg16Unet, kResnet34Unet, kInceptionV3Unet };

std::string_view arch_name(Arch arch);
/// Accepts base_unet, vgg16_unet, resnet34_unet, inceptionv3_unet.
Arch parse_arch(std::string_view name);
inline constexpr std::array<Arch, 4> kAllArchs = {Arch::kBaseUnet, Arch::kVgg16Unet,
                                                  Arch::kResnet34Unet, Arch::kInceptionV3Unet};

struct ModelSpec {
  Arch arch = Arch::kBaseUnet;
  int in_channels = 1;
  int num_classes = kNumClasses;
  /// Load encoder weights from `encoder_weights` (a tensor archive exported
  /// from a natural-image classifier; see tools/export_encoder_weights.py).
  bool encoder_pretrained = false;
  std::string encoder_weights;
  /// Every channel width is divided by this factor; 1 is the published layout.
  int width_divisor = 1;

  void validate() const;
};

/// Encoder-decoder segmentation network with a 4-class softmax head.
///
/// Inputs of any size are reflect-padded to the next multiple of 32 and the
/// output is cropped back, so output shape always equals input shape. The
/// network is not safe for concurrent mutation; prediction on a frozen model
/// is deterministic.
class Model {
 public:
  struct Impl;

  explicit Model(std::shared_ptr<Impl> impl);

  const ModelSpec& spec() const;
  std::size_t parameter_count() const;

  /// Class probabilities for a batch of equally sized single-channel rasters.
  std::vector<ProbabilityMap> predict(std::span<const Raster<float>> batch) const;
  ProbabilityMap predict(const Raster<float>& input) const;

  /// Deep copy of weights and buffers.
  Model clone() const;

  /// Checkpoint: magic, JSON header (arch, spec, tensor table), raw float data.
  void save(const std::filesystem::path& path) const;
  static Model load(const std::filesystem::path& path);

  Impl& impl() { return *impl_; }
  const Impl& impl() const { return *impl_; }

 private:
  std::shared_ptr<Impl> impl_;
};

/// Builds a freshly initialized network; `seed` fixes the initialization.
Model build_model(const ModelSpec& spec, std::uint64_t seed = 0);

struct InferenceParams {
  int patch_px = 128;
  int stride_px = 64;
  int batch_size = 8;
  DespeckleParams despeckle;
};

/// preprocess -> extract_patches -> forward pass -> stitch.
ProbabilityMap predict_probs(const Model& model, const OctImage& img, const InferenceParams& params = {});

/// Writes the encoder tensors of a model in the archive format the
/// pretrained-weight loader reads (useful for tests and transfers).
void save_encoder_weights(const Model& model, const std::filesystem::path& path);

}  // namespace octskin
