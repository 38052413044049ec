#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <map>
#include <string>

#include "octskin/segnet.hpp"

namespace octskin::nn {

/// Network body shared by the four architectures. `forward` takes an
/// N x 1 x H x W batch and returns N x 4 x H x W logits at input size.
class SegNetImpl : public torch::nn::Module {
 public:
  torch::Tensor forward(torch::Tensor x);
  /// Logits for an input whose sides are multiples of 32.
  virtual torch::Tensor forward_padded(torch::Tensor x) = 0;
  /// Encoder submodule whose parameter names follow the reference classifier
  /// layout; null for the plain U-Net.
  virtual std::shared_ptr<torch::nn::Module> encoder() { return nullptr; }
};

struct TensorRecord {
  std::string name;
  torch::Tensor value;
};

/// Self-describing tensor archive shared by checkpoints and encoder weights.
///   bytes 0..7   magic "OCTSKCK1"
///   bytes 8..11  little-endian uint32 header length L
///   next L bytes UTF-8 JSON: {"meta": {...}, "tensors": [{"name", "dtype", "shape", "offset"}]}
///   remainder    raw little-endian tensor data; offsets are relative to its start
void write_tensor_archive(const std::filesystem::path& path, const std::map<std::string, std::string>& meta,
                          const std::vector<TensorRecord>& tensors);
std::vector<TensorRecord> read_tensor_archive(const std::filesystem::path& path,
                                              std::map<std::string, std::string>* meta);

/// Named parameters and buffers of a module, in registration order.
std::vector<TensorRecord> module_state(const torch::nn::Module& m);
/// Copies matching tensors into `m`; every module tensor must be present.
void load_module_state(torch::nn::Module& m, const std::vector<TensorRecord>& state, const std::string& origin);

}  // namespace octskin::nn

namespace octskin {

struct Model::Impl {
  ModelSpec spec;
  std::shared_ptr<nn::SegNetImpl> net;
};

}  // namespace octskin
