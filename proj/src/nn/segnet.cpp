#include "octskin/segnet.hpp"

#include <torch/torch.h>

#include "architectures.hpp"
#include "octskin/patching.hpp"
#include "segnet_impl.hpp"

namespace octskin {

std::string_view arch_name(Arch arch) {
  switch (arch) {
    case Arch::kBaseUnet: return "base_unet";
    case Arch::kVgg16Unet: return "vgg16_unet";
    case Arch::kResnet34Unet: return "resnet34_unet";
    case Arch::kInceptionV3Unet: return "inceptionv3_unet";
  }
  return "unknown";
}

Arch parse_arch(std::string_view name) {
  for (Arch a : kAllArchs)
    if (arch_name(a) == name) return a;
  throw ConfigError("unknown architecture `" + std::string(name) +
                    "` (expected base_unet, vgg16_unet, resnet34_unet or inceptionv3_unet)");
}

void ModelSpec::validate() const {
  if (num_classes != kNumClasses) throw ConfigError("model: num_classes is fixed at 4");
  if (in_channels != 1) throw ConfigError("model: in_channels must be 1 (grayscale B-scans)");
  if (width_divisor < 1) throw ConfigError("model: width_divisor must be at least 1");
  if (encoder_pretrained) {
    if (arch == Arch::kBaseUnet) throw ConfigError("model: base_unet has no pretrained encoder");
    if (encoder_weights.empty())
      throw ConfigError("model: encoder_pretrained requires an encoder weights file");
    if (width_divisor != 1) throw ConfigError("model: pretrained encoders need width_divisor = 1");
  }
}

Model::Model(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}

const ModelSpec& Model::spec() const { return impl_->spec; }

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : impl_->net->parameters()) n += static_cast<std::size_t>(p.numel());
  return n;
}

std::vector<ProbabilityMap> Model::predict(std::span<const Raster<float>> batch) const {
  if (batch.empty()) return {};
  const int h = batch[0].height(), w = batch[0].width();
  torch::Tensor x = torch::empty({static_cast<int64_t>(batch.size()), 1, h, w});
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].height() != h || batch[i].width() != w)
      throw ContractError("predict: batch rasters must share one shape");
    std::memcpy(x[static_cast<int64_t>(i)].data_ptr<float>(), batch[i].data().data(), sizeof(float) * h * w);
  }
  torch::NoGradGuard guard;
  impl_->net->eval();
  const torch::Tensor probs = torch::softmax(impl_->net->forward(x), 1).to(torch::kFloat64).contiguous();
  std::vector<ProbabilityMap> out;
  out.reserve(batch.size());
  const double* src = probs.data_ptr<double>();
  const std::size_t per = static_cast<std::size_t>(kNumClasses) * h * w;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    ProbabilityMap pm(h, w);
    std::copy(src + i * per, src + (i + 1) * per, pm.data().begin());
    out.push_back(std::move(pm));
  }
  return out;
}

ProbabilityMap Model::predict(const Raster<float>& input) const {
  return std::move(predict(std::span<const Raster<float>>(&input, 1)).front());
}

Model Model::clone() const {
  auto copy = std::make_shared<Impl>();
  copy->spec = impl_->spec;
  copy->net = nn::make_network(impl_->spec);
  nn::load_module_state(*copy->net, nn::module_state(*impl_->net), "clone");
  return Model(std::move(copy));
}

void Model::save(const std::filesystem::path& path) const {
  const auto& s = impl_->spec;
  nn::write_tensor_archive(path,
                           {{"kind", "checkpoint"},
                            {"arch", std::string(arch_name(s.arch))},
                            {"in_channels", std::to_string(s.in_channels)},
                            {"num_classes", std::to_string(s.num_classes)},
                            {"width_divisor", std::to_string(s.width_divisor)},
                            {"encoder_pretrained", s.encoder_pretrained ? "true" : "false"}},
                           nn::module_state(*impl_->net));
}

Model Model::load(const std::filesystem::path& path) {
  std::map<std::string, std::string> meta;
  const auto state = nn::read_tensor_archive(path, &meta);
  if (meta["kind"] != "checkpoint") throw FormatError(path.string() + ": not a model checkpoint");
  auto impl = std::make_shared<Impl>();
  try {
    impl->spec.arch = parse_arch(meta.at("arch"));
    impl->spec.in_channels = std::stoi(meta.at("in_channels"));
    impl->spec.num_classes = std::stoi(meta.at("num_classes"));
    impl->spec.width_divisor = std::stoi(meta.at("width_divisor"));
  } catch (const std::out_of_range&) {
    throw FormatError(path.string() + ": incomplete checkpoint header");
  }
  impl->spec.validate();
  impl->net = nn::make_network(impl->spec);
  nn::load_module_state(*impl->net, state, path.string());
  impl->net->eval();
  return Model(std::move(impl));
}

Model build_model(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  torch::manual_seed(seed);
  auto impl = std::make_shared<Model::Impl>();
  impl->spec = spec;
  impl->net = nn::make_network(spec);
  if (spec.encoder_pretrained) {
    std::map<std::string, std::string> meta;
    const auto state = nn::read_tensor_archive(spec.encoder_weights, &meta);
    if (meta["kind"] != "encoder" || meta["arch"] != arch_name(spec.arch))
      throw ConfigError(spec.encoder_weights + ": encoder weights are not for " + std::string(arch_name(spec.arch)));
    nn::load_module_state(*impl->net->encoder(), state, spec.encoder_weights);
  }
  impl->net->eval();
  return Model(std::move(impl));
}

void save_encoder_weights(const Model& model, const std::filesystem::path& path) {
  auto enc = model.impl().net->encoder();
  if (!enc) throw ConfigError("save_encoder_weights: base_unet has no separable encoder");
  nn::write_tensor_archive(path, {{"kind", "encoder"}, {"arch", std::string(arch_name(model.spec().arch))}},
                           nn::module_state(*enc));
}

ProbabilityMap predict_probs(const Model& model, const OctImage& img, const InferenceParams& params) {
  const OctImage clean = preprocess(img, params.despeckle);
  const PatchSet ps = extract_patches(clean, nullptr, params.patch_px, params.stride_px);
  std::vector<ProbabilityPatch> parts;
  parts.reserve(ps.size());
  const std::size_t bs = static_cast<std::size_t>(std::max(1, params.batch_size));
  std::vector<Raster<float>> batch;
  for (std::size_t start = 0; start < ps.size(); start += bs) {
    batch.clear();
    const std::size_t end = std::min(ps.size(), start + bs);
    for (std::size_t i = start; i < end; ++i) batch.push_back(ps.patches[i].image);
    auto maps = model.predict(batch);
    for (std::size_t i = start; i < end; ++i) parts.emplace_back(std::move(maps[i - start]), ps.patches[i].geometry);
  }
  return stitch(parts, img.height(), img.width());
}

}  // namespace octskin
