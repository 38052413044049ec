#include <torch/torch.h>

#include <algorithm>

#include "architectures.hpp"
#include "segnet_impl.hpp"

namespace octskin::nn {

namespace tnn = torch::nn;

namespace {

int scaled(int channels, int divisor) { return std::max(1, channels / divisor); }

tnn::Conv2dOptions conv_options(int in, int out, std::array<int64_t, 2> k, std::array<int64_t, 2> stride = {1, 1},
                                std::array<int64_t, 2> pad = {0, 0}, bool bias = false) {
  return tnn::Conv2dOptions(in, out, torch::ExpandingArray<2>({k[0], k[1]}))
      .stride(torch::ExpandingArray<2>({stride[0], stride[1]}))
      .padding(torch::ExpandingArray<2>({pad[0], pad[1]}))
      .bias(bias);
}

tnn::Conv2dOptions conv3x3(int in, int out, int stride = 1) {
  return conv_options(in, out, {3, 3}, {stride, stride}, {1, 1});
}

// conv3x3 -> BN -> ReLU, twice.
tnn::Sequential double_conv(int in, int out) {
  return tnn::Sequential(tnn::Conv2d(conv3x3(in, out)), tnn::BatchNorm2d(out), tnn::ReLU(true),
                         tnn::Conv2d(conv3x3(out, out)), tnn::BatchNorm2d(out), tnn::ReLU(true));
}

// Replicates the gray channel to RGB and applies the usual natural-image
// channel statistics expected by the classifier encoders.
torch::Tensor to_rgb(const torch::Tensor& x) {
  static const auto mean = torch::tensor({0.485f, 0.456f, 0.406f}).view({1, 3, 1, 1});
  static const auto stdev = torch::tensor({0.229f, 0.224f, 0.225f}).view({1, 3, 1, 1});
  return (x.repeat({1, 3, 1, 1}) - mean) / stdev;
}

// ---------------------------------------------------------------- base U-Net

class BaseUNetImpl : public SegNetImpl {
 public:
  explicit BaseUNetImpl(const ModelSpec& spec) {
    const int d = spec.width_divisor;
    const std::array<int, 5> w = {scaled(64, d), scaled(128, d), scaled(256, d), scaled(512, d), scaled(1024, d)};
    int in = spec.in_channels;
    for (int i = 0; i < 5; ++i) {
      down_.push_back(register_module("down" + std::to_string(i), double_conv(in, w[i])));
      in = w[i];
    }
    for (int i = 3; i >= 0; --i) {
      up_.push_back(register_module("upconv" + std::to_string(i),
                                    tnn::ConvTranspose2d(tnn::ConvTranspose2dOptions(w[i + 1], w[i], 2).stride(2))));
      upblock_.push_back(register_module("up" + std::to_string(i), double_conv(2 * w[i], w[i])));
    }
    head_ = register_module("head", tnn::Conv2d(conv_options(w[0], spec.num_classes, {1, 1}, {1, 1}, {0, 0}, true)));
  }

  torch::Tensor forward_padded(torch::Tensor x) override {
    std::vector<torch::Tensor> skips;
    for (std::size_t i = 0; i < down_.size(); ++i) {
      if (i > 0) x = torch::max_pool2d(x, 2);
      x = down_[i]->forward(x);
      if (i + 1 < down_.size()) skips.push_back(x);
    }
    for (std::size_t j = 0; j < up_.size(); ++j) {
      x = up_[j]->forward(x);
      x = upblock_[j]->forward(torch::cat({x, skips[skips.size() - 1 - j]}, 1));
    }
    return head_->forward(x);
  }

 private:
  std::vector<tnn::Sequential> down_;
  std::vector<tnn::ConvTranspose2d> up_;
  std::vector<tnn::Sequential> upblock_;
  tnn::Conv2d head_{nullptr};
};

// ------------------------------------------------------- shared U-Net decoder

class DecoderBlockImpl : public tnn::Module {
 public:
  DecoderBlockImpl(int in, int skip, int out) {
    body_ = register_module("body", double_conv(in + skip, out));
  }
  torch::Tensor forward(torch::Tensor x, const torch::Tensor& skip) {
    x = torch::upsample_nearest2d(x, std::vector<int64_t>{x.size(2) * 2, x.size(3) * 2});
    if (skip.defined()) x = torch::cat({x, skip}, 1);
    return body_->forward(x);
  }

 private:
  tnn::Sequential body_{nullptr};
};
TORCH_MODULE(DecoderBlock);

/// Encoder producing one feature map per stride 1, 2, 4, 8, 16, 32 (stride-1
/// entry may be undefined).
class FeatureEncoder : public tnn::Module {
 public:
  virtual std::array<torch::Tensor, 6> features(torch::Tensor x) = 0;
  virtual std::array<int, 6> channels() const = 0;
};

class EncoderUNetImpl : public SegNetImpl {
 public:
  EncoderUNetImpl(std::shared_ptr<FeatureEncoder> enc, const ModelSpec& spec) {
    encoder_ = register_module("encoder", std::move(enc));
    const auto ch = encoder_->channels();
    const int d = spec.width_divisor;
    const std::array<int, 5> dec = {scaled(256, d), scaled(128, d), scaled(64, d), scaled(32, d), scaled(16, d)};
    int in = ch[5];
    for (int i = 0; i < 5; ++i) {
      const int skip = ch[4 - i];
      blocks_.push_back(register_module("decoder" + std::to_string(i), DecoderBlock(in, skip, dec[i])));
      in = dec[i];
    }
    head_ = register_module("head", tnn::Conv2d(conv_options(in, spec.num_classes, {3, 3}, {1, 1}, {1, 1}, true)));
  }

  torch::Tensor forward_padded(torch::Tensor x) override {
    auto f = encoder_->features(to_rgb(x));
    torch::Tensor y = f[5];
    for (int i = 0; i < 5; ++i) y = blocks_[i]->forward(y, f[4 - i]);
    return head_->forward(y);
  }

  std::shared_ptr<torch::nn::Module> encoder() override { return encoder_; }

 private:
  std::shared_ptr<FeatureEncoder> encoder_;
  std::vector<DecoderBlock> blocks_;
  tnn::Conv2d head_{nullptr};
};

// ------------------------------------------------------------------- VGG16-BN

class Vgg16Encoder : public FeatureEncoder {
 public:
  explicit Vgg16Encoder(int d) {
    features_ = register_module("features", tnn::Sequential());
    const std::array<int, 18> cfg = {64, 64, -1, 128, 128, -1, 256, 256, 256, -1, 512, 512, 512, -1, 512, 512, 512, -1};
    int in = 3;
    int index = 0;
    for (int c : cfg) {
      if (c < 0) {
        pool_index_.push_back(index);
        features_->push_back(tnn::MaxPool2d(tnn::MaxPool2dOptions(2).stride(2)));
        ++index;
        continue;
      }
      const int out = scaled(c, d);
      features_->push_back(tnn::Conv2d(conv_options(in, out, {3, 3}, {1, 1}, {1, 1}, true)));
      features_->push_back(tnn::BatchNorm2d(out));
      features_->push_back(tnn::ReLU(true));
      index += 3;
      in = out;
    }
    channels_ = {scaled(64, d), scaled(128, d), scaled(256, d), scaled(512, d), scaled(512, d), scaled(512, d)};
  }

  std::array<torch::Tensor, 6> features(torch::Tensor x) override {
    std::array<torch::Tensor, 6> out;
    std::size_t tap = 0;
    int index = 0;
    for (auto& layer : *features_) {
      if (tap < pool_index_.size() && index == pool_index_[tap]) out[tap++] = x;
      x = layer.forward(x);
      ++index;
    }
    out[5] = x;
    return out;
  }
  std::array<int, 6> channels() const override { return channels_; }

 private:
  tnn::Sequential features_{nullptr};
  std::vector<int> pool_index_;
  std::array<int, 6> channels_{};
};

// ------------------------------------------------------------------- ResNet34

class BasicBlockImpl : public tnn::Module {
 public:
  BasicBlockImpl(int in, int out, int stride) {
    conv1 = register_module("conv1", tnn::Conv2d(conv3x3(in, out, stride)));
    bn1 = register_module("bn1", tnn::BatchNorm2d(out));
    conv2 = register_module("conv2", tnn::Conv2d(conv3x3(out, out)));
    bn2 = register_module("bn2", tnn::BatchNorm2d(out));
    if (stride != 1 || in != out)
      downsample = register_module(
          "downsample", tnn::Sequential(tnn::Conv2d(conv_options(in, out, {1, 1}, {stride, stride})), tnn::BatchNorm2d(out)));
  }
  torch::Tensor forward(torch::Tensor x) {
    torch::Tensor identity = downsample ? downsample->forward(x) : x;
    torch::Tensor y = torch::relu(bn1->forward(conv1->forward(x)));
    y = bn2->forward(conv2->forward(y));
    return torch::relu(y + identity);
  }

  tnn::Conv2d conv1{nullptr}, conv2{nullptr};
  tnn::BatchNorm2d bn1{nullptr}, bn2{nullptr};
  tnn::Sequential downsample{nullptr};
};
TORCH_MODULE(BasicBlock);

class Resnet34Encoder : public FeatureEncoder {
 public:
  explicit Resnet34Encoder(int d) {
    const std::array<int, 4> widths = {scaled(64, d), scaled(128, d), scaled(256, d), scaled(512, d)};
    const std::array<int, 4> blocks = {3, 4, 6, 3};
    conv1_ = register_module("conv1", tnn::Conv2d(conv_options(3, widths[0], {7, 7}, {2, 2}, {3, 3})));
    bn1_ = register_module("bn1", tnn::BatchNorm2d(widths[0]));
    int in = widths[0];
    for (int l = 0; l < 4; ++l) {
      tnn::Sequential layer;
      for (int b = 0; b < blocks[l]; ++b) {
        layer->push_back(BasicBlock(in, widths[l], (b == 0 && l > 0) ? 2 : 1));
        in = widths[l];
      }
      layers_[l] = register_module("layer" + std::to_string(l + 1), layer);
    }
    channels_ = {0, widths[0], widths[0], widths[1], widths[2], widths[3]};
  }

  std::array<torch::Tensor, 6> features(torch::Tensor x) override {
    std::array<torch::Tensor, 6> out;
    x = torch::relu(bn1_->forward(conv1_->forward(x)));
    out[1] = x;
    x = torch::max_pool2d(x, 3, 2, 1);
    for (int l = 0; l < 4; ++l) {
      x = layers_[l]->forward(x);
      out[l + 2] = x;
    }
    return out;
  }
  std::array<int, 6> channels() const override { return channels_; }

 private:
  tnn::Conv2d conv1_{nullptr};
  tnn::BatchNorm2d bn1_{nullptr};
  std::array<tnn::Sequential, 4> layers_{nullptr, nullptr, nullptr, nullptr};
  std::array<int, 6> channels_{};
};

// ---------------------------------------------------------------- InceptionV3
//
// Block layout and names follow the reference classifier; stride-2 and valid
// convolutions/pools get padding so every stage halves the side exactly.

class BasicConv2dImpl : public tnn::Module {
 public:
  BasicConv2dImpl(int in, int out, std::array<int64_t, 2> k, std::array<int64_t, 2> stride = {1, 1},
                  std::array<int64_t, 2> pad = {0, 0}) {
    conv = register_module("conv", tnn::Conv2d(conv_options(in, out, k, stride, pad)));
    bn = register_module("bn", tnn::BatchNorm2d(tnn::BatchNorm2dOptions(out).eps(0.001)));
  }
  torch::Tensor forward(torch::Tensor x) { return torch::relu(bn->forward(conv->forward(x))); }

  tnn::Conv2d conv{nullptr};
  tnn::BatchNorm2d bn{nullptr};
};
TORCH_MODULE(BasicConv2d);

BasicConv2d bc(int in, int out, int k, int stride = 1, int pad = 0) {
  return BasicConv2d(in, out, std::array<int64_t, 2>{k, k}, std::array<int64_t, 2>{stride, stride},
                     std::array<int64_t, 2>{pad, pad});
}
BasicConv2d bc(int in, int out, std::array<int64_t, 2> k, std::array<int64_t, 2> pad) {
  return BasicConv2d(in, out, k, std::array<int64_t, 2>{1, 1}, pad);
}

torch::Tensor avg3(const torch::Tensor& x) { return torch::avg_pool2d(x, 3, 1, 1); }
torch::Tensor max3s2(const torch::Tensor& x) { return torch::max_pool2d(x, 3, 2, 1); }

class InceptionAImpl : public tnn::Module {
 public:
  InceptionAImpl(int in, int pool_features, int d) {
    b1 = register_module("branch1x1", bc(in, scaled(64, d), 1));
    b5_1 = register_module("branch5x5_1", bc(in, scaled(48, d), 1));
    b5_2 = register_module("branch5x5_2", bc(scaled(48, d), scaled(64, d), 5, 1, 2));
    b3_1 = register_module("branch3x3dbl_1", bc(in, scaled(64, d), 1));
    b3_2 = register_module("branch3x3dbl_2", bc(scaled(64, d), scaled(96, d), 3, 1, 1));
    b3_3 = register_module("branch3x3dbl_3", bc(scaled(96, d), scaled(96, d), 3, 1, 1));
    bp = register_module("branch_pool", bc(in, pool_features, 1));
    out_channels = scaled(64, d) + scaled(64, d) + scaled(96, d) + pool_features;
  }
  torch::Tensor forward(torch::Tensor x) {
    return torch::cat({b1(x), b5_2(b5_1(x)), b3_3(b3_2(b3_1(x))), bp(avg3(x))}, 1);
  }
  BasicConv2d b1{nullptr}, b5_1{nullptr}, b5_2{nullptr}, b3_1{nullptr}, b3_2{nullptr}, b3_3{nullptr}, bp{nullptr};
  int out_channels = 0;
};
TORCH_MODULE(InceptionA);

class InceptionBImpl : public tnn::Module {
 public:
  InceptionBImpl(int in, int d) {
    b3 = register_module("branch3x3", bc(in, scaled(384, d), 3, 2, 1));
    b3d_1 = register_module("branch3x3dbl_1", bc(in, scaled(64, d), 1));
    b3d_2 = register_module("branch3x3dbl_2", bc(scaled(64, d), scaled(96, d), 3, 1, 1));
    b3d_3 = register_module("branch3x3dbl_3", bc(scaled(96, d), scaled(96, d), 3, 2, 1));
    out_channels = scaled(384, d) + scaled(96, d) + in;
  }
  torch::Tensor forward(torch::Tensor x) { return torch::cat({b3(x), b3d_3(b3d_2(b3d_1(x))), max3s2(x)}, 1); }
  BasicConv2d b3{nullptr}, b3d_1{nullptr}, b3d_2{nullptr}, b3d_3{nullptr};
  int out_channels = 0;
};
TORCH_MODULE(InceptionB);

class InceptionCImpl : public tnn::Module {
 public:
  InceptionCImpl(int in, int c7, int d) {
    const int o = scaled(192, d);
    b1 = register_module("branch1x1", bc(in, o, 1));
    b7_1 = register_module("branch7x7_1", bc(in, c7, 1));
    b7_2 = register_module("branch7x7_2", bc(c7, c7, {1, 7}, {0, 3}));
    b7_3 = register_module("branch7x7_3", bc(c7, o, {7, 1}, {3, 0}));
    b7d_1 = register_module("branch7x7dbl_1", bc(in, c7, 1));
    b7d_2 = register_module("branch7x7dbl_2", bc(c7, c7, {7, 1}, {3, 0}));
    b7d_3 = register_module("branch7x7dbl_3", bc(c7, c7, {1, 7}, {0, 3}));
    b7d_4 = register_module("branch7x7dbl_4", bc(c7, c7, {7, 1}, {3, 0}));
    b7d_5 = register_module("branch7x7dbl_5", bc(c7, o, {1, 7}, {0, 3}));
    bp = register_module("branch_pool", bc(in, o, 1));
    out_channels = 4 * o;
  }
  torch::Tensor forward(torch::Tensor x) {
    return torch::cat({b1(x), b7_3(b7_2(b7_1(x))), b7d_5(b7d_4(b7d_3(b7d_2(b7d_1(x))))), bp(avg3(x))}, 1);
  }
  BasicConv2d b1{nullptr}, b7_1{nullptr}, b7_2{nullptr}, b7_3{nullptr}, b7d_1{nullptr}, b7d_2{nullptr},
      b7d_3{nullptr}, b7d_4{nullptr}, b7d_5{nullptr}, bp{nullptr};
  int out_channels = 0;
};
TORCH_MODULE(InceptionC);

class InceptionDImpl : public tnn::Module {
 public:
  InceptionDImpl(int in, int d) {
    const int o = scaled(192, d);
    b3_1 = register_module("branch3x3_1", bc(in, o, 1));
    b3_2 = register_module("branch3x3_2", bc(o, scaled(320, d), 3, 2, 1));
    b7_1 = register_module("branch7x7x3_1", bc(in, o, 1));
    b7_2 = register_module("branch7x7x3_2", bc(o, o, {1, 7}, {0, 3}));
    b7_3 = register_module("branch7x7x3_3", bc(o, o, {7, 1}, {3, 0}));
    b7_4 = register_module("branch7x7x3_4", bc(o, o, 3, 2, 1));
    out_channels = scaled(320, d) + o + in;
  }
  torch::Tensor forward(torch::Tensor x) {
    return torch::cat({b3_2(b3_1(x)), b7_4(b7_3(b7_2(b7_1(x)))), max3s2(x)}, 1);
  }
  BasicConv2d b3_1{nullptr}, b3_2{nullptr}, b7_1{nullptr}, b7_2{nullptr}, b7_3{nullptr}, b7_4{nullptr};
  int out_channels = 0;
};
TORCH_MODULE(InceptionD);

class InceptionEImpl : public tnn::Module {
 public:
  InceptionEImpl(int in, int d) {
    const int c384 = scaled(384, d), c448 = scaled(448, d);
    b1 = register_module("branch1x1", bc(in, scaled(320, d), 1));
    b3_1 = register_module("branch3x3_1", bc(in, c384, 1));
    b3_2a = register_module("branch3x3_2a", bc(c384, c384, {1, 3}, {0, 1}));
    b3_2b = register_module("branch3x3_2b", bc(c384, c384, {3, 1}, {1, 0}));
    b3d_1 = register_module("branch3x3dbl_1", bc(in, c448, 1));
    b3d_2 = register_module("branch3x3dbl_2", bc(c448, c384, 3, 1, 1));
    b3d_3a = register_module("branch3x3dbl_3a", bc(c384, c384, {1, 3}, {0, 1}));
    b3d_3b = register_module("branch3x3dbl_3b", bc(c384, c384, {3, 1}, {1, 0}));
    bp = register_module("branch_pool", bc(in, scaled(192, d), 1));
    out_channels = scaled(320, d) + 4 * c384 + scaled(192, d);
  }
  torch::Tensor forward(torch::Tensor x) {
    auto a = b3_1(x);
    auto b = b3d_2(b3d_1(x));
    return torch::cat({b1(x), b3_2a(a), b3_2b(a), b3d_3a(b), b3d_3b(b), bp(avg3(x))}, 1);
  }
  BasicConv2d b1{nullptr}, b3_1{nullptr}, b3_2a{nullptr}, b3_2b{nullptr}, b3d_1{nullptr}, b3d_2{nullptr},
      b3d_3a{nullptr}, b3d_3b{nullptr}, bp{nullptr};
  int out_channels = 0;
};
TORCH_MODULE(InceptionE);

class InceptionV3Encoder : public FeatureEncoder {
 public:
  explicit InceptionV3Encoder(int d) {
    c1a = register_module("Conv2d_1a_3x3", bc(3, scaled(32, d), 3, 2, 1));
    c2a = register_module("Conv2d_2a_3x3", bc(scaled(32, d), scaled(32, d), 3, 1, 1));
    c2b = register_module("Conv2d_2b_3x3", bc(scaled(32, d), scaled(64, d), 3, 1, 1));
    c3b = register_module("Conv2d_3b_1x1", bc(scaled(64, d), scaled(80, d), 1));
    c4a = register_module("Conv2d_4a_3x3", bc(scaled(80, d), scaled(192, d), 3, 1, 1));
    m5b = register_module("Mixed_5b", InceptionA(scaled(192, d), scaled(32, d), d));
    m5c = register_module("Mixed_5c", InceptionA(m5b->out_channels, scaled(64, d), d));
    m5d = register_module("Mixed_5d", InceptionA(m5c->out_channels, scaled(64, d), d));
    m6a = register_module("Mixed_6a", InceptionB(m5d->out_channels, d));
    m6b = register_module("Mixed_6b", InceptionC(m6a->out_channels, scaled(128, d), d));
    m6c = register_module("Mixed_6c", InceptionC(m6b->out_channels, scaled(160, d), d));
    m6d = register_module("Mixed_6d", InceptionC(m6c->out_channels, scaled(160, d), d));
    m6e = register_module("Mixed_6e", InceptionC(m6d->out_channels, scaled(192, d), d));
    m7a = register_module("Mixed_7a", InceptionD(m6e->out_channels, d));
    m7b = register_module("Mixed_7b", InceptionE(m7a->out_channels, d));
    m7c = register_module("Mixed_7c", InceptionE(m7b->out_channels, d));
    channels_ = {0, scaled(64, d), scaled(192, d), m5d->out_channels, m6e->out_channels, m7c->out_channels};
  }

  std::array<torch::Tensor, 6> features(torch::Tensor x) override {
    std::array<torch::Tensor, 6> out;
    x = c2b(c2a(c1a(x)));
    out[1] = x;
    x = c4a(c3b(max3s2(x)));
    out[2] = x;
    x = m5d(m5c(m5b(max3s2(x))));
    out[3] = x;
    x = m6e(m6d(m6c(m6b(m6a(x)))));
    out[4] = x;
    x = m7c(m7b(m7a(x)));
    out[5] = x;
    return out;
  }
  std::array<int, 6> channels() const override { return channels_; }

 private:
  BasicConv2d c1a{nullptr}, c2a{nullptr}, c2b{nullptr}, c3b{nullptr}, c4a{nullptr};
  InceptionA m5b{nullptr}, m5c{nullptr}, m5d{nullptr};
  InceptionB m6a{nullptr};
  InceptionC m6b{nullptr}, m6c{nullptr}, m6d{nullptr}, m6e{nullptr};
  InceptionD m7a{nullptr};
  InceptionE m7b{nullptr}, m7c{nullptr};
  std::array<int, 6> channels_{};
};

}  // namespace

torch::Tensor SegNetImpl::forward(torch::Tensor x) {
  const int64_t h = x.size(2), w = x.size(3);
  const int64_t ph = (32 - h % 32) % 32, pw = (32 - w % 32) % 32;
  if (ph || pw) {
    // Reflection needs pad < side; replicate covers very small inputs.
    const bool reflect = ph < h && pw < w;
    auto opts = torch::nn::functional::PadFuncOptions({0, pw, 0, ph});
    if (reflect)
      opts.mode(torch::kReflect);
    else
      opts.mode(torch::kReplicate);
    x = torch::nn::functional::pad(x, opts);
  }
  torch::Tensor y = forward_padded(x);
  if (ph || pw) y = y.slice(2, 0, h).slice(3, 0, w);
  return y;
}

std::shared_ptr<SegNetImpl> make_network(const ModelSpec& spec) {
  const int d = spec.width_divisor;
  switch (spec.arch) {
    case Arch::kBaseUnet: return std::make_shared<BaseUNetImpl>(spec);
    case Arch::kVgg16Unet: return std::make_shared<EncoderUNetImpl>(std::make_shared<Vgg16Encoder>(d), spec);
    case Arch::kResnet34Unet: return std::make_shared<EncoderUNetImpl>(std::make_shared<Resnet34Encoder>(d), spec);
    case Arch::kInceptionV3Unet:
      return std::make_shared<EncoderUNetImpl>(std::make_shared<InceptionV3Encoder>(d), spec);
  }
  throw ConfigError("unknown architecture");
}

}  // namespace octskin::nn
