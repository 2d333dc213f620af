// Copyright 2026 The seglab Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "seglab/models.hpp"

#include <filesystem>

#include "seglab/hash.hpp"

namespace seglab {

namespace nn = torch::nn;

namespace {

nn::Conv2d conv(int in, int out, int k, int stride = 1, int dilation = 1, bool bias = false) {
  const int pad = dilation * (k - 1) / 2;
  return nn::Conv2d(nn::Conv2dOptions(in, out, k).stride(stride).padding(pad).dilation(dilation).bias(bias));
}

Size2 dims_of(const torch::Tensor& t) { return {static_cast<int>(t.size(2)), static_cast<int>(t.size(3))}; }

torch::Tensor resize_bilinear(const torch::Tensor& x, int64_t h, int64_t w) {
  if (x.size(2) == h && x.size(3) == w) return x;
  return nn::functional::interpolate(
      x, nn::functional::InterpolateFuncOptions().size(std::vector<int64_t>{h, w}).mode(torch::kBilinear).align_corners(false));
}

/// Residual unit: basic (two 3x3) or bottleneck (1x1, 3x3, 1x1 with x4 expansion).
struct ResidualUnitImpl : nn::Module {
  ResidualUnitImpl(BlockKind kind, int in, int width, int stride, int dilation) : kind(kind) {
    const int out = kind == BlockKind::basic ? width : width * 4;
    if (kind == BlockKind::basic) {
      conv1 = register_module("conv1", conv(in, width, 3, stride, dilation));
      bn1 = register_module("bn1", nn::BatchNorm2d(width));
      conv2 = register_module("conv2", conv(width, width, 3, 1, dilation));
      bn2 = register_module("bn2", nn::BatchNorm2d(width));
    } else {
      conv1 = register_module("conv1", conv(in, width, 1));
      bn1 = register_module("bn1", nn::BatchNorm2d(width));
      conv2 = register_module("conv2", conv(width, width, 3, stride, dilation));
      bn2 = register_module("bn2", nn::BatchNorm2d(width));
      conv3 = register_module("conv3", conv(width, out, 1));
      bn3 = register_module("bn3", nn::BatchNorm2d(out));
    }
    if (stride != 1 || in != out) {
      down_conv = register_module("down_conv", conv(in, out, 1, stride));
      down_bn = register_module("down_bn", nn::BatchNorm2d(out));
    }
  }

  torch::Tensor forward(const torch::Tensor& x) {
    auto y = torch::relu(bn1(conv1(x)));
    if (kind == BlockKind::basic) {
      y = bn2(conv2(y));
    } else {
      y = torch::relu(bn2(conv2(y)));
      y = bn3(conv3(y));
    }
    const auto shortcut = down_conv ? down_bn(down_conv(x)) : x;
    return torch::relu(y + shortcut);
  }

  /// Dilation of the unit's 3x3 convolution.
  int dilation() const {
    const auto& c = kind == BlockKind::basic ? conv1 : conv2;
    return static_cast<int>((*c->options.dilation())[0]);
  }

  BlockKind kind;
  nn::Conv2d conv1{nullptr}, conv2{nullptr}, conv3{nullptr}, down_conv{nullptr};
  nn::BatchNorm2d bn1{nullptr}, bn2{nullptr}, bn3{nullptr}, down_bn{nullptr};
};
TORCH_MODULE(ResidualUnit);

struct EncoderFeatures {
  torch::Tensor stem_conv, stem_out;
  std::array<torch::Tensor, 4> blocks;
};

struct ResNetEncoderImpl : nn::Module {
  ResNetEncoderImpl(const ArchSpec& spec, const StridePlan& plan) : use_pool(spec.max_pool_in_stem) {
    const auto& info = encoder_info(spec.encoder);
    const int base = scaled_width(64, spec.width_multiplier);
    stem_channels = base;
    stem = register_module("stem", conv(3, base, 7, 2));
    stem_bn = register_module("stem_bn", nn::BatchNorm2d(base));
    int in = base;
    for (int b = 0; b < 4; ++b) {
      const int width = scaled_width(64 << b, spec.width_multiplier);
      nn::Sequential layer;
      for (int u = 0; u < info.units[b]; ++u) {
        const int stride = u == 0 ? plan.block_first_unit_stride[b] : 1;
        auto unit = ResidualUnit(info.kind, in, width, stride, plan.unit_dilations[b][u]);
        in = info.kind == BlockKind::basic ? width : width * 4;
        layer->push_back(unit);
        units[b].push_back(unit);
      }
      block_channels[b] = in;
      layers[b] = register_module("layer" + std::to_string(b + 1), layer);
    }
  }

  EncoderFeatures forward(const torch::Tensor& x) {
    EncoderFeatures f;
    f.stem_conv = torch::relu(stem_bn(stem(x)));
    f.stem_out = use_pool ? nn::functional::max_pool2d(f.stem_conv, nn::functional::MaxPool2dFuncOptions(3).stride(2).padding(1))
                          : f.stem_conv;
    auto y = f.stem_out;
    for (int b = 0; b < 4; ++b) {
      y = layers[b]->forward(y);
      f.blocks[b] = y;
    }
    return f;
  }

  bool use_pool;
  int stem_channels = 64;
  std::array<int, 4> block_channels{};
  nn::Conv2d stem{nullptr};
  nn::BatchNorm2d stem_bn{nullptr};
  std::array<nn::Sequential, 4> layers;
  std::array<std::vector<ResidualUnit>, 4> units;
};
TORCH_MODULE(ResNetEncoder);

/// Upsampling by an integer factor: bilinear resize or a learned transposed conv.
struct UpsampleImpl : nn::Module {
  UpsampleImpl(Upsampling mode, int channels, int factor) : factor(factor) {
    if (mode == Upsampling::transposed_conv && factor > 1)
      deconv = register_module("deconv", nn::ConvTranspose2d(nn::ConvTranspose2dOptions(channels, channels, factor).stride(factor)));
  }
  torch::Tensor forward(const torch::Tensor& x, int64_t h, int64_t w) {
    if (deconv) {
      auto y = deconv(x);
      return resize_bilinear(y, h, w);  // no-op when sizes line up, which the padding contract ensures
    }
    return resize_bilinear(x, h, w);
  }
  int factor;
  nn::ConvTranspose2d deconv{nullptr};
};
TORCH_MODULE(Upsample);

struct ConvBnReluImpl : nn::Module {
  ConvBnReluImpl(int in, int out, int k, int dilation = 1) {
    c = register_module("conv", conv(in, out, k, 1, dilation));
    bn = register_module("bn", nn::BatchNorm2d(out));
  }
  torch::Tensor forward(const torch::Tensor& x) { return torch::relu(bn(c(x))); }
  nn::Conv2d c{nullptr};
  nn::BatchNorm2d bn{nullptr};
};
TORCH_MODULE(ConvBnRelu);

}  // namespace

namespace detail {

struct SegNetImpl : nn::Module {
  SegNetImpl(const ArchSpec& s) : spec(s), plan(stride_plan(s)) {
    encoder = register_module("encoder", ResNetEncoder(spec, plan));
  }
  virtual torch::Tensor forward_features(const torch::Tensor& x, EncoderFeatures* taps) = 0;

  ArchSpec spec;
  StridePlan plan;
  ResNetEncoder encoder{nullptr};
};

}  // namespace detail

namespace {

struct UNetDecoderBlockImpl : nn::Module {
  UNetDecoderBlockImpl(int in, int skip, int out, Upsampling mode, int factor) {
    up = register_module("up", Upsample(mode, in, factor));
    c1 = register_module("conv1", ConvBnRelu(in + skip, out, 3));
    c2 = register_module("conv2", ConvBnRelu(out, out, 3));
  }
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& skip, int64_t h, int64_t w) {
    auto y = up(x, h, w);
    if (skip.defined()) y = torch::cat({y, skip}, 1);
    return c2(c1(y));
  }
  Upsample up{nullptr};
  ConvBnRelu c1{nullptr}, c2{nullptr};
};
TORCH_MODULE(UNetDecoderBlock);

/// Encoder taps at every stride feed a mirrored decoder with fixed widths.
struct UNetImpl : detail::SegNetImpl {
  explicit UNetImpl(const ArchSpec& s) : SegNetImpl(s) {
    const int m_widths[5] = {256, 128, 64, 32, 16};
    const auto& enc = *encoder;
    const int skip_ch[5] = {enc.block_channels[2], enc.block_channels[1], enc.block_channels[0], enc.stem_channels, 0};
    const int skip_stride[5] = {plan.block_strides[2], plan.block_strides[1], plan.block_strides[0], plan.stem_conv_stride, 1};
    int in = enc.block_channels[3];
    int cur = plan.block_strides[3];
    for (int i = 0; i < 5; ++i) {
      const int out = scaled_width(m_widths[i], spec.width_multiplier);
      blocks.push_back(register_module("decoder" + std::to_string(i),
                                       UNetDecoderBlock(in, skip_ch[i], out, spec.decoder_upsampling, cur / skip_stride[i])));
      in = out;
      cur = skip_stride[i];
    }
    head = register_module("head", conv(in, spec.num_classes, 3, 1, 1, true));
  }

  torch::Tensor forward_features(const torch::Tensor& x, EncoderFeatures* taps) override {
    auto f = encoder->forward(x);
    const torch::Tensor skips[5] = {f.blocks[2], f.blocks[1], f.blocks[0], f.stem_conv, torch::Tensor()};
    auto y = f.blocks[3];
    for (int i = 0; i < 5; ++i) {
      const auto h = skips[i].defined() ? skips[i].size(2) : x.size(2);
      const auto w = skips[i].defined() ? skips[i].size(3) : x.size(3);
      y = blocks[i]->forward(y, skips[i], h, w);
    }
    if (taps) *taps = f;
    return head(y);
  }

  std::vector<UNetDecoderBlock> blocks;
  nn::Conv2d head{nullptr};
};

struct AsppImpl : nn::Module {
  AsppImpl(int in, int out, std::array<int, 3> rates) {
    b0 = register_module("b0", ConvBnRelu(in, out, 1));
    for (int i = 0; i < 3; ++i) atrous.push_back(register_module("b" + std::to_string(i + 1), ConvBnRelu(in, out, 3, rates[i])));
    pool_conv = register_module("pool_conv", conv(in, out, 1, 1, 1, true));
    project = register_module("project", ConvBnRelu(5 * out, out, 1));
  }
  torch::Tensor forward(const torch::Tensor& x) {
    std::vector<torch::Tensor> branches{b0(x)};
    for (auto& a : atrous) branches.push_back(a(x));
    auto pooled = torch::relu(pool_conv(x.mean({2, 3}, true)));
    branches.push_back(pooled.expand({-1, -1, x.size(2), x.size(3)}));
    return project(torch::cat(branches, 1));
  }
  ConvBnRelu b0{nullptr}, project{nullptr};
  std::vector<ConvBnRelu> atrous;
  nn::Conv2d pool_conv{nullptr};
};
TORCH_MODULE(Aspp);

/// Encoder -> ASPP -> upsample to the low-level tap -> concat -> refine -> upsample.
struct DeepLabV3PlusImpl : detail::SegNetImpl {
  explicit DeepLabV3PlusImpl(const ArchSpec& s) : SegNetImpl(s) {
    const int a = scaled_width(256, spec.width_multiplier);
    const int l = scaled_width(48, spec.width_multiplier);
    aspp = register_module("aspp", Aspp(encoder->block_channels[3], a, aspp_rates(spec.output_stride)));
    ll_project = register_module("decoder_ll_project", ConvBnRelu(encoder->stem_channels, l, 1));
    hl_up = register_module("decoder_hl_up", Upsample(spec.decoder_upsampling, a, plan.high_level_stride / plan.low_level_stride));
    refine1 = register_module("decoder_refine1", ConvBnRelu(a + l, a, 3));
    refine2 = register_module("decoder_refine2", ConvBnRelu(a, a, 3));
    classifier = register_module("decoder_classifier", conv(a, spec.num_classes, 1, 1, 1, true));
    out_up = register_module("decoder_out_up", Upsample(spec.decoder_upsampling, spec.num_classes, plan.low_level_stride));
  }

  torch::Tensor forward_features(const torch::Tensor& x, EncoderFeatures* taps) override {
    auto f = encoder->forward(x);
    auto ll = ll_project(f.stem_out);
    auto hl = hl_up(aspp(f.blocks[3]), ll.size(2), ll.size(3));
    auto y = refine2(refine1(torch::cat({hl, ll}, 1)));
    y = out_up(classifier(y), x.size(2), x.size(3));
    if (taps) *taps = f;
    return y;
  }

  Aspp aspp{nullptr};
  ConvBnRelu ll_project{nullptr}, refine1{nullptr}, refine2{nullptr};
  Upsample hl_up{nullptr}, out_up{nullptr};
  nn::Conv2d classifier{nullptr};
};

constexpr int kPadMultiple = 32;

torch::Tensor pad_to_multiple(const torch::Tensor& x) {
  const auto h = x.size(2), w = x.size(3);
  const auto ph = (kPadMultiple - h % kPadMultiple) % kPadMultiple;
  const auto pw = (kPadMultiple - w % kPadMultiple) % kPadMultiple;
  if (ph == 0 && pw == 0) return x;
  return nn::functional::pad(x, nn::functional::PadFuncOptions({0, pw, 0, ph}).mode(torch::kReplicate));
}

void init_parameters(nn::Module& m) {
  for (auto& sub : m.modules(/*include_self=*/true)) {
    if (auto* c = sub->as<nn::Conv2dImpl>()) {
      nn::init::kaiming_normal_(c->weight, 0.0, torch::kFanOut, torch::kReLU);
      if (c->bias.defined()) nn::init::zeros_(c->bias);
    } else if (auto* d = sub->as<nn::ConvTranspose2dImpl>()) {
      nn::init::kaiming_normal_(d->weight, 0.0, torch::kFanOut, torch::kReLU);
      if (d->bias.defined()) nn::init::zeros_(d->bias);
    }
  }
}

}  // namespace

Model::Model(std::shared_ptr<detail::SegNetImpl> net) : net_(std::move(net)) {}

const ArchSpec& Model::spec() const { return net_->spec; }
const StridePlan& Model::plan() const { return net_->plan; }
torch::nn::Module& Model::module() const { return *net_; }

torch::Tensor Model::forward(const torch::Tensor& x) const {
  if (x.dim() != 4 || x.size(1) != 3) throw Error("model input must be (N, 3, H, W)");
  const auto h = x.size(2), w = x.size(3);
  auto logits = net_->forward_features(pad_to_multiple(x), nullptr);
  if (logits.size(2) != h || logits.size(3) != w)
    logits = logits.index({torch::indexing::Slice(), torch::indexing::Slice(), torch::indexing::Slice(0, h),
                           torch::indexing::Slice(0, w)});
  return logits;
}

std::vector<torch::Tensor> Model::parameters() const { return net_->parameters(); }

std::int64_t Model::parameter_count(const std::string& prefix) const {
  std::int64_t n = 0;
  for (const auto& p : net_->named_parameters())
    if (p.key().rfind(prefix, 0) == 0) n += p.value().numel();
  return n;
}

std::string Model::parameter_hash() const {
  Fnv1a h;
  auto feed = [&](const std::string& name, const torch::Tensor& t) {
    h.update(name);
    auto c = t.detach().contiguous().to(torch::kCPU);
    h.update(c.data_ptr(), static_cast<std::size_t>(c.numel()) * c.element_size());
  };
  for (const auto& p : net_->named_parameters()) feed(p.key(), p.value());
  for (const auto& b : net_->named_buffers()) feed(b.key(), b.value());
  return h.hex();
}

void Model::train(bool on) const { net_->train(on); }
bool Model::is_training() const { return net_->is_training(); }

FeatureProbe Model::probe(Size2 input) const {
  torch::NoGradGuard ng;
  const bool was = net_->is_training();
  net_->eval();
  FeatureProbe p;
  p.input = input;
  auto x = pad_to_multiple(torch::zeros({1, 3, input.height, input.width}));
  p.padded_input = dims_of(x);
  EncoderFeatures f;
  p.logits = dims_of(net_->forward_features(x, &f));
  p.stem_conv = dims_of(f.stem_conv);
  p.stem_out = dims_of(f.stem_out);
  for (int b = 0; b < 4; ++b) p.blocks[b] = dims_of(f.blocks[b]);
  p.low_level = p.stem_out;
  p.high_level = p.blocks[3];
  net_->train(was);
  return p;
}

std::array<std::vector<int>, 4> Model::measured_unit_dilations() const {
  std::array<std::vector<int>, 4> out;
  for (int b = 0; b < 4; ++b)
    for (const auto& u : net_->encoder->units[b]) out[b].push_back(u->dilation());
  return out;
}

void Model::save_encoder(const std::string& path) const {
  torch::serialize::OutputArchive ar;
  net_->encoder->save(ar);
  ar.save_to(path);
}

void Model::load_encoder(const std::string& path) const {
  if (!std::filesystem::exists(path)) throw IoError("encoder weights file '" + path + "' not found");
  try {
    torch::serialize::InputArchive ar;
    ar.load_from(path);
    net_->encoder->load(ar);
  } catch (const c10::Error& e) {
    throw IoError("cannot load encoder weights '" + path + "': " + e.what_without_backtrace());
  }
}

Model build_model(const ArchSpec& spec, std::uint64_t seed) {
  spec.validate();
  torch::manual_seed(seed);
  std::shared_ptr<detail::SegNetImpl> net;
  if (spec.family == Family::unet) net = std::make_shared<UNetImpl>(spec);
  else net = std::make_shared<DeepLabV3PlusImpl>(spec);
  init_parameters(*net);
  Model m(net);
  if (!spec.encoder_weights.empty()) m.load_encoder(spec.encoder_weights);
  return m;
}

torch::Tensor images_to_unit_tensor(const std::vector<const Image*>& images) {
  if (images.empty()) throw Error("empty image batch");
  const int h = images[0]->height, w = images[0]->width;
  auto out = torch::empty({static_cast<int64_t>(images.size()), 3, h, w}, torch::kFloat32);
  auto acc = out.accessor<float, 4>();
  for (std::size_t n = 0; n < images.size(); ++n) {
    const Image& img = *images[n];
    if (img.height != h || img.width != w) throw Error("images in a batch must share dimensions");
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < 3; ++c) acc[n][c][y][x] = img.at(y, x, c) / 255.0f;
  }
  return out;
}

torch::Tensor normalize_unit_range(const torch::Tensor& x01) {
  auto mean = torch::tensor({kImageMean[0], kImageMean[1], kImageMean[2]}, x01.options()).view({1, 3, 1, 1});
  auto std = torch::tensor({kImageStd[0], kImageStd[1], kImageStd[2]}, x01.options()).view({1, 3, 1, 1});
  return (x01 - mean) / std;
}

torch::Tensor images_to_tensor(const std::vector<const Image*>& images) {
  return normalize_unit_range(images_to_unit_tensor(images));
}

torch::Tensor labels_to_tensor(const std::vector<const LabelMap*>& labels) {
  if (labels.empty()) throw Error("empty label batch");
  const int h = labels[0]->height, w = labels[0]->width;
  auto out = torch::empty({static_cast<int64_t>(labels.size()), h, w}, torch::kInt64);
  auto acc = out.accessor<int64_t, 3>();
  for (std::size_t n = 0; n < labels.size(); ++n) {
    if (labels[n]->height != h || labels[n]->width != w) throw Error("labels in a batch must share dimensions");
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) acc[n][y][x] = labels[n]->at(y, x);
  }
  return out;
}

LogitFn inference_fn(const Model& model) {
  return [model](const torch::Tensor& x) {
    torch::NoGradGuard ng;
    const bool was = model.is_training();
    model.train(false);
    auto y = model.forward(x);
    model.train(was);
    return y;
  };
}

}  // namespace seglab
