#include "cfmd/generator.hpp"

#include "cfmd/error.hpp"

namespace cfmd {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

namespace {

torch::Tensor leaky(const torch::Tensor &x, double slope) {
    return F::leaky_relu(x, F::LeakyReLUFuncOptions().negative_slope(slope));
}

nn::Conv2d conv3x3(int in, int out, int stride = 1) {
    return nn::Conv2d(nn::Conv2dOptions(in, out, 3).stride(stride).padding(1));
}

nn::Conv2d conv1x1(int in, int out) { return nn::Conv2d(nn::Conv2dOptions(in, out, 1)); }

torch::Tensor resize_to(const torch::Tensor &x, int64_t h, int64_t w) {
    if (x.size(2) == h && x.size(3) == w)
        return x;
    return F::interpolate(
        x, F::InterpolateFuncOptions().size(std::vector<int64_t>{h, w}).mode(torch::kBilinear).align_corners(false));
}

} // namespace

void GeneratorConfig::validate() const {
    if (scales != 3)
        throw InvalidInput("generator: scales is fixed at 3");
    if (n_blocks_per_stage < 1)
        throw InvalidInput("generator: n_blocks_per_stage must be >= 1");
    if (base_channels < 4)
        throw InvalidInput("generator: base_channels must be >= 4");
    if (mapping_layers < 1 || mapping_channels < 1)
        throw InvalidInput("generator: mapping network must be non-empty");
}

ContAdaBlockImpl::ContAdaBlockImpl(int channels, double slope) : slope_(slope) {
    conv_in = register_module("conv_in", conv3x3(channels, channels));
    fuse = register_module("fuse", conv1x1(2 * channels, channels));
    cadc = register_module("cadc", CADC(channels, channels));
    caca = register_module("caca", CACA(channels, 4, slope));
}

torch::Tensor ContAdaBlockImpl::forward(const torch::Tensor &features, const torch::Tensor &stage_control) {
    if (features.dim() != 4 || stage_control.dim() != 4 || features.size(0) != stage_control.size(0) ||
        features.size(1) != stage_control.size(1) || features.size(2) != stage_control.size(2) ||
        features.size(3) != stage_control.size(3))
        throw InvalidInput("ContAda: feature map and stage control field differ in shape");
    auto initial = leaky(conv_in->forward(features), slope_);
    auto fused = fuse->forward(torch::cat({initial, stage_control}, 1));
    return features + caca->forward(fused, cadc->forward(fused));
}

ContAdaStageImpl::ContAdaStageImpl(int stage, int channels, int n_blocks, int map_channels, double slope) {
    resizer = register_module("resizer", ControlResizer(stage, map_channels, channels));
    blocks = register_module("blocks", nn::ModuleList());
    for (int i = 0; i < n_blocks; ++i)
        blocks->push_back(ContAdaBlock(channels, slope));
}

torch::Tensor ContAdaStageImpl::forward(torch::Tensor features, const torch::Tensor &u_f) {
    const auto control = resizer->forward(u_f);
    for (const auto &b : *blocks)
        features = b->as<ContAdaBlock>()->forward(features, control);
    return features;
}

SCMImpl::SCMImpl(int out_channels, double slope) {
    const int q = std::max(out_channels / 4, 1), h = std::max(out_channels / 2, 1);
    body_ = register_module("body", nn::Sequential(conv3x3(3, q), nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(slope)),
                                                   conv3x3(q, h), nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(slope)),
                                                   conv3x3(h, h), nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(slope)),
                                                   conv3x3(h, out_channels - 3),
                                                   nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(slope))));
    fuse_ = register_module("fuse", conv1x1(out_channels, out_channels));
}

torch::Tensor SCMImpl::forward(const torch::Tensor &image) {
    return fuse_->forward(torch::cat({body_->forward(image), image}, 1));
}

FAMImpl::FAMImpl(int channels) { conv_ = register_module("conv", conv3x3(channels, channels)); }

torch::Tensor FAMImpl::forward(const torch::Tensor &x, const torch::Tensor &shallow) {
    return x + conv_->forward(x * shallow);
}

AFFImpl::AFFImpl(int in_channels, int out_channels, double slope) : slope_(slope) {
    squeeze_ = register_module("squeeze", conv1x1(in_channels, out_channels));
    conv_ = register_module("conv", conv3x3(out_channels, out_channels));
}

torch::Tensor AFFImpl::forward(const std::vector<torch::Tensor> &encoder_features, int64_t height, int64_t width) {
    std::vector<torch::Tensor> resized;
    for (const auto &f : encoder_features)
        resized.push_back(resize_to(f, height, width));
    return conv_->forward(leaky(squeeze_->forward(torch::cat(resized, 1)), slope_));
}

std::vector<torch::Tensor> image_pyramid(const torch::Tensor &image) {
    auto half = F::avg_pool2d(image, F::AvgPool2dFuncOptions(2));
    auto quarter = F::avg_pool2d(half, F::AvgPool2dFuncOptions(2));
    return {quarter, half, image};
}

GeneratorImpl::GeneratorImpl(GeneratorConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    const double s = cfg_.leaky_slope;
    const int c1 = cfg_.stage_channels(1), c2 = cfg_.stage_channels(2), c3 = cfg_.stage_channels(3);
    const int nb = cfg_.n_blocks_per_stage, mc = cfg_.mapping_channels;

    mapping = register_module("mapping", MappingNetwork(cfg_.mapping_layers, mc, s));
    feat_in_ = register_module("feat_in", conv3x3(3, c1));
    down12_ = register_module("down12", conv3x3(c1, c2, 2));
    down23_ = register_module("down23", conv3x3(c2, c3, 2));
    scm2_ = register_module("scm2", SCM(c2, s));
    scm3_ = register_module("scm3", SCM(c3, s));
    fam2_ = register_module("fam2", FAM(c2));
    fam3_ = register_module("fam3", FAM(c3));
    aff1_ = register_module("aff1", AFF(c1 + c2 + c3, c1, s));
    aff2_ = register_module("aff2", AFF(c1 + c2 + c3, c2, s));
    const std::array<int, 3> widths{c1, c2, c3};
    for (int n = 1; n <= 3; ++n) {
        const auto i = static_cast<size_t>(n - 1);
        enc_[i] = register_module("enc" + std::to_string(n), ContAdaStage(n, widths[i], nb, mc, s));
        dec_[i] = register_module("dec" + std::to_string(n), ContAdaStage(n, widths[i], nb, mc, s));
        heads_[i] = register_module("head" + std::to_string(n), conv3x3(widths[i], 3));
    }
    up32_ = register_module("up32", nn::ConvTranspose2d(nn::ConvTranspose2dOptions(c3, c2, 4).stride(2).padding(1)));
    up21_ = register_module("up21", nn::ConvTranspose2d(nn::ConvTranspose2dOptions(c2, c1, 4).stride(2).padding(1)));
    merge2_ = register_module("merge2", conv1x1(2 * c2, c2));
    merge1_ = register_module("merge1", conv1x1(2 * c1, c1));

    // Heads start near zero so every scale begins as its resized blur.
    torch::NoGradGuard guard;
    for (auto &head : heads_) {
        head->weight.mul_(0.01);
        head->bias.zero_();
    }
}

MultiScaleOutput GeneratorImpl::forward(const torch::Tensor &blur, const torch::Tensor &u) {
    if (blur.dim() != 4 || blur.size(1) != 3)
        throw InvalidInput("generator: blur must be [B,3,H,W]");
    const int64_t H = blur.size(2), W = blur.size(3);
    if (H % 4 != 0 || W % 4 != 0 || H == 0 || W == 0)
        throw InvalidInput("generator: H and W must be positive multiples of 4, got " + std::to_string(H) + "x" +
                           std::to_string(W));
    if (u.numel() != blur.size(0))
        throw InvalidInput("generator: one control factor per batch element required");
    const double s = cfg_.leaky_slope;

    const auto field = mapping->forward(u, H, W);
    const auto pyramid = image_pyramid(blur);
    const auto &b4 = pyramid[0];
    const auto &b2 = pyramid[1];

    auto e1 = enc_[0]->forward(leaky(feat_in_->forward(blur), s), field.u_f);
    auto x2 = fam2_->forward(leaky(down12_->forward(e1), s), scm2_->forward(b2));
    auto e2 = enc_[1]->forward(x2, field.u_f);
    auto x3 = fam3_->forward(leaky(down23_->forward(e2), s), scm3_->forward(b4));
    auto e3 = enc_[2]->forward(x3, field.u_f);

    std::vector<torch::Tensor> encoded{e1, e2, e3};
    auto fused1 = aff1_->forward(encoded, H, W);
    auto fused2 = aff2_->forward(encoded, H / 2, W / 2);

    MultiScaleOutput out;
    auto d3 = dec_[2]->forward(e3, field.u_f);
    out.images.push_back(heads_[2]->forward(d3) + b4);
    auto d2 = merge2_->forward(torch::cat({leaky(up32_->forward(d3), s), fused2}, 1));
    d2 = dec_[1]->forward(d2, field.u_f);
    out.images.push_back(heads_[1]->forward(d2) + b2);
    auto d1 = merge1_->forward(torch::cat({leaky(up21_->forward(d2), s), fused1}, 1));
    d1 = dec_[0]->forward(d1, field.u_f);
    out.images.push_back(heads_[0]->forward(d1) + blur);
    return out;
}

MultiScaleOutput GeneratorImpl::forward(const torch::Tensor &blur, double u) {
    return forward(blur, torch::full({blur.size(0)}, u, torch::kFloat64));
}

torch::Tensor GeneratorImpl::restore(const torch::Tensor &blur, double u) {
    if (blur.dim() != 3)
        throw InvalidInput("restore: expected a [3,H,W] image");
    torch::NoGradGuard guard;
    return forward(blur.unsqueeze(0), u).full().squeeze(0).clamp(0.0, 1.0);
}

} // namespace cfmd
