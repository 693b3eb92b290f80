#include "cfmd/discriminator.hpp"

#include <algorithm>

#include "cfmd/error.hpp"

namespace cfmd {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

void DiscriminatorConfig::validate() const {
    if (base_channels < 1)
        throw InvalidInput("discriminator: base_channels must be positive");
    if (depth < 1 || depth > 6)
        throw InvalidInput("discriminator: depth must lie in 1..6");
}

namespace {

int width_at(int base, int level) { return base << std::min(level, 3); }

} // namespace

DiscriminatorImpl::DiscriminatorImpl(DiscriminatorConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    const int c = cfg_.base_channels;
    stem_ = register_module("stem", nn::Conv2d(nn::Conv2dOptions(6, c, 3).padding(1)));
    down_ = register_module("down", nn::ModuleList());
    up_ = register_module("up", nn::ModuleList());
    for (int level = 1; level <= cfg_.depth; ++level)
        down_->push_back(nn::Conv2d(
            nn::Conv2dOptions(width_at(c, level - 1), width_at(c, level), 4).stride(2).padding(1)));
    // up_[i] merges the upsampled level (depth - i) with the skip at level (depth - i - 1).
    for (int level = cfg_.depth; level >= 1; --level)
        up_->push_back(nn::Conv2d(
            nn::Conv2dOptions(width_at(c, level) + width_at(c, level - 1), width_at(c, level - 1), 3).padding(1)));
    enc_head = register_module("enc_head", nn::Linear(width_at(c, cfg_.depth), 1));
    dec_head = register_module("dec_head", nn::Conv2d(nn::Conv2dOptions(c, 1, 1)));
    q_head = register_module("q_head", nn::Conv2d(nn::Conv2dOptions(c, 1, 1)));
}

DiscriminatorOutput DiscriminatorImpl::forward(const torch::Tensor &blur, const torch::Tensor &sharp) {
    if (blur.dim() != 4 || sharp.dim() != 4 || blur.sizes() != sharp.sizes() || blur.size(1) != 3)
        throw InvalidInput("discriminator: blur and sharp must both be [B,3,H,W] of equal shape");
    const auto stride = cfg_.total_stride();
    if (blur.size(2) % stride != 0 || blur.size(3) % stride != 0)
        throw InvalidInput("discriminator: H and W must be divisible by " + std::to_string(stride));
    const auto act = F::LeakyReLUFuncOptions().negative_slope(cfg_.leaky_slope);

    std::vector<torch::Tensor> skips;
    auto x = F::leaky_relu(stem_->forward(torch::cat({blur, sharp}, 1)), act);
    for (const auto &d : *down_) {
        skips.push_back(x);
        x = F::leaky_relu(d->as<nn::Conv2d>()->forward(x), act);
    }
    DiscriminatorOutput out;
    out.enc_logit = enc_head->forward(x.mean({2, 3})).squeeze(1);
    for (const auto &u : *up_) {
        auto skip = skips.back();
        skips.pop_back();
        x = F::interpolate(x, F::InterpolateFuncOptions()
                                  .size(std::vector<int64_t>{skip.size(2), skip.size(3)})
                                  .mode(torch::kBilinear)
                                  .align_corners(false));
        x = F::leaky_relu(u->as<nn::Conv2d>()->forward(torch::cat({x, skip}, 1)), act);
    }
    out.dec_logit_map = dec_head->forward(x).squeeze(1);
    out.u_hat_2d = q_head->forward(x).squeeze(1);
    return out;
}

} // namespace cfmd
