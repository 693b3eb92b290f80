#include <cmath>

#include "cfmd/error.hpp"
#include "cfmd/generator.hpp"

namespace cfmd {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

void check_control(const torch::Tensor &u) {
    if (!u.defined() || u.numel() == 0)
        throw InvalidInput("control factor missing");
    if (!torch::isfinite(u).all().item<bool>())
        throw InvalidInput("control factor must be finite");
    const auto lo = u.min().item<double>(), hi = u.max().item<double>();
    if (lo < 0.0 || hi > 1.0)
        throw InvalidInput("control factor must lie in [0,1], got range [" + std::to_string(lo) + ", " +
                           std::to_string(hi) + "]");
}

int64_t stage_extent(int64_t extent, int stage) {
    if (stage < 1 || stage > 3)
        throw InvalidInput("unknown stage " + std::to_string(stage) + " (expected 1..3)");
    return extent >> (stage - 1);
}

MappingNetworkImpl::MappingNetworkImpl(int layers, int channels, double slope) : channels_(channels), slope_(slope) {
    if (layers < 1 || channels < 1)
        throw InvalidInput("mapping network needs at least one layer and one channel");
    layers_ = register_module("layers", nn::ModuleList());
    for (int i = 0; i < layers; ++i) {
        nn::Conv2d conv(nn::Conv2dOptions(i == 0 ? 1 : channels, channels, 1));
        // He init for the leaky chain keeps activation scale across eight layers.
        torch::NoGradGuard guard;
        nn::init::kaiming_normal_(conv->weight, slope, torch::kFanIn, torch::kLeakyReLU);
        conv->bias.zero_();
        layers_->push_back(conv);
    }
}

ControlField MappingNetworkImpl::forward(const torch::Tensor &u, int64_t height, int64_t width) {
    if (height <= 0 || width <= 0)
        throw InvalidInput("mapping: spatial extent must be positive");
    check_control(u);
    const auto batch = u.numel();
    auto scalar = u.reshape({batch, 1, 1, 1}).to(torch::kFloat32);
    auto x = scalar;
    for (const auto &layer : *layers_)
        x = F::leaky_relu(layer->as<nn::Conv2d>()->forward(x), F::LeakyReLUFuncOptions().negative_slope(slope_));
    ControlField field;
    field.u = u.reshape({batch}).to(torch::kFloat32);
    field.u_2d = scalar.expand({batch, 1, height, width});
    field.u_f = x.expand({batch, channels_, height, width});
    return field;
}

ControlField MappingNetworkImpl::forward(double u, int64_t height, int64_t width) {
    return forward(torch::full({1}, u, torch::kFloat64), height, width);
}

ControlResizerImpl::ControlResizerImpl(int stage, int in_channels, int out_channels) : stage_(stage) {
    stage_extent(1, stage);
    proj = register_module("proj", nn::Conv2d(nn::Conv2dOptions(in_channels, out_channels, 1)));
}

torch::Tensor ControlResizerImpl::forward(const torch::Tensor &u_f) {
    if (u_f.dim() != 4)
        throw InvalidInput("resize_control: expected [B,C,H,W] control field");
    const auto h = stage_extent(u_f.size(2), stage_);
    const auto w = stage_extent(u_f.size(3), stage_);
    auto resized = u_f;
    if (h != u_f.size(2) || w != u_f.size(3))
        resized = F::interpolate(u_f, F::InterpolateFuncOptions()
                                          .size(std::vector<int64_t>{h, w})
                                          .mode(torch::kBilinear)
                                          .align_corners(false));
    return proj->forward(resized);
}

} // namespace cfmd
