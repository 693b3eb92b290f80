#include <algorithm>

#include "cfmd/error.hpp"
#include "cfmd/generator.hpp"

namespace cfmd {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

CACAImpl::CACAImpl(int channels, int reduction, double slope) : slope_(slope) {
    const int hidden = std::max(channels / std::max(reduction, 1), 4);
    squeeze = register_module("squeeze", nn::Conv2d(nn::Conv2dOptions(channels, hidden, 1)));
    excite = register_module("excite", nn::Conv2d(nn::Conv2dOptions(hidden, channels, 1)));
}

torch::Tensor CACAImpl::gates(const torch::Tensor &fused) {
    auto pooled = fused.mean({2, 3}, /*keepdim=*/true);
    auto hidden = F::leaky_relu(squeeze->forward(pooled), F::LeakyReLUFuncOptions().negative_slope(slope_));
    return torch::sigmoid(excite->forward(hidden));
}

torch::Tensor CACAImpl::forward(const torch::Tensor &fused, const torch::Tensor &deformed) {
    if (fused.dim() != 4 || deformed.dim() != 4 || fused.size(1) != deformed.size(1))
        throw InvalidInput("CACA: channel mismatch between fused and deformed features");
    if (fused.size(1) != squeeze->options.in_channels())
        throw InvalidInput("CACA: input channels do not match the module");
    return deformed * gates(fused);
}

} // namespace cfmd
