#include <cmath>

#include "cfmd/error.hpp"
#include "cfmd/generator.hpp"

namespace cfmd {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

std::vector<std::pair<int, int>> kernel_grid(const DeformKernel &kernel) {
    if (kernel.size < 1 || kernel.size % 2 == 0 || kernel.dilation < 1)
        throw InvalidInput("deformable kernel must have odd size and positive dilation");
    const int r = kernel.size / 2;
    std::vector<std::pair<int, int>> grid;
    for (int i = -r; i <= r; ++i)
        for (int j = -r; j <= r; ++j)
            grid.emplace_back(i * kernel.dilation, j * kernel.dilation);
    return grid;
}

torch::Tensor modulated_deform_conv(const torch::Tensor &input, const DeformableParams &params) {
    if (input.dim() != 4)
        throw InvalidInput("deform conv: expected [B,C,H,W] input");
    const auto grid_k = kernel_grid(params.kernel);
    const int64_t K = static_cast<int64_t>(grid_k.size());
    const int64_t B = input.size(0), C = input.size(1), H = input.size(2), W = input.size(3);
    if (params.offsets.sizes() != torch::IntArrayRef({B, 2 * K, H, W}))
        throw InvalidInput("deform conv: offsets must be [B,2K,H,W]");
    if (params.masks.sizes() != torch::IntArrayRef({B, K, H, W}))
        throw InvalidInput("deform conv: masks must be [B,K,H,W]");
    if (params.weight.dim() != 4 || params.weight.size(1) != C || params.weight.size(2) != params.kernel.size ||
        params.weight.size(3) != params.kernel.size)
        throw InvalidInput("deform conv: weight must be [C_out,C_in,k,k]");
    if (!torch::isfinite(input).all().item<bool>() || !torch::isfinite(params.offsets).all().item<bool>() ||
        !torch::isfinite(params.masks).all().item<bool>())
        throw NumericError("deform conv: non-finite input");

    const auto opts = input.options();
    std::vector<float> pk_row, pk_col;
    for (const auto &[dy, dx] : grid_k) {
        pk_row.push_back(static_cast<float>(dy));
        pk_col.push_back(static_cast<float>(dx));
    }
    auto rows = torch::arange(H, opts).view({H, 1, 1}) + torch::tensor(pk_row, opts).view({1, 1, K});
    auto cols = torch::arange(W, opts).view({1, W, 1}) + torch::tensor(pk_col, opts).view({1, 1, K});

    auto off = params.offsets.view({B, K, 2, H, W});
    auto sample_row = rows.unsqueeze(0) + off.select(2, 0).permute({0, 2, 3, 1}); // [B,H,W,K]
    auto sample_col = cols.unsqueeze(0) + off.select(2, 1).permute({0, 2, 3, 1});

    // Pixel centres in grid_sample's normalised frame (align_corners = false).
    auto gx = (2.0 * sample_col + 1.0) / static_cast<double>(W) - 1.0;
    auto gy = (2.0 * sample_row + 1.0) / static_cast<double>(H) - 1.0;
    auto grid = torch::stack({gx, gy}, -1).view({B, H, W * K, 2});

    auto sampled = F::grid_sample(input, grid,
                                  F::GridSampleFuncOptions()
                                      .mode(torch::kBilinear)
                                      .padding_mode(torch::kZeros)
                                      .align_corners(false))
                       .view({B, C, H, W, K});
    sampled = sampled * params.masks.permute({0, 2, 3, 1}).unsqueeze(1);
    auto columns = sampled.permute({0, 1, 4, 2, 3}).reshape({B, C * K, H * W});
    const auto out_channels = params.weight.size(0);
    return params.weight.reshape({out_channels, C * K}).matmul(columns).view({B, out_channels, H, W});
}

CADCImpl::CADCImpl(int in_channels, int out_channels, DeformKernel kernel) : kernel_(kernel) {
    const int K = kernel.taps();
    kernel_grid(kernel);
    const int pad = kernel.size / 2;
    offset_branch = register_module(
        "offset_branch", nn::Conv2d(nn::Conv2dOptions(in_channels, 2 * K, kernel.size).padding(pad)));
    mask_branch =
        register_module("mask_branch", nn::Conv2d(nn::Conv2dOptions(in_channels, K, kernel.size).padding(pad)));
    weight = register_parameter("weight", torch::empty({out_channels, in_channels, kernel.size, kernel.size}));
    torch::NoGradGuard guard;
    offset_branch->weight.zero_();
    offset_branch->bias.zero_();
    mask_branch->weight.zero_();
    mask_branch->bias.zero_();
    nn::init::kaiming_uniform_(weight, std::sqrt(5.0));
}

DeformableParams CADCImpl::params(const torch::Tensor &features) {
    DeformableParams p;
    p.offsets = offset_branch->forward(features);
    p.masks = torch::sigmoid(mask_branch->forward(features));
    p.weight = weight;
    p.kernel = kernel_;
    return p;
}

torch::Tensor CADCImpl::forward(const torch::Tensor &features) {
    return modulated_deform_conv(features, params(features));
}

} // namespace cfmd
