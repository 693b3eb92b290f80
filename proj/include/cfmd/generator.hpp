#pragma once

#include <array>
#include <utility>
#include <vector>

#include <torch/torch.h>

namespace cfmd {

struct GeneratorConfig {
    int base_channels = 32;     // channels of the first encoder stage
    int n_blocks_per_stage = 8; // ContAda blocks per encoder/decoder stage
    int scales = 3;
    int mapping_layers = 8;
    int mapping_channels = 64;
    double leaky_slope = 0.2;

    void validate() const;
    int stage_channels(int stage) const { return base_channels << (stage - 1); }
    friend bool operator==(const GeneratorConfig &, const GeneratorConfig &) = default;
};

// u per batch element, its constant 2-D expansion and the 64-channel mapped field.
struct ControlField {
    torch::Tensor u;    // [B]
    torch::Tensor u_2d; // [B,1,H,W]
    torch::Tensor u_f;  // [B,C_map,H,W]
};

// Stage n in {1,2,3} works at extent / 2^(n-1).
int64_t stage_extent(int64_t extent, int stage);

// Eight 1x1 conv + leaky layers lifting u to the feature control field.
class MappingNetworkImpl : public torch::nn::Module {
public:
    MappingNetworkImpl(int layers = 8, int channels = 64, double slope = 0.2);

    // Every layer is pointwise, so the chain runs once per batch element and the
    // result is broadcast over H x W.
    ControlField forward(const torch::Tensor &u, int64_t height, int64_t width);
    ControlField forward(double u, int64_t height, int64_t width);

    int out_channels() const { return channels_; }

private:
    torch::nn::ModuleList layers_;
    int channels_;
    double slope_;
};
TORCH_MODULE(MappingNetwork);

// Bilinear resize of u_f to the stage grid, then a 1x1 projection to C_n channels.
class ControlResizerImpl : public torch::nn::Module {
public:
    ControlResizerImpl(int stage, int in_channels, int out_channels);
    torch::Tensor forward(const torch::Tensor &u_f);

    int stage() const { return stage_; }
    torch::nn::Conv2d proj{nullptr};

private:
    int stage_;
};
TORCH_MODULE(ControlResizer);

struct DeformKernel {
    int size = 3;
    int dilation = 1;
    int taps() const { return size * size; }
};

// Pre-specified sampling grid p_k as (row, col) pairs, row-major over the kernel.
std::vector<std::pair<int, int>> kernel_grid(const DeformKernel &kernel);

struct DeformableParams {
    torch::Tensor offsets; // [B,2K,H,W]; channel 2k is the row shift, 2k+1 the column shift
    torch::Tensor masks;   // [B,K,H,W] in [0,1]
    torch::Tensor weight;  // [C_out,C_in,k,k]
    DeformKernel kernel;
};

// out(p) = sum_k w_k * in(p + p_k + dp_k) * m_k, bilinear sampling with zeros outside.
torch::Tensor modulated_deform_conv(const torch::Tensor &input, const DeformableParams &params);

// Control-adaptive deformable convolution. Offsets and masks come from two 3x3 conv
// branches over the fused features; both branches start at zero so offsets are 0
// and masks are sigmoid(0) = 0.5.
class CADCImpl : public torch::nn::Module {
public:
    CADCImpl(int in_channels, int out_channels, DeformKernel kernel = {});

    DeformableParams params(const torch::Tensor &features);
    torch::Tensor forward(const torch::Tensor &features);

    torch::nn::Conv2d offset_branch{nullptr};
    torch::nn::Conv2d mask_branch{nullptr};
    torch::Tensor weight;

private:
    DeformKernel kernel_;
};
TORCH_MODULE(CADC);

// Control-adaptive channel attention: GAP -> 1x1 -> leaky -> 1x1 -> sigmoid gates on F_dc.
class CACAImpl : public torch::nn::Module {
public:
    CACAImpl(int channels, int reduction = 4, double slope = 0.2);

    torch::Tensor gates(const torch::Tensor &fused);
    torch::Tensor forward(const torch::Tensor &fused, const torch::Tensor &deformed);

    torch::nn::Conv2d squeeze{nullptr};
    torch::nn::Conv2d excite{nullptr};

private:
    double slope_;
};
TORCH_MODULE(CACA);

// Residual block: F_Im + CACA(F_u, CADC(F_u)) with F_u = 1x1(cat(leaky(3x3(F_Im)), u_f^(n))).
class ContAdaBlockImpl : public torch::nn::Module {
public:
    ContAdaBlockImpl(int channels, double slope = 0.2);
    torch::Tensor forward(const torch::Tensor &features, const torch::Tensor &stage_control);

    torch::nn::Conv2d conv_in{nullptr};
    torch::nn::Conv2d fuse{nullptr};
    CADC cadc{nullptr};
    CACA caca{nullptr};

private:
    double slope_;
};
TORCH_MODULE(ContAdaBlock);

// One encoder or decoder stage: a control resizer shared by n ContAda blocks.
class ContAdaStageImpl : public torch::nn::Module {
public:
    ContAdaStageImpl(int stage, int channels, int blocks, int map_channels, double slope);
    torch::Tensor forward(torch::Tensor features, const torch::Tensor &u_f);

    ControlResizer resizer{nullptr};
    torch::nn::ModuleList blocks;
};
TORCH_MODULE(ContAdaStage);

// Shallow convolutional module on a downsampled blur.
class SCMImpl : public torch::nn::Module {
public:
    SCMImpl(int out_channels, double slope);
    torch::Tensor forward(const torch::Tensor &image);

private:
    torch::nn::Sequential body_;
    torch::nn::Conv2d fuse_{nullptr};
};
TORCH_MODULE(SCM);

// Feature attention module: x + conv3x3(x * shallow).
class FAMImpl : public torch::nn::Module {
public:
    explicit FAMImpl(int channels);
    torch::Tensor forward(const torch::Tensor &x, const torch::Tensor &shallow);

private:
    torch::nn::Conv2d conv_{nullptr};
};
TORCH_MODULE(FAM);

// Asymmetric feature fusion of all encoder stages at one target stage.
class AFFImpl : public torch::nn::Module {
public:
    AFFImpl(int in_channels, int out_channels, double slope);
    torch::Tensor forward(const std::vector<torch::Tensor> &encoder_features, int64_t height, int64_t width);

private:
    torch::nn::Conv2d squeeze_{nullptr};
    torch::nn::Conv2d conv_{nullptr};
    double slope_;
};
TORCH_MODULE(AFF);

// Restored images at 1/4, 1/2 and full resolution (index 0, 1, 2).
struct MultiScaleOutput {
    std::vector<torch::Tensor> images;
    const torch::Tensor &full() const { return images.back(); }
};

// Blur [B,3,H,W] to the three-scale pyramid [B,3,H/4,W/4], [B,3,H/2,W/2], [B,3,H,W].
std::vector<torch::Tensor> image_pyramid(const torch::Tensor &image);

class GeneratorImpl : public torch::nn::Module {
public:
    explicit GeneratorImpl(GeneratorConfig cfg = {});

    // blur: [B,3,H,W] with H, W divisible by 4; u: [B] in [0,1].
    MultiScaleOutput forward(const torch::Tensor &blur, const torch::Tensor &u);
    MultiScaleOutput forward(const torch::Tensor &blur, double u);

    // Clamped full-resolution output for a single [3,H,W] image.
    torch::Tensor restore(const torch::Tensor &blur, double u);

    const GeneratorConfig &config() const { return cfg_; }

    MappingNetwork mapping{nullptr};

private:
    GeneratorConfig cfg_;
    torch::nn::Conv2d feat_in_{nullptr};
    torch::nn::Conv2d down12_{nullptr}, down23_{nullptr};
    SCM scm2_{nullptr}, scm3_{nullptr};
    FAM fam2_{nullptr}, fam3_{nullptr};
    AFF aff1_{nullptr}, aff2_{nullptr};
    std::array<ContAdaStage, 3> enc_{nullptr, nullptr, nullptr};
    std::array<ContAdaStage, 3> dec_{nullptr, nullptr, nullptr};
    torch::nn::ConvTranspose2d up32_{nullptr}, up21_{nullptr};
    torch::nn::Conv2d merge2_{nullptr}, merge1_{nullptr};
    std::array<torch::nn::Conv2d, 3> heads_{nullptr, nullptr, nullptr};
};
TORCH_MODULE(Generator);

// Throws InvalidInput when any u lies outside [0,1].
void check_control(const torch::Tensor &u);

} // namespace cfmd
