#pragma once

#include <torch/torch.h>

namespace cfmd {

struct DiscriminatorConfig {
    int base_channels = 32;
    int depth = 4; // down/up stages; inputs must be divisible by 2^depth
    double leaky_slope = 0.2;

    void validate() const;
    int64_t total_stride() const { return int64_t{1} << depth; }
    friend bool operator==(const DiscriminatorConfig &, const DiscriminatorConfig &) = default;
};

// Pre-sigmoid global and per-pixel logits plus the regressed control map.
struct DiscriminatorOutput {
    torch::Tensor enc_logit;     // [B]
    torch::Tensor dec_logit_map; // [B,H,W]
    torch::Tensor u_hat_2d;      // [B,H,W]
};

// U-Net discriminator over cat(blur, sharp). The decoder trunk feeds two sibling
// 1x1 heads: the per-pixel real/fake map and the control-factor regressor Q.
class DiscriminatorImpl : public torch::nn::Module {
public:
    explicit DiscriminatorImpl(DiscriminatorConfig cfg = {});

    DiscriminatorOutput forward(const torch::Tensor &blur, const torch::Tensor &sharp);

    const DiscriminatorConfig &config() const { return cfg_; }

    torch::nn::Linear enc_head{nullptr};
    torch::nn::Conv2d dec_head{nullptr};
    torch::nn::Conv2d q_head{nullptr};

private:
    DiscriminatorConfig cfg_;
    torch::nn::Conv2d stem_{nullptr};
    torch::nn::ModuleList down_;
    torch::nn::ModuleList up_;
};
TORCH_MODULE(Discriminator);

} // namespace cfmd
