#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include <torch/torch.h>

#include "cfmd/discriminator.hpp"
#include "cfmd/generator.hpp"

namespace cfmd {

struct LossWeights {
    double lambda_Q = 0.05;
    double lambda_ar = 0.05;
    double lambda_adv = 0.1;
    double lambda_pix = 1.0;
    double lambda_per = 0.01;
    double epsilon_charbonnier = 1e-3;

    void validate() const;
    friend bool operator==(const LossWeights &, const LossWeights &) = default;
};

// log(max(sigmoid(x), 1e-7)).
torch::Tensor clamped_log_sigmoid(const torch::Tensor &logits);

struct DiscriminatorLoss {
    torch::Tensor total;
    torch::Tensor enc; // L_Denc
    torch::Tensor dec; // L_Ddec
    torch::Tensor q;   // L_Q
};

struct GeneratorLoss {
    torch::Tensor total;
    torch::Tensor ar;  // L_ar
    torch::Tensor adv; // L_adv
    torch::Tensor pix; // L_pix
    torch::Tensor per; // L_per
};

// Feature pyramid used by the perceptual term. Implementations must be frozen.
class PerceptualExtractor {
public:
    virtual ~PerceptualExtractor() = default;
    virtual std::vector<torch::Tensor> features(const torch::Tensor &image) = 0;
    virtual std::vector<double> layer_weights() const = 0;

    // sum_l w_l * mean((phi_l(a) - phi_l(b))^2)
    torch::Tensor distance(const torch::Tensor &a, const torch::Tensor &b);
};

// Frozen conv pyramid with weights drawn from its own seeded generator; every layer
// weighs 1/M.
class RandomConvPyramid : public PerceptualExtractor {
public:
    explicit RandomConvPyramid(uint64_t seed = 0x5eed, int layers = 5, double slope = 0.2);

    std::vector<torch::Tensor> features(const torch::Tensor &image) override;
    std::vector<double> layer_weights() const override;

private:
    struct Layer {
        torch::Tensor weight, bias;
        int64_t stride;
    };
    std::vector<Layer> layers_;
    double slope_;
};

// Per-pixel sqrt(||a - b||^2 + eps^2) with the norm over channels, averaged over pixels
// (and batch). a, b: [B,3,H,W].
torch::Tensor charbonnier(const torch::Tensor &a, const torch::Tensor &b, double eps);

// u_2d: [B,H,W]. q maps: [B,H,W].
DiscriminatorLoss loss_discriminator(const DiscriminatorOutput &d_real, const DiscriminatorOutput &d_fake,
                                     const torch::Tensor &q_real, const torch::Tensor &q_fake,
                                     const torch::Tensor &u_2d, const LossWeights &w);

// gt_scales follow MultiScaleOutput ordering (1/4, 1/2, full).
GeneratorLoss loss_generator(const DiscriminatorOutput &d_fake, const torch::Tensor &q_fake,
                             const torch::Tensor &u_2d, const MultiScaleOutput &outputs,
                             const std::vector<torch::Tensor> &gt_scales, const LossWeights &w,
                             PerceptualExtractor &per);

} // namespace cfmd
