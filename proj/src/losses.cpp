#include "cfmd/losses.hpp"

#include <cmath>
#include <random>

#include "cfmd/error.hpp"

namespace cfmd {

namespace F = torch::nn::functional;

void LossWeights::validate() const {
    for (double v : {lambda_Q, lambda_ar, lambda_adv, lambda_pix, lambda_per, epsilon_charbonnier})
        if (!(v >= 0.0) || !std::isfinite(v))
            throw InvalidInput("loss weights must be finite and non-negative");
    if (!(epsilon_charbonnier > 0.0))
        throw InvalidInput("epsilon_charbonnier must be positive");
}

torch::Tensor clamped_log_sigmoid(const torch::Tensor &logits) {
    static const double floor = std::log(1e-7);
    return torch::log_sigmoid(logits).clamp_min(floor);
}

torch::Tensor PerceptualExtractor::distance(const torch::Tensor &a, const torch::Tensor &b) {
    const auto fa = features(a);
    const auto fb = features(b);
    const auto w = layer_weights();
    if (fa.size() != fb.size() || fa.size() != w.size())
        throw InvalidInput("perceptual extractor: layer count mismatch");
    torch::Tensor total = torch::zeros({}, a.options());
    for (size_t l = 0; l < fa.size(); ++l)
        total = total + w[l] * (fa[l] - fb[l]).pow(2).mean();
    return total;
}

RandomConvPyramid::RandomConvPyramid(uint64_t seed, int layers, double slope) : slope_(slope) {
    if (layers < 1)
        throw InvalidInput("perceptual pyramid needs at least one layer");
    std::mt19937_64 rng(seed);
    int64_t in = 3;
    for (int l = 0; l < layers; ++l) {
        const int64_t out = std::min<int64_t>(16 << (l / 2), 64);
        const double stdev = std::sqrt(2.0 / static_cast<double>(in * 9));
        std::normal_distribution<float> dist(0.f, static_cast<float>(stdev));
        std::vector<float> w(static_cast<size_t>(out * in * 9));
        for (auto &v : w)
            v = dist(rng);
        Layer layer;
        layer.weight = torch::from_blob(w.data(), {out, in, 3, 3}, torch::kFloat32).clone();
        layer.bias = torch::zeros({out});
        layer.stride = l == 0 ? 1 : 2;
        layers_.push_back(layer);
        in = out;
    }
}

std::vector<torch::Tensor> RandomConvPyramid::features(const torch::Tensor &image) {
    std::vector<torch::Tensor> feats;
    auto x = image;
    for (const auto &layer : layers_) {
        x = F::conv2d(x, layer.weight, F::Conv2dFuncOptions().bias(layer.bias).stride(layer.stride).padding(1));
        x = F::leaky_relu(x, F::LeakyReLUFuncOptions().negative_slope(slope_));
        feats.push_back(x);
    }
    return feats;
}

std::vector<double> RandomConvPyramid::layer_weights() const {
    return std::vector<double>(layers_.size(), 1.0 / static_cast<double>(layers_.size()));
}

torch::Tensor charbonnier(const torch::Tensor &a, const torch::Tensor &b, double eps) {
    if (a.sizes() != b.sizes() || a.dim() != 4)
        throw InvalidInput("charbonnier: expected equal [B,C,H,W] tensors");
    return ((a - b).pow(2).sum(1) + eps * eps).sqrt().mean();
}

namespace {

void require_finite(const torch::Tensor &t, const char *what) {
    if (!torch::isfinite(t).all().item<bool>())
        throw NumericError(std::string("non-finite values in ") + what);
}

void require_map(const torch::Tensor &m, const torch::Tensor &u_2d, const char *what) {
    if (m.sizes() != u_2d.sizes())
        throw InvalidInput(std::string(what) + " must match the control map shape");
}

} // namespace

DiscriminatorLoss loss_discriminator(const DiscriminatorOutput &d_real, const DiscriminatorOutput &d_fake,
                                     const torch::Tensor &q_real, const torch::Tensor &q_fake,
                                     const torch::Tensor &u_2d, const LossWeights &w) {
    require_map(q_real, u_2d, "q_real");
    require_map(q_fake, u_2d, "q_fake");
    if (d_real.dec_logit_map.sizes() != d_fake.dec_logit_map.sizes() ||
        d_real.enc_logit.sizes() != d_fake.enc_logit.sizes())
        throw InvalidInput("loss_discriminator: real and fake outputs differ in shape");
    require_finite(d_real.enc_logit, "real encoder logit");
    require_finite(d_fake.enc_logit, "fake encoder logit");
    require_finite(d_real.dec_logit_map, "real decoder logits");
    require_finite(d_fake.dec_logit_map, "fake decoder logits");

    DiscriminatorLoss out;
    out.enc = (-clamped_log_sigmoid(d_real.enc_logit) + clamped_log_sigmoid(d_fake.enc_logit)).mean();
    out.dec = (-clamped_log_sigmoid(d_real.dec_logit_map) + clamped_log_sigmoid(d_fake.dec_logit_map)).mean();
    out.q = ((u_2d - q_real).pow(2) + (u_2d - q_fake).pow(2)).mean();
    out.total = out.enc + out.dec + w.lambda_Q * out.q;
    return out;
}

GeneratorLoss loss_generator(const DiscriminatorOutput &d_fake, const torch::Tensor &q_fake,
                             const torch::Tensor &u_2d, const MultiScaleOutput &outputs,
                             const std::vector<torch::Tensor> &gt_scales, const LossWeights &w,
                             PerceptualExtractor &per) {
    if (outputs.images.size() != 3 || gt_scales.size() != 3)
        throw InvalidInput("loss_generator: expected three scales of outputs and targets");
    require_map(q_fake, u_2d, "q_fake");
    GeneratorLoss out;
    out.ar = (u_2d - q_fake).pow(2).mean();
    out.adv = -(clamped_log_sigmoid(d_fake.enc_logit).mean() + clamped_log_sigmoid(d_fake.dec_logit_map).mean());
    out.pix = torch::zeros({}, outputs.full().options());
    for (size_t n = 0; n < 3; ++n) {
        if (outputs.images[n].sizes() != gt_scales[n].sizes())
            throw InvalidInput("loss_generator: output and target differ in shape at scale " + std::to_string(n + 1));
        out.pix = out.pix + charbonnier(gt_scales[n], outputs.images[n], w.epsilon_charbonnier);
    }
    out.per = per.distance(gt_scales[2], outputs.full());
    out.total = w.lambda_ar * out.ar + w.lambda_adv * out.adv + w.lambda_pix * out.pix + w.lambda_per * out.per;
    return out;
}

} // namespace cfmd
