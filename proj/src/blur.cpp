#include "cfmd/blur.hpp"

#include "cfmd/error.hpp"

namespace cfmd {

torch::Tensor CameraResponse::apply(const torch::Tensor &v) const {
    switch (kind) {
    case Kind::Identity:
        return v;
    case Kind::Gamma:
        if (!(gamma > 0.0))
            throw InvalidInput("camera response gamma must be positive");
        return v.clamp_min(0.0).pow(1.0 / gamma);
    }
    return v;
}

Image synthesize_blur(std::span<const Image> frames, const CameraResponse &response) {
    if (frames.empty())
        throw InvalidInput("synthesize_blur: no frames");
    check_image(frames[0], "synthesize_blur");
    const auto sizes = frames[0].sizes();
    // Accumulate in double so k identical frames reproduce the frame bit-exactly.
    torch::Tensor sum = torch::zeros(sizes, torch::kFloat64);
    for (const auto &f : frames) {
        check_image(f, "synthesize_blur");
        if (f.sizes() != sizes)
            throw InvalidInput("synthesize_blur: frame shape mismatch");
        sum.add_(f.to(torch::kFloat64));
    }
    auto mean = sum / static_cast<double>(frames.size());
    return response.apply(mean).clamp(0.0, 1.0).to(torch::kFloat32);
}

Image synthesize_blur(const FrameSequence &seq, const CameraResponse &response) {
    return synthesize_blur(std::span<const Image>(seq.frames), response);
}

} // namespace cfmd
