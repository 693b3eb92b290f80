#pragma once

#include <span>

#include "cfmd/fmr.hpp"

namespace cfmd {

// Maps averaged irradiance to pixel intensity.
struct CameraResponse {
    enum class Kind { Identity, Gamma };
    Kind kind = Kind::Identity;
    double gamma = 2.2; // applied as v^(1/gamma)

    static CameraResponse identity() { return {}; }
    static CameraResponse gamma_curve(double g = 2.2) { return {Kind::Gamma, g}; }

    torch::Tensor apply(const torch::Tensor &v) const;
};

// g(mean(frames)) clamped to [0, 1].
Image synthesize_blur(std::span<const Image> frames, const CameraResponse &response = {});
Image synthesize_blur(const FrameSequence &seq, const CameraResponse &response = {});

} // namespace cfmd
