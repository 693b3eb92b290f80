#pragma once

#include <limits>

#include "cfmd/image_io.hpp"

namespace cfmd {

// Returned by psnr() when the images are identical.
inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

double mse(const Image &a, const Image &b);

// 10 log10(max^2 / MSE).
double psnr(const Image &a, const Image &b, double max_val = 1.0);

// Mean SSIM over all full 11x11 windows (Gaussian sigma 1.5, K1 0.01, K2 0.03, range 1)
// of the channel-mean luma.
double ssim(const Image &a, const Image &b);

} // namespace cfmd
