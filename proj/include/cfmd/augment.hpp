#pragma once

#include <random>
#include <utility>

#include "cfmd/dataset.hpp"

namespace cfmd {

struct CropWindow {
    double scale = 1.0;
    int64_t top = 0;
    int64_t left = 0;
};

// Bilinear rescale by `scale` (no-op at 1.0), then crop crop x crop at (top, left).
// The same window is applied to the blur and every ground-truth frame.
BlurSample augment_with(const BlurSample &sample, const CropWindow &window, int64_t crop);

// Draws scale ~ U[scale_range] and a uniform crop offset.
CropWindow sample_crop_window(int64_t height, int64_t width, std::pair<double, double> scale_range, int64_t crop,
                              std::mt19937_64 &rng);

BlurSample augment(const BlurSample &sample, std::pair<double, double> scale_range, int64_t crop,
                   std::mt19937_64 &rng);

} // namespace cfmd
