#include "cfmd/augment.hpp"

#include <cmath>

#include "cfmd/error.hpp"

namespace cfmd {

namespace F = torch::nn::functional;

namespace {

int64_t scaled_extent(int64_t extent, double scale) {
    return static_cast<int64_t>(std::lround(static_cast<double>(extent) * scale));
}

Image rescale_and_crop(const Image &img, const CropWindow &win, int64_t crop) {
    Image scaled = img;
    if (win.scale != 1.0) {
        const auto h = scaled_extent(img.size(1), win.scale);
        const auto w = scaled_extent(img.size(2), win.scale);
        scaled = F::interpolate(img.unsqueeze(0), F::InterpolateFuncOptions()
                                                     .size(std::vector<int64_t>{h, w})
                                                     .mode(torch::kBilinear)
                                                     .align_corners(false))
                     .squeeze(0);
    }
    if (win.top < 0 || win.left < 0 || win.top + crop > scaled.size(1) || win.left + crop > scaled.size(2))
        throw InvalidInput("augment: crop window exceeds the scaled image");
    return scaled.slice(1, win.top, win.top + crop).slice(2, win.left, win.left + crop).contiguous();
}

} // namespace

BlurSample augment_with(const BlurSample &sample, const CropWindow &window, int64_t crop) {
    check_image(sample.blur, "augment");
    BlurSample out;
    out.clip_id = sample.clip_id;
    out.n_frames = sample.n_frames;
    out.gt_frames.control_factors = sample.gt_frames.control_factors;
    out.gt_frames.permutation = sample.gt_frames.permutation;
    out.blur = rescale_and_crop(sample.blur, window, crop);
    for (const auto &f : sample.gt_frames.frames) {
        if (f.sizes() != sample.blur.sizes())
            throw InvalidInput("augment: ground-truth frame size differs from blur");
        out.gt_frames.frames.push_back(rescale_and_crop(f, window, crop));
    }
    return out;
}

CropWindow sample_crop_window(int64_t height, int64_t width, std::pair<double, double> scale_range, int64_t crop,
                              std::mt19937_64 &rng) {
    const auto [lo, hi] = scale_range;
    if (!(lo > 0.0) || hi < lo)
        throw InvalidInput("augment: invalid scale range");
    if (scaled_extent(height, hi) < crop || scaled_extent(width, hi) < crop)
        throw InvalidInput("augment: image " + std::to_string(height) + "x" + std::to_string(width) +
                           " smaller than crop " + std::to_string(crop) + " even at maximum scale");
    CropWindow win;
    // Lowest scale at which the crop still fits.
    const double fit = static_cast<double>(crop) / static_cast<double>(std::min(height, width));
    const double min_scale = std::max(lo, fit);
    win.scale = hi > min_scale ? std::uniform_real_distribution<double>(min_scale, hi)(rng) : min_scale;
    const auto h = win.scale == 1.0 ? height : scaled_extent(height, win.scale);
    const auto w = win.scale == 1.0 ? width : scaled_extent(width, win.scale);
    win.top = std::uniform_int_distribution<int64_t>(0, std::max<int64_t>(0, h - crop))(rng);
    win.left = std::uniform_int_distribution<int64_t>(0, std::max<int64_t>(0, w - crop))(rng);
    return win;
}

BlurSample augment(const BlurSample &sample, std::pair<double, double> scale_range, int64_t crop,
                   std::mt19937_64 &rng) {
    check_image(sample.blur, "augment");
    const auto win = sample_crop_window(sample.blur.size(1), sample.blur.size(2), scale_range, crop, rng);
    return augment_with(sample, win, crop);
}

} // namespace cfmd
