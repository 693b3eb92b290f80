#include <doctest.h>

#include "cfmd/augment.hpp"
#include "cfmd/error.hpp"
#include "util.hpp"

using namespace cfmd;

namespace {
BlurSample sample_of(int64_t h, int64_t w) {
    BlurSample s;
    s.blur = testutil::rand_image(h, w, 1);
    for (int i = 0; i < 5; ++i) {
        s.gt_frames.frames.push_back(testutil::rand_image(h, w, 10 + i));
        s.gt_frames.control_factors.push_back(i / 5.0);
        s.gt_frames.permutation.push_back(i + 1);
    }
    s.n_frames = 5;
    return s;
}
} // namespace

TEST_SUITE("augment") {

TEST_CASE("unit scale crop is a plain slice applied jointly") {
    const auto s = sample_of(20, 24);
    const auto a = augment_with(s, {1.0, 3, 5}, 8);
    using torch::indexing::Slice;
    CHECK(torch::equal(a.blur, s.blur.index({Slice(), Slice(3, 11), Slice(5, 13)})));
    for (int i = 0; i < 5; ++i)
        CHECK(torch::equal(a.gt_frames.frames[i], s.gt_frames.frames[i].index({Slice(), Slice(3, 11), Slice(5, 13)})));
    CHECK(a.gt_frames.control_factors == s.gt_frames.control_factors);
}

TEST_CASE("sampled windows stay inside the rescaled image") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 200; ++i) {
        const auto w = sample_crop_window(40, 50, {1.0, 1.5}, 32, rng);
        CHECK(w.scale >= 1.0);
        CHECK(w.scale <= 1.5);
        const auto h = static_cast<int64_t>(std::lround(40 * w.scale));
        const auto ww = static_cast<int64_t>(std::lround(50 * w.scale));
        CHECK(w.top >= 0);
        CHECK(w.left >= 0);
        CHECK(w.top + 32 <= h);
        CHECK(w.left + 32 <= ww);
    }
    const auto s = sample_of(40, 50);
    std::mt19937_64 r2(9);
    const auto a = augment(s, {1.0, 1.5}, 32, r2);
    CHECK(a.blur.sizes() == torch::IntArrayRef({3, 32, 32}));
    CHECK(a.gt_frames.frames[4].sizes() == torch::IntArrayRef({3, 32, 32}));
}

TEST_CASE("too small even after upscaling") {
    std::mt19937_64 rng(0);
    CHECK_THROWS_AS(sample_crop_window(10, 10, {1.0, 1.5}, 32, rng), InvalidInput);
    // fits only near the top of the scale range
    const auto w = sample_crop_window(24, 24, {1.0, 1.5}, 32, rng);
    CHECK(w.scale * 24 >= 32 - 0.5);
}

}
