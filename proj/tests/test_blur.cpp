#include <doctest.h>

#include "cfmd/blur.hpp"
#include "cfmd/error.hpp"
#include "util.hpp"

using namespace cfmd;
using testutil::max_abs;
using testutil::rand_image;

TEST_SUITE("blur") {

TEST_CASE("identical frames reproduce the frame exactly") {
    for (int k : {1, 5, 7, 13}) {
        const auto f = rand_image(9, 11, static_cast<uint64_t>(k));
        std::vector<Image> frames(k, f);
        CHECK(torch::equal(synthesize_blur(frames), f));
    }
}

TEST_CASE("identity response conserves the mean") {
    std::vector<Image> frames;
    for (int i = 0; i < 7; ++i)
        frames.push_back(rand_image(16, 12, 100 + i));
    const auto b = synthesize_blur(frames);
    auto mean = torch::stack(frames).to(torch::kDouble).mean(0);
    CHECK(max_abs(b, mean) < 1e-6);
    CHECK(std::abs(b.to(torch::kDouble).mean().item<double>() - mean.mean().item<double>()) < 1e-6);
}

TEST_CASE("gamma response") {
    std::vector<Image> frames{make_image(2, 2, 0.25f), make_image(2, 2, 0.75f)};
    const auto b = synthesize_blur(frames, CameraResponse::gamma_curve());
    CHECK(b[0][0][0].item<float>() == doctest::Approx(std::pow(0.5, 1.0 / 2.2)).epsilon(1e-6));
    const auto zero = synthesize_blur(std::vector<Image>{make_image(2, 2, 0.f)}, CameraResponse::gamma_curve());
    CHECK(zero.abs().max().item<float>() == 0.f);
}

TEST_CASE("range and shape") {
    std::vector<Image> frames;
    for (int i = 0; i < 5; ++i)
        frames.push_back(rand_image(8, 8, 7 + i));
    const auto b = synthesize_blur(frames, CameraResponse::gamma_curve(1.7));
    CHECK(b.sizes() == torch::IntArrayRef({3, 8, 8}));
    CHECK(b.min().item<float>() >= 0.f);
    CHECK(b.max().item<float>() <= 1.f);
}

TEST_CASE("invalid input") {
    CHECK_THROWS_AS(synthesize_blur(std::vector<Image>{}), InvalidInput);
    std::vector<Image> mixed{make_image(4, 4), make_image(4, 5)};
    CHECK_THROWS_AS(synthesize_blur(mixed), InvalidInput);
}

}
