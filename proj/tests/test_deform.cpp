#include <doctest.h>

#include <cmath>

#include "cfmd/error.hpp"
#include "cfmd/generator.hpp"
#include "util.hpp"

using namespace cfmd;
namespace F = torch::nn::functional;

namespace {

// Straight loops in double: bilinear read with zeros outside the image.
double bilinear(const torch::TensorAccessor<double, 4> &in, int64_t b, int64_t c, double y, double x, int64_t H,
                int64_t W) {
    const double y0 = std::floor(y), x0 = std::floor(x);
    double acc = 0.0;
    for (int dy = 0; dy <= 1; ++dy)
        for (int dx = 0; dx <= 1; ++dx) {
            const auto yy = static_cast<int64_t>(y0) + dy, xx = static_cast<int64_t>(x0) + dx;
            if (yy < 0 || yy >= H || xx < 0 || xx >= W)
                continue;
            const double wy = dy ? y - y0 : 1.0 - (y - y0);
            const double wx = dx ? x - x0 : 1.0 - (x - x0);
            acc += wy * wx * in[b][c][yy][xx];
        }
    return acc;
}

torch::Tensor naive_deform(const torch::Tensor &input, const DeformableParams &p) {
    auto in = input.to(torch::kDouble).contiguous();
    auto off = p.offsets.to(torch::kDouble).contiguous();
    auto m = p.masks.to(torch::kDouble).contiguous();
    auto w = p.weight.to(torch::kDouble).contiguous();
    const int64_t B = in.size(0), C = in.size(1), H = in.size(2), W = in.size(3), O = w.size(0);
    const int ks = p.kernel.size, r = ks / 2;
    auto out = torch::zeros({B, O, H, W}, torch::kDouble);
    auto ia = in.accessor<double, 4>();
    auto oa = off.accessor<double, 4>();
    auto ma = m.accessor<double, 4>();
    auto wa = w.accessor<double, 4>();
    auto outa = out.accessor<double, 4>();
    for (int64_t b = 0; b < B; ++b)
        for (int64_t i = 0; i < H; ++i)
            for (int64_t j = 0; j < W; ++j)
                for (int ki = 0; ki < ks; ++ki)
                    for (int kj = 0; kj < ks; ++kj) {
                        const int k = ki * ks + kj;
                        const double y = i + (ki - r) * p.kernel.dilation + oa[b][2 * k][i][j];
                        const double x = j + (kj - r) * p.kernel.dilation + oa[b][2 * k + 1][i][j];
                        for (int64_t c = 0; c < C; ++c) {
                            const double v = bilinear(ia, b, c, y, x, H, W) * ma[b][k][i][j];
                            for (int64_t o = 0; o < O; ++o)
                                outa[b][o][i][j] += wa[o][c][ki][kj] * v;
                        }
                    }
    return out;
}

} // namespace

TEST_SUITE("deform") {

TEST_CASE("kernel grid is row-major and centred") {
    const auto g = kernel_grid({3, 1});
    REQUIRE(g.size() == 9);
    CHECK((g.front() == std::pair{-1, -1}));
    CHECK((g[1] == std::pair{-1, 0}));
    CHECK((g[4] == std::pair{0, 0}));
    CHECK((g.back() == std::pair{1, 1}));
    CHECK(kernel_grid({3, 2}).back() == std::pair{2, 2});
    CHECK_THROWS_AS(kernel_grid({4, 1}), InvalidInput);
}

TEST_CASE("fractional offsets and masks match the naive gather") {
    torch::manual_seed(11);
    for (int trial = 0; trial < 4; ++trial) {
        const int dil = 1 + trial % 2;
        DeformableParams p;
        p.kernel = {3, dil};
        auto x = torch::randn({2, 3, 7, 6});
        p.offsets = torch::randn({2, 18, 7, 6}) * 2.5; // many samples land outside
        p.masks = torch::rand({2, 9, 7, 6});
        p.weight = torch::randn({4, 3, 3, 3});
        const auto got = modulated_deform_conv(x, p);
        CHECK(testutil::max_abs(got, naive_deform(x, p)) < 1e-4);
    }
}

TEST_CASE("integer offsets shift the sampling point") {
    DeformableParams p;
    auto x = torch::randn({1, 1, 5, 5});
    p.offsets = torch::zeros({1, 18, 5, 5});
    p.offsets.select(1, 8).fill_(1.0); // centre tap row shift
    p.masks = torch::ones({1, 9, 5, 5});
    p.weight = torch::zeros({1, 1, 3, 3});
    p.weight[0][0][1][1] = 1.0;
    const auto y = modulated_deform_conv(x, p);
    using torch::indexing::Slice;
    CHECK(testutil::max_abs(y.index({0, 0, Slice(0, 4)}), x.index({0, 0, Slice(1, 5)})) < 1e-6);
    CHECK(y.index({0, 0, 4}).abs().max().item<float>() == 0.f);
}

TEST_CASE("zero offsets and unit masks reduce to dense convolution") {
    torch::manual_seed(3);
    DeformableParams p;
    auto x = torch::randn({3, 4, 8, 8});
    p.offsets = torch::zeros({3, 18, 8, 8});
    p.masks = torch::ones({3, 9, 8, 8});
    p.weight = torch::randn({5, 4, 3, 3});
    const auto dense = F::conv2d(x, p.weight, F::Conv2dFuncOptions().padding(1));
    CHECK(testutil::max_abs(modulated_deform_conv(x, p), dense) < 1e-5);
}

TEST_CASE("fresh CADC is half of the dense convolution") {
    torch::manual_seed(4);
    CADC cadc(4, 6);
    auto x = torch::randn({2, 4, 8, 8});
    const auto p = cadc->params(x);
    CHECK(p.offsets.abs().max().item<float>() == 0.f);
    CHECK(testutil::max_abs(p.masks, torch::full_like(p.masks, 0.5)) == 0.0);
    const auto dense = F::conv2d(x, cadc->weight, F::Conv2dFuncOptions().padding(1));
    CHECK(testutil::max_abs(cadc->forward(x), 0.5 * dense) < 1e-5);
}

TEST_CASE("shape and value checks") {
    DeformableParams p;
    p.offsets = torch::zeros({1, 18, 4, 4});
    p.masks = torch::ones({1, 9, 4, 4});
    p.weight = torch::zeros({2, 3, 3, 3});
    CHECK_THROWS_AS(modulated_deform_conv(torch::zeros({1, 2, 4, 4}), p), InvalidInput);
    CHECK_THROWS_AS(modulated_deform_conv(torch::zeros({1, 3, 4, 5}), p), InvalidInput);
    auto x = torch::zeros({1, 3, 4, 4});
    x[0][0][0][0] = std::nanf("");
    CHECK_THROWS_AS(modulated_deform_conv(x, p), NumericError);
}

TEST_CASE("gradients reach offsets and masks") {
    torch::manual_seed(8);
    CADC cadc(3, 3);
    {
        torch::NoGradGuard g;
        cadc->offset_branch->weight.normal_(0, 0.1);
        cadc->mask_branch->weight.normal_(0, 0.1);
    }
    auto x = torch::randn({1, 3, 6, 6});
    cadc->forward(x).pow(2).sum().backward();
    CHECK(cadc->offset_branch->weight.grad().abs().sum().item<float>() > 0.f);
    CHECK(cadc->mask_branch->weight.grad().abs().sum().item<float>() > 0.f);
    CHECK(cadc->weight.grad().abs().sum().item<float>() > 0.f);
}

}
