#include <doctest.h>

#include "cfmd/error.hpp"
#include "cfmd/generator.hpp"
#include "util.hpp"

using namespace cfmd;

namespace {
GeneratorConfig small() {
    GeneratorConfig c;
    c.base_channels = 8;
    c.n_blocks_per_stage = 1;
    return c;
}
} // namespace

TEST_SUITE("generator") {

TEST_CASE("config") {
    GeneratorConfig c;
    CHECK(c.stage_channels(1) == 32);
    CHECK(c.stage_channels(3) == 128);
    c.scales = 2;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    c = {};
    c.base_channels = 0;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    CHECK(stage_extent(64, 1) == 64);
    CHECK(stage_extent(64, 3) == 16);
}

TEST_CASE("mapping network yields a spatially constant field") {
    torch::manual_seed(1);
    MappingNetwork m;
    const auto f = m->forward(torch::tensor({0.0, 0.5}, torch::kFloat32), 6, 5);
    CHECK(f.u_2d.sizes() == torch::IntArrayRef({2, 1, 6, 5}));
    CHECK(f.u_f.sizes() == torch::IntArrayRef({2, 64, 6, 5}));
    CHECK(testutil::max_abs(f.u_f, f.u_f.select(2, 0).select(2, 0).view({2, 64, 1, 1}).expand({2, 64, 6, 5})) == 0.0);
    CHECK(f.u_2d[1].min().item<float>() == 0.5f);
    // different u, different field
    CHECK(testutil::max_abs(f.u_f[0], f.u_f[1]) > 0.0);
    // scalar overload agrees
    const auto g = m->forward(0.5, 6, 5);
    CHECK(testutil::max_abs(g.u_f[0], f.u_f[1]) < 1e-6);
}

TEST_CASE("stage control fields stay spatially constant") {
    torch::manual_seed(11);
    MappingNetwork m;
    const auto f = m->forward(torch::tensor({0.2, 0.8}), 16, 16);
    for (int stage = 1; stage <= 3; ++stage) {
        ControlResizer r(stage, 64, 8 << (stage - 1));
        const auto c = r->forward(f.u_f);
        const auto e = stage_extent(16, stage);
        CHECK(c.sizes() == torch::IntArrayRef({2, 8 << (stage - 1), e, e}));
        const auto corner = c.narrow(2, 0, 1).narrow(3, 0, 1);
        CHECK(testutil::max_abs(c, corner.expand_as(c)) < 1e-6);
    }
}

TEST_CASE("forward is bit-identical across calls") {
    torch::manual_seed(12);
    Generator g(small());
    auto b = torch::rand({1, 3, 16, 16});
    torch::NoGradGuard ng;
    const auto a = g->forward(b, 0.4), c = g->forward(b, 0.4);
    for (size_t n = 0; n < 3; ++n)
        CHECK(torch::equal(a.images[n], c.images[n]));
}

TEST_CASE("masks stay in [0,1] under arbitrary branch weights") {
    torch::manual_seed(13);
    CADC cadc(4, 4);
    {
        torch::NoGradGuard ng;
        cadc->mask_branch->weight.normal_(0, 10);
        cadc->mask_branch->bias.normal_(0, 10);
    }
    const auto p = cadc->params(torch::randn({2, 4, 8, 8}) * 5);
    CHECK(p.masks.min().item<float>() >= 0.f);
    CHECK(p.masks.max().item<float>() <= 1.f);
}

TEST_CASE("multi-scale output shapes") {
    torch::manual_seed(2);
    Generator g(small());
    for (int64_t s : {16, 32}) {
        const auto out = g->forward(torch::rand({2, 3, s, s + 8}), torch::tensor({0.1, 0.9}));
        REQUIRE(out.images.size() == 3);
        CHECK(out.images[0].sizes() == torch::IntArrayRef({2, 3, s / 4, (s + 8) / 4}));
        CHECK(out.images[1].sizes() == torch::IntArrayRef({2, 3, s / 2, (s + 8) / 2}));
        CHECK(out.full().sizes() == torch::IntArrayRef({2, 3, s, s + 8}));
        for (const auto &im : out.images)
            CHECK(torch::isfinite(im).all().item<bool>());
    }
    const auto pyr = image_pyramid(torch::rand({1, 3, 16, 16}));
    CHECK(pyr[0].size(2) == 4);
    CHECK(pyr[2].size(2) == 16);
}

TEST_CASE("control factor changes the restoration") {
    torch::manual_seed(3);
    Generator g(small());
    const auto b = torch::rand({3, 16, 16});
    const auto r0 = g->restore(b, 0.0), r1 = g->restore(b, 0.9);
    CHECK(r0.sizes() == torch::IntArrayRef({3, 16, 16}));
    CHECK(r0.min().item<float>() >= 0.f);
    CHECK(r0.max().item<float>() <= 1.f);
    CHECK(testutil::max_abs(r0, r1) > 0.0);
    CHECK(torch::equal(g->restore(b, 0.3), g->restore(b, 0.3)));
}

TEST_CASE("input validation") {
    Generator g(small());
    CHECK_THROWS_AS(g->forward(torch::rand({1, 3, 18, 16}), 0.5), InvalidInput);
    CHECK_THROWS_AS(g->forward(torch::rand({1, 3, 16, 16}), 1.5), InvalidInput);
    CHECK_THROWS_AS(g->forward(torch::rand({1, 3, 16, 16}), -0.01), InvalidInput);
    CHECK_THROWS_AS(g->forward(torch::rand({2, 3, 16, 16}), torch::tensor({0.5})), InvalidInput);
    CHECK_THROWS_AS(g->forward(torch::rand({1, 4, 16, 16}), 0.5), InvalidInput);
    CHECK_THROWS_AS(check_control(torch::tensor({std::nan("")})), InvalidInput);
}

TEST_CASE("block is residual") {
    torch::manual_seed(5);
    ContAdaBlock block(8);
    auto x = torch::randn({1, 8, 8, 8});
    auto u = torch::randn({1, 8, 8, 8});
    {
        torch::NoGradGuard g;
        block->cadc->weight.zero_();
    }
    CHECK(testutil::max_abs(block->forward(x, u), x) == 0.0);
}

TEST_CASE("channel gates lie in (0,1) and depend only on pooled features") {
    torch::manual_seed(6);
    CACA caca(16);
    auto f = torch::randn({2, 16, 5, 5});
    const auto gates = caca->gates(f);
    CHECK(gates.min().item<float>() > 0.f);
    CHECK(gates.max().item<float>() < 1.f);
    CHECK(caca->squeeze->weight.size(0) == 4);
    auto d = torch::randn({2, 16, 5, 5});
    CHECK(testutil::max_abs(caca->forward(f, d), gates.view({2, 16, 1, 1}) * d) < 1e-6);
    CHECK_THROWS_AS(caca->forward(f, torch::randn({2, 8, 5, 5})), InvalidInput);
}

}
