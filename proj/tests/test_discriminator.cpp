#include <doctest.h>

#include "cfmd/discriminator.hpp"
#include "cfmd/error.hpp"
#include "util.hpp"

using namespace cfmd;

TEST_SUITE("discriminator") {

TEST_CASE("output contracts") {
    torch::manual_seed(1);
    DiscriminatorConfig c;
    c.base_channels = 8;
    Discriminator d(c);
    CHECK(c.total_stride() == 16);
    for (auto [h, w] : {std::pair<int64_t, int64_t>{32, 32}, {64, 48}}) {
        auto b = torch::rand({2, 3, h, w}), s = torch::rand({2, 3, h, w});
        const auto o = d->forward(b, s);
        CHECK(o.enc_logit.sizes() == torch::IntArrayRef({2}));
        CHECK(o.dec_logit_map.sizes() == torch::IntArrayRef({2, h, w}));
        CHECK(o.u_hat_2d.sizes() == torch::IntArrayRef({2, h, w}));
        CHECK(torch::isfinite(o.dec_logit_map).all().item<bool>());
    }
}

TEST_CASE("conditioning on the blur matters") {
    torch::manual_seed(2);
    DiscriminatorConfig c;
    c.base_channels = 8;
    Discriminator d(c);
    auto s = torch::rand({1, 3, 32, 32});
    const auto a = d->forward(torch::rand({1, 3, 32, 32}), s);
    const auto b = d->forward(torch::rand({1, 3, 32, 32}), s);
    CHECK(testutil::max_abs(a.dec_logit_map, b.dec_logit_map) > 0.0);
}

TEST_CASE("heads share the trunk") {
    torch::manual_seed(3);
    DiscriminatorConfig c;
    c.base_channels = 8;
    Discriminator d(c);
    auto o = d->forward(torch::rand({1, 3, 32, 32}), torch::rand({1, 3, 32, 32}));
    o.u_hat_2d.sum().backward();
    CHECK(d->q_head->weight.grad().abs().sum().item<float>() > 0.f);
    CHECK_FALSE(d->dec_head->weight.grad().defined());
}

TEST_CASE("perturbing the trunk moves both per-pixel heads") {
    torch::manual_seed(4);
    DiscriminatorConfig c;
    c.base_channels = 8;
    Discriminator d(c);
    auto b = torch::rand({1, 3, 32, 32}), s = torch::rand({1, 3, 32, 32});
    torch::NoGradGuard ng;
    const auto before = d->forward(b, s);
    for (auto &item : d->named_parameters())
        if (item.key().rfind("up", 0) == 0)
            item.value().add_(0.05 * torch::randn_like(item.value()));
    const auto after = d->forward(b, s);
    CHECK(testutil::max_abs(before.dec_logit_map, after.dec_logit_map) > 0.0);
    CHECK(testutil::max_abs(before.u_hat_2d, after.u_hat_2d) > 0.0);
    CHECK(testutil::max_abs(before.enc_logit, after.enc_logit) == 0.0);
}

TEST_CASE("finite on extreme inputs") {
    DiscriminatorConfig c;
    c.base_channels = 8;
    Discriminator d(c);
    torch::NoGradGuard ng;
    for (float v : {0.f, 1.f}) {
        const auto o = d->forward(torch::full({1, 3, 32, 32}, v), torch::full({1, 3, 32, 32}, 1.f - v));
        CHECK(torch::isfinite(o.enc_logit).all().item<bool>());
        CHECK(torch::isfinite(o.u_hat_2d).all().item<bool>());
    }
}

TEST_CASE("invalid inputs") {
    DiscriminatorConfig c;
    c.base_channels = 8;
    Discriminator d(c);
    CHECK_THROWS_AS(d->forward(torch::rand({1, 3, 24, 32}), torch::rand({1, 3, 24, 32})), InvalidInput);
    CHECK_THROWS_AS(d->forward(torch::rand({1, 3, 32, 32}), torch::rand({1, 3, 32, 16})), InvalidInput);
    c.depth = 0;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
}

}
