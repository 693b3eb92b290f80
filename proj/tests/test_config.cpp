#include <doctest.h>

#include <cstdlib>

#include "cfmd/config.hpp"
#include "util.hpp"

using namespace cfmd;

TEST_SUITE("config") {

TEST_CASE("defaults") {
    ExperimentConfig c;
    CHECK(c.train.lr == 1e-4);
    CHECK(c.train.betas == std::pair{0.9, 0.999});
    CHECK(c.train.batch_size == 8);
    CHECK(c.train.epochs == 200);
    CHECK(c.train.crop == 256);
    CHECK(c.train.lr_at_epoch(0) == 1e-4);
    CHECK(c.train.lr_at_epoch(2) == doctest::Approx(1e-4 * 0.99 * 0.99));
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("parse flat key values") {
    const auto c = parse_experiment_config(R"(
# smoke
lr = 2e-4
betas = 0.5, 0.9
batch_size=4   # trailing comment
crop = 128
scale_range = 1.0,1.25
base_channels = 8
n_blocks_per_stage = 2
disc_base_channels = 16
lambda_adv = 0.2
seed = 17
)");
    CHECK(c.train.lr == 2e-4);
    CHECK(c.train.betas == std::pair{0.5, 0.9});
    CHECK(c.train.batch_size == 4);
    CHECK(c.train.scale_range == std::pair{1.0, 1.25});
    CHECK(c.generator.base_channels == 8);
    CHECK(c.generator.n_blocks_per_stage == 2);
    CHECK(c.discriminator.base_channels == 16);
    CHECK(c.weights.lambda_adv == 0.2);
    CHECK(c.train.seed == 17);
    CHECK((parse_experiment_config(to_config_text(c)) == c));
}

TEST_CASE("rejections name the key") {
    auto key_of = [](const std::string &text) {
        try {
            parse_experiment_config(text);
        } catch (const ConfigError &e) {
            return e.key();
        }
        return std::string("<none>");
    };
    CHECK(key_of("learning_rate = 1") == "learning_rate");
    CHECK(key_of("lr = fast") == "lr");
    CHECK(key_of("crop = 100") == "crop");
    CHECK(key_of("batch_size = 0") == "batch_size");
    CHECK(key_of("betas = 0.9") == "betas");
    CHECK(key_of("lr") == "lr");
}

TEST_CASE("seed override from the environment") {
    ExperimentConfig c;
    ::setenv("CFMD_SEED", "99", 1);
    apply_seed_override(c);
    CHECK(c.train.seed == 99);
    ::setenv("CFMD_SEED", "abc", 1);
    CHECK_THROWS_AS(apply_seed_override(c), ConfigError);
    ::unsetenv("CFMD_SEED");
    apply_seed_override(c);
    CHECK(c.train.seed == 99);
}

}
