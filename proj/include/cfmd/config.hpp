#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>

#include "cfmd/discriminator.hpp"
#include "cfmd/error.hpp"
#include "cfmd/generator.hpp"
#include "cfmd/losses.hpp"

namespace cfmd {

struct TrainConfig {
    double lr = 1e-4;
    std::pair<double, double> betas{0.9, 0.999};
    double lr_decay_per_epoch = 0.99;
    int batch_size = 8;
    int epochs = 200;
    int64_t crop = 256;
    std::pair<double, double> scale_range{1.0, 1.5};
    uint64_t seed = 0;

    // Run control: stop after this many optimizer steps in total (-1: run all epochs),
    // and write a periodic checkpoint every N steps (0: only the final one).
    int64_t max_steps = -1;
    int64_t checkpoint_every = 0;

    void validate() const;
    // lr0 * decay^epoch
    double lr_at_epoch(int64_t epoch) const;
    friend bool operator==(const TrainConfig &, const TrainConfig &) = default;
};

struct ExperimentConfig {
    TrainConfig train;
    LossWeights weights;
    GeneratorConfig generator;
    DiscriminatorConfig discriminator;

    void validate() const;
    friend bool operator==(const ExperimentConfig &, const ExperimentConfig &) = default;
};

class ConfigError : public InvalidInput {
public:
    ConfigError(std::string key, const std::string &message)
        : InvalidInput(message), key_(std::move(key)) {}
    const std::string &key() const { return key_; }

private:
    std::string key_;
};

// Flat `key = value` lines; `#` starts a comment. Pairs are written `a,b`.
// Generator keys are the GeneratorConfig field names, discriminator keys take a
// `disc_` prefix.
ExperimentConfig parse_experiment_config(const std::string &text, ExperimentConfig base = {});
ExperimentConfig load_experiment_config(const std::filesystem::path &path);
std::string to_config_text(const ExperimentConfig &cfg);

// CFMD_SEED, when set, replaces train.seed.
void apply_seed_override(ExperimentConfig &cfg);

} // namespace cfmd
