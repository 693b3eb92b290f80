#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

#include "cfmd/checkpoint.hpp"
#include "cfmd/config.hpp"
#include "cfmd/dataset.hpp"
#include "cfmd/discriminator.hpp"
#include "cfmd/generator.hpp"
#include "cfmd/losses.hpp"

namespace cfmd {

// One training batch: blur/sharp crops [B,3,H,W] and the control factor of each sharp frame.
struct Batch {
    torch::Tensor blur;
    torch::Tensor sharp;
    torch::Tensor u; // [B]
};

struct StepMetrics {
    int64_t epoch = 0;
    int64_t step = 0; // 1-based count of completed steps
    double L_Denc = 0, L_Ddec = 0, L_Q = 0, L_D = 0;
    double L_ar = 0, L_adv = 0, L_pix = 0, L_per = 0, L_G = 0;
    double lr = 0;

    nlohmann::json to_json() const;
    friend bool operator==(const StepMetrics &, const StepMetrics &) = default;
};

// Deterministic per-step random stream derived from (seed, step, slot).
std::mt19937_64 step_rng(uint64_t seed, int64_t step, uint64_t slot);

class Trainer {
public:
    explicit Trainer(ExperimentConfig cfg, std::shared_ptr<PerceptualExtractor> perceptual = nullptr);

    // One discriminator update on (real, detached fake) followed by one generator update.
    StepMetrics train_step(const Batch &batch);

    // The two halves of train_step. Each steps only its own optimizer.
    DiscriminatorLoss update_discriminator(const Batch &batch, const MultiScaleOutput &fake);
    GeneratorLoss update_generator(const Batch &batch, const MultiScaleOutput &fake);

    // Sets lr on both optimizers to lr0 * decay^epoch.
    void set_epoch(int64_t epoch);
    double current_lr() const;

    int64_t step() const { return step_; }
    int64_t epoch() const { return epoch_; }

    Checkpoint checkpoint() const;
    // Restores parameters, optimizer moments and counters; throws InvalidInput when the
    // checkpoint does not fit this configuration.
    void restore(const Checkpoint &ckpt);

    const ExperimentConfig &config() const { return cfg_; }

    Generator generator{nullptr};
    Discriminator discriminator{nullptr};

private:
    ExperimentConfig cfg_;
    std::shared_ptr<PerceptualExtractor> perceptual_;
    std::unique_ptr<torch::optim::Adam> opt_g_, opt_d_;
    int64_t step_ = 0;
    int64_t epoch_ = 0;
};

// Builds the batch for global step `step` (0-based): records chosen by the epoch
// permutation, u drawn uniformly from each record's factors, joint scale/crop.
class BatchSampler {
public:
    BatchSampler(const DatasetManifest &manifest, const TrainConfig &cfg);

    int64_t steps_per_epoch() const;
    Batch batch_for_step(int64_t step);

private:
    const BlurSample &sample(size_t index);

    const DatasetManifest &manifest_;
    TrainConfig cfg_;
    std::vector<std::optional<BlurSample>> cache_;
};

struct TrainResult {
    std::filesystem::path final_checkpoint;
    std::vector<StepMetrics> metrics; // steps run by this invocation
};

// Writes `metrics.jsonl` (per step), `epochs.jsonl` (per-epoch means), periodic
// `ckpt_step<N>.cfmd` and `final.cfmd` under `out_dir`.
TrainResult train_loop(const DatasetManifest &manifest, const ExperimentConfig &cfg,
                       const std::filesystem::path &out_dir,
                       const std::optional<std::filesystem::path> &resume = std::nullopt);

} // namespace cfmd
