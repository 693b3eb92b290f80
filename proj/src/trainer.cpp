#include "cfmd/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "cfmd/augment.hpp"
#include "cfmd/error.hpp"

namespace cfmd {

namespace fs = std::filesystem;
using nlohmann::json;

json StepMetrics::to_json() const {
    return {{"epoch", epoch}, {"step", step},   {"L_Denc", L_Denc}, {"L_Ddec", L_Ddec}, {"L_Q", L_Q},
            {"L_ar", L_ar},   {"L_adv", L_adv}, {"L_pix", L_pix},   {"L_per", L_per},   {"lr", lr}};
}

std::mt19937_64 step_rng(uint64_t seed, int64_t step, uint64_t slot) {
    std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                      static_cast<uint32_t>(step), static_cast<uint32_t>(static_cast<uint64_t>(step) >> 32),
                      static_cast<uint32_t>(slot), static_cast<uint32_t>(slot >> 32)};
    return std::mt19937_64(seq);
}

namespace {

constexpr uint64_t kEpochSlot = 0xE90C0000ull;

void set_requires_grad(torch::nn::Module &m, bool on) {
    for (auto &p : m.parameters())
        p.set_requires_grad(on);
}

std::unique_ptr<torch::optim::Adam> make_adam(torch::nn::Module &m, const TrainConfig &cfg) {
    return std::make_unique<torch::optim::Adam>(
        m.parameters(), torch::optim::AdamOptions(cfg.lr).betas({cfg.betas.first, cfg.betas.second}));
}

double scalar(const torch::Tensor &t, const char *name, int64_t step) {
    const double v = t.item<double>();
    if (!std::isfinite(v))
        throw NumericError(std::string("non-finite ") + name + " at step " + std::to_string(step + 1));
    return v;
}

torch::Tensor control_map(const Batch &batch) {
    const auto B = batch.blur.size(0), H = batch.blur.size(2), W = batch.blur.size(3);
    return batch.u.to(torch::kFloat32).view({B, 1, 1}).expand({B, H, W});
}

void save_adam(Checkpoint &ckpt, const std::string &tag, torch::optim::Adam &opt, torch::nn::Module &m) {
    json steps = json::object();
    auto &state = opt.state();
    for (const auto &p : m.named_parameters()) {
        auto it = state.find(p.value().unsafeGetTensorImpl());
        if (it == state.end())
            continue;
        const auto &s = static_cast<const torch::optim::AdamParamState &>(*it->second);
        steps[p.key()] = s.step();
        ckpt.arrays.emplace_back(tag + "/" + p.key() + "/exp_avg", s.exp_avg().clone());
        ckpt.arrays.emplace_back(tag + "/" + p.key() + "/exp_avg_sq", s.exp_avg_sq().clone());
    }
    ckpt.meta["components"][tag] = {{"steps", steps}};
}

void load_adam(const Checkpoint &ckpt, const std::string &tag, torch::optim::Adam &opt, torch::nn::Module &m) {
    if (!ckpt.has_component(tag))
        throw InvalidInput("checkpoint lacks optimizer state " + tag);
    const auto &steps = ckpt.meta["components"][tag].at("steps");
    auto &state = opt.state();
    state.clear();
    for (const auto &p : m.named_parameters()) {
        if (!steps.contains(p.key()))
            continue;
        const auto *avg = ckpt.find(tag + "/" + p.key() + "/exp_avg");
        const auto *sq = ckpt.find(tag + "/" + p.key() + "/exp_avg_sq");
        if (!avg || !sq || avg->sizes() != p.value().sizes() || sq->sizes() != p.value().sizes())
            throw InvalidInput("optimizer state for " + tag + "/" + p.key() + " does not match the model");
        auto s = std::make_unique<torch::optim::AdamParamState>();
        s->step(steps[p.key()].get<int64_t>());
        s->exp_avg(avg->clone());
        s->exp_avg_sq(sq->clone());
        state[p.value().unsafeGetTensorImpl()] = std::move(s);
    }
}

} // namespace

Trainer::Trainer(ExperimentConfig cfg, std::shared_ptr<PerceptualExtractor> perceptual)
    : cfg_(std::move(cfg)), perceptual_(std::move(perceptual)) {
    cfg_.validate();
    torch::manual_seed(cfg_.train.seed);
    generator = Generator(cfg_.generator);
    discriminator = Discriminator(cfg_.discriminator);
    if (!perceptual_)
        perceptual_ = std::make_shared<RandomConvPyramid>();
    opt_g_ = make_adam(*generator, cfg_.train);
    opt_d_ = make_adam(*discriminator, cfg_.train);
    set_epoch(0);
}

void Trainer::set_epoch(int64_t epoch) {
    epoch_ = epoch;
    const double lr = cfg_.train.lr_at_epoch(epoch);
    for (auto *opt : {opt_g_.get(), opt_d_.get()})
        for (auto &group : opt->param_groups())
            static_cast<torch::optim::AdamOptions &>(group.options()).lr(lr);
}

double Trainer::current_lr() const {
    return static_cast<const torch::optim::AdamOptions &>(opt_g_->param_groups().front().options()).lr();
}

DiscriminatorLoss Trainer::update_discriminator(const Batch &batch, const MultiScaleOutput &fake) {
    const auto u_2d = control_map(batch);
    auto d_real = discriminator->forward(batch.blur, batch.sharp);
    auto d_fake = discriminator->forward(batch.blur, fake.full().detach());
    auto loss = loss_discriminator(d_real, d_fake, d_real.u_hat_2d, d_fake.u_hat_2d, u_2d, cfg_.weights);
    for (const auto &[t, name] : {std::pair{loss.enc, "L_Denc"}, {loss.dec, "L_Ddec"}, {loss.q, "L_Q"}})
        scalar(t, name, step_);
    opt_d_->zero_grad();
    loss.total.backward();
    opt_d_->step();
    return loss;
}

GeneratorLoss Trainer::update_generator(const Batch &batch, const MultiScaleOutput &fake) {
    const auto u_2d = control_map(batch);
    const auto targets = image_pyramid(batch.sharp);
    set_requires_grad(*discriminator, false);
    GeneratorLoss loss;
    try {
        auto d_fake = discriminator->forward(batch.blur, fake.full());
        loss = loss_generator(d_fake, d_fake.u_hat_2d, u_2d, fake, targets, cfg_.weights, *perceptual_);
        for (const auto &[t, name] :
             {std::pair{loss.ar, "L_ar"}, {loss.adv, "L_adv"}, {loss.pix, "L_pix"}, {loss.per, "L_per"}})
            scalar(t, name, step_);
        opt_g_->zero_grad();
        loss.total.backward();
        opt_g_->step();
    } catch (...) {
        set_requires_grad(*discriminator, true);
        throw;
    }
    set_requires_grad(*discriminator, true);
    return loss;
}

StepMetrics Trainer::train_step(const Batch &batch) {
    generator->train();
    discriminator->train();
    auto fake = generator->forward(batch.blur, batch.u);
    const auto dl = update_discriminator(batch, fake);
    const auto gl = update_generator(batch, fake);

    StepMetrics m;
    m.epoch = epoch_;
    m.step = ++step_;
    m.L_Denc = dl.enc.item<double>();
    m.L_Ddec = dl.dec.item<double>();
    m.L_Q = dl.q.item<double>();
    m.L_D = dl.total.item<double>();
    m.L_ar = gl.ar.item<double>();
    m.L_adv = gl.adv.item<double>();
    m.L_pix = gl.pix.item<double>();
    m.L_per = gl.per.item<double>();
    m.L_G = gl.total.item<double>();
    m.lr = current_lr();
    return m;
}

Checkpoint Trainer::checkpoint() const {
    Checkpoint ckpt;
    auto g = generator;
    auto d = discriminator;
    add_generator(ckpt, g);
    ckpt.meta["components"]["discriminator"] = {{"config", to_json(cfg_.discriminator)}};
    export_module(ckpt, "discriminator", *d);
    save_adam(ckpt, "optim_g", *opt_g_, *g);
    save_adam(ckpt, "optim_d", *opt_d_, *d);
    ckpt.meta["components"]["trainer"] = {
        {"step", step_}, {"epoch", epoch_}, {"config", to_config_text(cfg_)}};
    return ckpt;
}

void Trainer::restore(const Checkpoint &ckpt) {
    if (!ckpt.has_component("trainer"))
        throw InvalidInput("checkpoint has no trainer state to resume from");
    import_module(ckpt, "generator", *generator);
    import_module(ckpt, "discriminator", *discriminator);
    load_adam(ckpt, "optim_g", *opt_g_, *generator);
    load_adam(ckpt, "optim_d", *opt_d_, *discriminator);
    const auto &t = ckpt.meta["components"]["trainer"];
    step_ = t.at("step").get<int64_t>();
    set_epoch(t.at("epoch").get<int64_t>());
}

BatchSampler::BatchSampler(const DatasetManifest &manifest, const TrainConfig &cfg)
    : manifest_(manifest), cfg_(cfg), cache_(manifest.records.size()) {
    if (manifest.records.empty())
        throw InvalidInput("training manifest is empty");
}

int64_t BatchSampler::steps_per_epoch() const {
    const auto n = static_cast<int64_t>(manifest_.records.size());
    return (n + cfg_.batch_size - 1) / cfg_.batch_size;
}

const BlurSample &BatchSampler::sample(size_t index) {
    auto &slot = cache_[index];
    if (!slot)
        slot = load_sample(manifest_, index);
    return *slot;
}

Batch BatchSampler::batch_for_step(int64_t step) {
    const int64_t spe = steps_per_epoch();
    const int64_t epoch = step / spe, within = step % spe;
    std::vector<size_t> order(manifest_.records.size());
    std::iota(order.begin(), order.end(), size_t{0});
    auto erng = step_rng(cfg_.seed, epoch, kEpochSlot);
    std::shuffle(order.begin(), order.end(), erng);

    const size_t begin = static_cast<size_t>(within * cfg_.batch_size);
    const size_t end = std::min(order.size(), begin + static_cast<size_t>(cfg_.batch_size));
    std::vector<torch::Tensor> blurs, sharps;
    std::vector<double> us;
    for (size_t i = begin; i < end; ++i) {
        const auto &full = sample(order[i]);
        auto rng = step_rng(cfg_.seed, step, i - begin);
        const auto k = std::uniform_int_distribution<size_t>(0, full.gt_frames.frames.size() - 1)(rng);
        BlurSample one;
        one.blur = full.blur;
        one.gt_frames.frames = {full.gt_frames.frames[k]};
        one.gt_frames.control_factors = {full.gt_frames.control_factors[k]};
        const auto win = sample_crop_window(full.blur.size(1), full.blur.size(2), cfg_.scale_range, cfg_.crop, rng);
        auto crop = augment_with(one, win, cfg_.crop);
        blurs.push_back(crop.blur);
        sharps.push_back(crop.gt_frames.frames[0]);
        us.push_back(full.gt_frames.control_factors[k]);
    }
    Batch b;
    b.blur = torch::stack(blurs);
    b.sharp = torch::stack(sharps);
    b.u = torch::tensor(us, torch::kFloat64);
    return b;
}

TrainResult train_loop(const DatasetManifest &manifest, const ExperimentConfig &cfg, const fs::path &out_dir,
                       const std::optional<fs::path> &resume) {
    if (manifest.records.empty())
        throw InvalidInput("training manifest is empty");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec)
        throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

    Trainer trainer(cfg);
    if (resume)
        trainer.restore(load_checkpoint(*resume));
    BatchSampler sampler(manifest, cfg.train);
    const int64_t spe = sampler.steps_per_epoch();
    int64_t total = static_cast<int64_t>(cfg.train.epochs) * spe;
    if (cfg.train.max_steps >= 0)
        total = std::min(total, cfg.train.max_steps);

    std::ofstream step_log(out_dir / "metrics.jsonl", std::ios::app);
    std::ofstream epoch_log(out_dir / "epochs.jsonl", std::ios::app);
    if (!step_log || !epoch_log)
        throw IoError("cannot open metric logs in " + out_dir.string());

    TrainResult result;
    StepMetrics sum;
    int64_t in_epoch = 0;
    auto flush_epoch = [&](int64_t epoch) {
        if (in_epoch == 0)
            return;
        const double n = static_cast<double>(in_epoch);
        StepMetrics mean = sum;
        for (double *v : {&mean.L_Denc, &mean.L_Ddec, &mean.L_Q, &mean.L_ar, &mean.L_adv, &mean.L_pix, &mean.L_per})
            *v /= n;
        mean.epoch = epoch;
        mean.step = trainer.step();
        mean.lr = trainer.current_lr();
        auto j = mean.to_json();
        j["n_steps"] = in_epoch;
        epoch_log << j.dump() << "\n" << std::flush;
        sum = {};
        in_epoch = 0;
    };

    for (int64_t s = trainer.step(); s < total; ++s) {
        const int64_t epoch = s / spe;
        if (epoch != trainer.epoch())
            flush_epoch(trainer.epoch());
        trainer.set_epoch(epoch);
        const auto m = trainer.train_step(sampler.batch_for_step(s));
        step_log << m.to_json().dump() << "\n" << std::flush;
        result.metrics.push_back(m);
        for (auto [acc, v] : {std::pair{&sum.L_Denc, m.L_Denc}, {&sum.L_Ddec, m.L_Ddec}, {&sum.L_Q, m.L_Q},
                              {&sum.L_ar, m.L_ar}, {&sum.L_adv, m.L_adv}, {&sum.L_pix, m.L_pix},
                              {&sum.L_per, m.L_per}})
            *acc += v;
        ++in_epoch;
        if ((s + 1) % spe == 0)
            flush_epoch(epoch);
        if (cfg.train.checkpoint_every > 0 && (s + 1) % cfg.train.checkpoint_every == 0)
            save_checkpoint(out_dir / ("ckpt_step" + std::to_string(s + 1) + ".cfmd"), trainer.checkpoint());
    }
    flush_epoch(trainer.epoch());
    result.final_checkpoint = out_dir / "final.cfmd";
    save_checkpoint(result.final_checkpoint, trainer.checkpoint());
    return result;
}

} // namespace cfmd
