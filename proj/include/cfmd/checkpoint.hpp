#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

#include "cfmd/discriminator.hpp"
#include "cfmd/generator.hpp"

namespace cfmd {

// Single-file container: magic, schema version, a JSON header describing every named
// array, then the raw little-endian array payloads. Components (generator,
// discriminator, trainer state) are tagged in `meta["components"]` and their arrays are
// prefixed with `<component>/`.
struct Checkpoint {
    static constexpr int kSchemaVersion = 1;

    nlohmann::json meta = nlohmann::json::object();
    std::vector<std::pair<std::string, torch::Tensor>> arrays;

    const torch::Tensor *find(const std::string &name) const;
    bool has_component(const std::string &tag) const;
};

void save_checkpoint(const std::filesystem::path &path, const Checkpoint &ckpt);
Checkpoint load_checkpoint(const std::filesystem::path &path);

// Parameters and buffers of `module` stored under `<tag>/<name>`.
void export_module(Checkpoint &ckpt, const std::string &tag, const torch::nn::Module &module);
// Throws InvalidInput listing every missing array or shape mismatch.
void import_module(const Checkpoint &ckpt, const std::string &tag, torch::nn::Module &module);

nlohmann::json to_json(const GeneratorConfig &cfg);
GeneratorConfig generator_config_from_json(const nlohmann::json &j);
nlohmann::json to_json(const DiscriminatorConfig &cfg);
DiscriminatorConfig discriminator_config_from_json(const nlohmann::json &j);

void add_generator(Checkpoint &ckpt, Generator &generator);
Generator load_generator(const Checkpoint &ckpt);
Generator load_generator(const std::filesystem::path &path);

} // namespace cfmd
