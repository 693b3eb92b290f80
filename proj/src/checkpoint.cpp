#include "cfmd/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "cfmd/error.hpp"
#include "cfmd/image_io.hpp"

namespace cfmd {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "checkpoint payloads are little-endian");

namespace {

constexpr char kMagic[8] = {'C', 'F', 'M', 'D', 'C', 'K', 'P', 'T'};

std::string dtype_name(torch::ScalarType t) {
    switch (t) {
    case torch::kFloat32:
        return "float32";
    case torch::kFloat64:
        return "float64";
    case torch::kInt64:
        return "int64";
    default:
        throw InvalidInput("checkpoint: unsupported dtype " + std::string(c10::toString(t)));
    }
}

torch::ScalarType dtype_from(const std::string &s) {
    if (s == "float32")
        return torch::kFloat32;
    if (s == "float64")
        return torch::kFloat64;
    if (s == "int64")
        return torch::kInt64;
    throw IoError("checkpoint: unknown dtype " + s);
}

std::string shape_str(torch::IntArrayRef s) {
    std::ostringstream os;
    os << s;
    return os.str();
}

} // namespace

const torch::Tensor *Checkpoint::find(const std::string &name) const {
    for (const auto &[n, t] : arrays)
        if (n == name)
            return &t;
    return nullptr;
}

bool Checkpoint::has_component(const std::string &tag) const {
    return meta.contains("components") && meta["components"].contains(tag);
}

void save_checkpoint(const fs::path &path, const Checkpoint &ckpt) {
    json header;
    header["schema_version"] = Checkpoint::kSchemaVersion;
    header["meta"] = ckpt.meta;
    header["arrays"] = json::array();
    std::string payload;
    for (const auto &[name, tensor] : ckpt.arrays) {
        auto t = tensor.detach().cpu().contiguous();
        const auto nbytes = static_cast<size_t>(t.numel()) * t.element_size();
        header["arrays"].push_back({{"name", name},
                                    {"dtype", dtype_name(t.scalar_type())},
                                    {"shape", t.sizes().vec()},
                                    {"offset", payload.size()},
                                    {"nbytes", nbytes}});
        payload.append(static_cast<const char *>(t.data_ptr()), nbytes);
    }
    const std::string head = header.dump();
    std::string out(kMagic, sizeof(kMagic));
    const uint32_t version = Checkpoint::kSchemaVersion;
    const uint64_t head_len = head.size();
    out.append(reinterpret_cast<const char *>(&version), sizeof(version));
    out.append(reinterpret_cast<const char *>(&head_len), sizeof(head_len));
    out += head;
    out += payload;
    write_file_atomic(path, out);
}

Checkpoint load_checkpoint(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open checkpoint " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const size_t fixed = sizeof(kMagic) + sizeof(uint32_t) + sizeof(uint64_t);
    if (bytes.size() < fixed || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
        throw IoError(path.string() + " is not a checkpoint file");
    uint32_t version = 0;
    uint64_t head_len = 0;
    std::memcpy(&version, bytes.data() + sizeof(kMagic), sizeof(version));
    std::memcpy(&head_len, bytes.data() + sizeof(kMagic) + sizeof(version), sizeof(head_len));
    if (version != Checkpoint::kSchemaVersion)
        throw IoError(path.string() + ": unsupported checkpoint schema " + std::to_string(version));
    if (fixed + head_len > bytes.size())
        throw IoError(path.string() + ": truncated header");
    json header;
    try {
        header = json::parse(bytes.substr(fixed, head_len));
    } catch (const json::exception &e) {
        throw IoError(path.string() + ": corrupt header: " + e.what());
    }
    const size_t base = fixed + head_len;
    Checkpoint ckpt;
    ckpt.meta = header.value("meta", json::object());
    for (const auto &a : header.at("arrays")) {
        const auto offset = a.at("offset").get<size_t>();
        const auto nbytes = a.at("nbytes").get<size_t>();
        if (base + offset + nbytes > bytes.size())
            throw IoError(path.string() + ": truncated payload for " + a.at("name").get<std::string>());
        auto shape = a.at("shape").get<std::vector<int64_t>>();
        auto t = torch::empty(shape, torch::TensorOptions().dtype(dtype_from(a.at("dtype").get<std::string>())));
        if (static_cast<size_t>(t.numel()) * t.element_size() != nbytes)
            throw IoError(path.string() + ": size mismatch for " + a.at("name").get<std::string>());
        std::memcpy(t.data_ptr(), bytes.data() + base + offset, nbytes);
        ckpt.arrays.emplace_back(a.at("name").get<std::string>(), std::move(t));
    }
    return ckpt;
}

void export_module(Checkpoint &ckpt, const std::string &tag, const torch::nn::Module &module) {
    for (const auto &p : module.named_parameters())
        ckpt.arrays.emplace_back(tag + "/" + p.key(), p.value().detach().clone());
    for (const auto &b : module.named_buffers())
        ckpt.arrays.emplace_back(tag + "/" + b.key(), b.value().detach().clone());
}

void import_module(const Checkpoint &ckpt, const std::string &tag, torch::nn::Module &module) {
    std::vector<std::string> problems;
    std::vector<std::pair<torch::Tensor, const torch::Tensor *>> assignments;
    auto collect = [&](const std::string &name, torch::Tensor &dst) {
        const auto *src = ckpt.find(tag + "/" + name);
        if (!src)
            problems.push_back("missing " + tag + "/" + name);
        else if (src->sizes() != dst.sizes())
            problems.push_back(tag + "/" + name + ": checkpoint shape " + shape_str(src->sizes()) +
                               " vs model shape " + shape_str(dst.sizes()));
        else
            assignments.emplace_back(dst, src);
    };
    for (auto &p : module.named_parameters())
        collect(p.key(), p.value());
    for (auto &b : module.named_buffers())
        collect(b.key(), b.value());
    if (!problems.empty()) {
        std::string msg = "checkpoint incompatible with " + tag + " configuration:";
        for (const auto &p : problems)
            msg += "\n  " + p;
        throw InvalidInput(msg);
    }
    torch::NoGradGuard guard;
    for (auto &[dst, src] : assignments)
        dst.copy_(*src);
}

json to_json(const GeneratorConfig &cfg) {
    return {{"base_channels", cfg.base_channels}, {"n_blocks_per_stage", cfg.n_blocks_per_stage},
            {"scales", cfg.scales},               {"mapping_layers", cfg.mapping_layers},
            {"mapping_channels", cfg.mapping_channels}, {"leaky_slope", cfg.leaky_slope}};
}

GeneratorConfig generator_config_from_json(const json &j) {
    GeneratorConfig c;
    c.base_channels = j.at("base_channels").get<int>();
    c.n_blocks_per_stage = j.at("n_blocks_per_stage").get<int>();
    c.scales = j.at("scales").get<int>();
    c.mapping_layers = j.at("mapping_layers").get<int>();
    c.mapping_channels = j.at("mapping_channels").get<int>();
    c.leaky_slope = j.at("leaky_slope").get<double>();
    return c;
}

json to_json(const DiscriminatorConfig &cfg) {
    return {{"base_channels", cfg.base_channels}, {"depth", cfg.depth}, {"leaky_slope", cfg.leaky_slope}};
}

DiscriminatorConfig discriminator_config_from_json(const json &j) {
    DiscriminatorConfig c;
    c.base_channels = j.at("base_channels").get<int>();
    c.depth = j.at("depth").get<int>();
    c.leaky_slope = j.at("leaky_slope").get<double>();
    return c;
}

void add_generator(Checkpoint &ckpt, Generator &generator) {
    ckpt.meta["components"]["generator"] = {{"config", to_json(generator->config())}};
    export_module(ckpt, "generator", *generator);
}

Generator load_generator(const Checkpoint &ckpt) {
    if (!ckpt.has_component("generator"))
        throw InvalidInput("checkpoint has no generator component");
    Generator g(generator_config_from_json(ckpt.meta["components"]["generator"].at("config")));
    import_module(ckpt, "generator", *g);
    g->eval();
    return g;
}

Generator load_generator(const fs::path &path) { return load_generator(load_checkpoint(path)); }

} // namespace cfmd
