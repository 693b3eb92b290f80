#include "cfmd/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace cfmd {

void TrainConfig::validate() const {
    if (!(lr > 0.0))
        throw ConfigError("lr", "lr must be positive");
    if (!(lr_decay_per_epoch > 0.0 && lr_decay_per_epoch <= 1.0))
        throw ConfigError("lr_decay_per_epoch", "lr_decay_per_epoch must lie in (0, 1]");
    if (!(betas.first >= 0.0 && betas.first < 1.0 && betas.second >= 0.0 && betas.second < 1.0))
        throw ConfigError("betas", "betas must lie in [0, 1)");
    if (batch_size < 1)
        throw ConfigError("batch_size", "batch_size must be >= 1");
    if (epochs < 0)
        throw ConfigError("epochs", "epochs must be >= 0");
    if (crop < 16 || crop % 16 != 0)
        throw ConfigError("crop", "crop must be a positive multiple of 16");
    if (!(scale_range.first > 0.0 && scale_range.second >= scale_range.first))
        throw ConfigError("scale_range", "scale_range must be 0 < lo <= hi");
    if (checkpoint_every < 0)
        throw ConfigError("checkpoint_every", "checkpoint_every must be >= 0");
}

double TrainConfig::lr_at_epoch(int64_t epoch) const {
    return lr * std::pow(lr_decay_per_epoch, static_cast<double>(epoch));
}

void ExperimentConfig::validate() const {
    train.validate();
    weights.validate();
    generator.validate();
    discriminator.validate();
    if (train.crop % discriminator.total_stride() != 0)
        throw ConfigError("crop", "crop must be divisible by the discriminator stride");
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string &key, const std::string &v) {
    double out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw ConfigError(key, "invalid number for " + key + ": '" + v + "'");
    return out;
}

int64_t to_int(const std::string &key, const std::string &v) {
    int64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw ConfigError(key, "invalid integer for " + key + ": '" + v + "'");
    return out;
}

std::pair<double, double> to_pair(const std::string &key, const std::string &v) {
    const auto comma = v.find(',');
    if (comma == std::string::npos)
        throw ConfigError(key, key + " expects two comma-separated numbers");
    return {to_double(key, trim(v.substr(0, comma))), to_double(key, trim(v.substr(comma + 1)))};
}

using Setter = std::function<void(ExperimentConfig &, const std::string &key, const std::string &value)>;

const std::map<std::string, Setter> &setters() {
    static const std::map<std::string, Setter> table = {
        {"lr", [](auto &c, auto &k, auto &v) { c.train.lr = to_double(k, v); }},
        {"betas", [](auto &c, auto &k, auto &v) { c.train.betas = to_pair(k, v); }},
        {"lr_decay_per_epoch", [](auto &c, auto &k, auto &v) { c.train.lr_decay_per_epoch = to_double(k, v); }},
        {"batch_size", [](auto &c, auto &k, auto &v) { c.train.batch_size = static_cast<int>(to_int(k, v)); }},
        {"epochs", [](auto &c, auto &k, auto &v) { c.train.epochs = static_cast<int>(to_int(k, v)); }},
        {"crop", [](auto &c, auto &k, auto &v) { c.train.crop = to_int(k, v); }},
        {"scale_range", [](auto &c, auto &k, auto &v) { c.train.scale_range = to_pair(k, v); }},
        {"seed", [](auto &c, auto &k, auto &v) { c.train.seed = static_cast<uint64_t>(to_int(k, v)); }},
        {"max_steps", [](auto &c, auto &k, auto &v) { c.train.max_steps = to_int(k, v); }},
        {"checkpoint_every", [](auto &c, auto &k, auto &v) { c.train.checkpoint_every = to_int(k, v); }},
        {"lambda_Q", [](auto &c, auto &k, auto &v) { c.weights.lambda_Q = to_double(k, v); }},
        {"lambda_ar", [](auto &c, auto &k, auto &v) { c.weights.lambda_ar = to_double(k, v); }},
        {"lambda_adv", [](auto &c, auto &k, auto &v) { c.weights.lambda_adv = to_double(k, v); }},
        {"lambda_pix", [](auto &c, auto &k, auto &v) { c.weights.lambda_pix = to_double(k, v); }},
        {"lambda_per", [](auto &c, auto &k, auto &v) { c.weights.lambda_per = to_double(k, v); }},
        {"epsilon_charbonnier", [](auto &c, auto &k, auto &v) { c.weights.epsilon_charbonnier = to_double(k, v); }},
        {"base_channels", [](auto &c, auto &k, auto &v) { c.generator.base_channels = static_cast<int>(to_int(k, v)); }},
        {"n_blocks_per_stage",
         [](auto &c, auto &k, auto &v) { c.generator.n_blocks_per_stage = static_cast<int>(to_int(k, v)); }},
        {"scales", [](auto &c, auto &k, auto &v) { c.generator.scales = static_cast<int>(to_int(k, v)); }},
        {"mapping_layers", [](auto &c, auto &k, auto &v) { c.generator.mapping_layers = static_cast<int>(to_int(k, v)); }},
        {"mapping_channels",
         [](auto &c, auto &k, auto &v) { c.generator.mapping_channels = static_cast<int>(to_int(k, v)); }},
        {"leaky_slope",
         [](auto &c, auto &k, auto &v) {
             c.generator.leaky_slope = to_double(k, v);
             c.discriminator.leaky_slope = c.generator.leaky_slope;
         }},
        {"disc_base_channels",
         [](auto &c, auto &k, auto &v) { c.discriminator.base_channels = static_cast<int>(to_int(k, v)); }},
        {"disc_depth", [](auto &c, auto &k, auto &v) { c.discriminator.depth = static_cast<int>(to_int(k, v)); }},
    };
    return table;
}

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

} // namespace

ExperimentConfig parse_experiment_config(const std::string &text, ExperimentConfig cfg) {
    std::istringstream in(text);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.resize(hash);
        const std::string body = trim(line);
        if (body.empty())
            continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw ConfigError(body, "line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        const auto it = setters().find(key);
        if (it == setters().end())
            throw ConfigError(key, "unknown config key: " + key);
        it->second(cfg, key, value);
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_experiment_config(ss.str());
}

std::string to_config_text(const ExperimentConfig &c) {
    std::ostringstream os;
    os << "lr = " << fmt_double(c.train.lr) << "\n"
       << "betas = " << fmt_double(c.train.betas.first) << "," << fmt_double(c.train.betas.second) << "\n"
       << "lr_decay_per_epoch = " << fmt_double(c.train.lr_decay_per_epoch) << "\n"
       << "batch_size = " << c.train.batch_size << "\n"
       << "epochs = " << c.train.epochs << "\n"
       << "crop = " << c.train.crop << "\n"
       << "scale_range = " << fmt_double(c.train.scale_range.first) << "," << fmt_double(c.train.scale_range.second)
       << "\n"
       << "seed = " << c.train.seed << "\n"
       << "max_steps = " << c.train.max_steps << "\n"
       << "checkpoint_every = " << c.train.checkpoint_every << "\n"
       << "lambda_Q = " << fmt_double(c.weights.lambda_Q) << "\n"
       << "lambda_ar = " << fmt_double(c.weights.lambda_ar) << "\n"
       << "lambda_adv = " << fmt_double(c.weights.lambda_adv) << "\n"
       << "lambda_pix = " << fmt_double(c.weights.lambda_pix) << "\n"
       << "lambda_per = " << fmt_double(c.weights.lambda_per) << "\n"
       << "epsilon_charbonnier = " << fmt_double(c.weights.epsilon_charbonnier) << "\n"
       << "base_channels = " << c.generator.base_channels << "\n"
       << "n_blocks_per_stage = " << c.generator.n_blocks_per_stage << "\n"
       << "scales = " << c.generator.scales << "\n"
       << "mapping_layers = " << c.generator.mapping_layers << "\n"
       << "mapping_channels = " << c.generator.mapping_channels << "\n"
       << "leaky_slope = " << fmt_double(c.generator.leaky_slope) << "\n"
       << "disc_base_channels = " << c.discriminator.base_channels << "\n"
       << "disc_depth = " << c.discriminator.depth << "\n";
    return os.str();
}

void apply_seed_override(ExperimentConfig &cfg) {
    if (const char *s = std::getenv("CFMD_SEED"); s && *s)
        cfg.train.seed = static_cast<uint64_t>(to_int("CFMD_SEED", s));
}

} // namespace cfmd
