#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cfmd/dataset.hpp"
#include "cfmd/generator.hpp"
#include "cfmd/metrics.hpp"

namespace cfmd {

struct PairContext {
    const DatasetManifest &manifest;
    size_t record;
    size_t frame; // index into gt_paths / control_factors
};

// Produces s_hat(u) for a blurred image.
class Restorer {
public:
    virtual ~Restorer() = default;
    virtual Image restore(const Image &blur, double u, const PairContext &ctx) = 0;
};

class GeneratorRestorer : public Restorer {
public:
    explicit GeneratorRestorer(Generator generator) : generator_(std::move(generator)) {}
    Image restore(const Image &blur, double u, const PairContext &ctx) override;

private:
    Generator generator_;
};

// Returns the blur unchanged: the no-op baseline.
class BlurRestorer : public Restorer {
public:
    Image restore(const Image &blur, double, const PairContext &) override { return blur; }
};

// Returns the ground truth: upper bound / harness self-check.
class OracleRestorer : public Restorer {
public:
    Image restore(const Image &blur, double u, const PairContext &ctx) override;
};

// External metric (LPIPS, FID features, identity distance ...) fed with file paths.
class MetricPlugin {
public:
    virtual ~MetricPlugin() = default;
    virtual std::string name() const = 0;
    virtual std::map<std::string, double> compute(const std::filesystem::path &restored,
                                                  const std::filesystem::path &ground_truth,
                                                  const std::filesystem::path &blur) = 0;
};

// Runs `command restored gt blur` and parses `name value` or `name=value` lines from stdout.
class CommandMetricPlugin : public MetricPlugin {
public:
    CommandMetricPlugin(std::string name, std::string command)
        : name_(std::move(name)), command_(std::move(command)) {}
    std::string name() const override { return name_; }
    std::map<std::string, double> compute(const std::filesystem::path &restored,
                                          const std::filesystem::path &ground_truth,
                                          const std::filesystem::path &blur) override;

private:
    std::string name_;
    std::string command_;
};

struct GroupMetrics {
    std::optional<double> psnr; // mean over finite pairs; +inf when every pair was exact
    std::optional<double> ssim;
    size_t n_pairs = 0;
    size_t n_infinite_psnr = 0; // pairs excluded from the PSNR mean
    std::map<std::string, double> extra;
};

struct EvalReport {
    std::map<int, GroupMetrics> per_group; // keyed by n_frames
    GroupMetrics overall;
    std::vector<std::string> notes;
};

struct EvalOptions {
    bool psnr = true;
    bool ssim = true;
    std::vector<std::shared_ptr<MetricPlugin>> plugins;
    std::filesystem::path work_dir; // restored frames are written here when plugins run
};

EvalReport evaluate_dataset(const DatasetManifest &manifest, Restorer &restorer, const EvalOptions &opts = {});

std::string report_jsonl(const EvalReport &report);
std::string report_table(const EvalReport &report);

} // namespace cfmd
