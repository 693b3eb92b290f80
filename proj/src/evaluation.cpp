#include "cfmd/evaluation.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cfmd/error.hpp"

namespace cfmd {

namespace fs = std::filesystem;
using nlohmann::json;

Image GeneratorRestorer::restore(const Image &blur, double u, const PairContext &) {
    return generator_->restore(blur, u);
}

Image OracleRestorer::restore(const Image &, double, const PairContext &ctx) {
    return read_png(ctx.manifest.resolve(ctx.manifest.records[ctx.record].gt_paths[ctx.frame]));
}

namespace {

std::string shell_quote(const std::string &s) {
    std::string out = "'";
    for (char c : s)
        out += c == '\'' ? std::string("'\\''") : std::string(1, c);
    return out + "'";
}

struct Accumulator {
    double psnr_sum = 0, ssim_sum = 0;
    size_t n = 0, n_inf = 0;
    std::map<std::string, std::pair<double, size_t>> extra;

    void add(double p, double s) {
        ++n;
        if (std::isinf(p))
            ++n_inf;
        else
            psnr_sum += p;
        ssim_sum += s;
    }

    GroupMetrics finish(const EvalOptions &opts, const std::set<std::string> &failed) const {
        GroupMetrics g;
        g.n_pairs = n;
        g.n_infinite_psnr = n_inf;
        if (opts.psnr && n > 0)
            g.psnr = n_inf == n ? kInfinitePsnr : psnr_sum / static_cast<double>(n - n_inf);
        if (opts.ssim && n > 0)
            g.ssim = ssim_sum / static_cast<double>(n);
        for (const auto &[k, v] : extra)
            if (!failed.count(k.substr(0, k.find('.'))) && v.second > 0)
                g.extra[k] = v.first / static_cast<double>(v.second);
        return g;
    }
};

} // namespace

std::map<std::string, double> CommandMetricPlugin::compute(const fs::path &restored, const fs::path &ground_truth,
                                                           const fs::path &blur) {
    const std::string cmd = command_ + " " + shell_quote(restored.string()) + " " +
                            shell_quote(ground_truth.string()) + " " + shell_quote(blur.string());
    FILE *pipe = popen(cmd.c_str(), "r");
    if (!pipe)
        throw IoError("cannot start metric plugin " + name_);
    std::string output;
    std::array<char, 256> buf{};
    while (fgets(buf.data(), static_cast<int>(buf.size()), pipe))
        output += buf.data();
    const int status = pclose(pipe);
    if (status != 0)
        throw IoError("metric plugin " + name_ + " exited with status " + std::to_string(status));
    std::map<std::string, double> values;
    std::istringstream in(output);
    std::string line;
    while (std::getline(in, line)) {
        for (auto &c : line)
            if (c == '=')
                c = ' ';
        std::istringstream ls(line);
        std::string key;
        double v = 0;
        if (ls >> key >> v)
            values[key] = v;
    }
    if (values.empty())
        throw IoError("metric plugin " + name_ + " produced no values");
    return values;
}

EvalReport evaluate_dataset(const DatasetManifest &manifest, Restorer &restorer, const EvalOptions &opts) {
    if (manifest.records.empty())
        throw InvalidInput("evaluation manifest is empty");
    std::vector<std::string> missing;
    for (const auto &r : manifest.records) {
        if (!fs::exists(manifest.resolve(r.blur_path)))
            missing.push_back(manifest.resolve(r.blur_path).string());
        for (const auto &g : r.gt_paths)
            if (!fs::exists(manifest.resolve(g)))
                missing.push_back(manifest.resolve(g).string());
    }
    if (!missing.empty()) {
        std::string msg = "evaluation inputs missing:";
        for (const auto &m : missing)
            msg += "\n  " + m;
        throw IoError(msg);
    }
    if (!opts.plugins.empty()) {
        std::error_code ec;
        fs::create_directories(opts.work_dir, ec);
        if (ec || opts.work_dir.empty())
            throw IoError("metric plugins need a writable work directory");
    }

    EvalReport report;
    std::map<int, Accumulator> groups;
    Accumulator all;
    std::set<std::string> failed;
    for (size_t ri = 0; ri < manifest.records.size(); ++ri) {
        const auto &rec = manifest.records[ri];
        const auto blur = read_png(manifest.resolve(rec.blur_path));
        for (size_t k = 0; k < rec.gt_paths.size(); ++k) {
            const PairContext ctx{manifest, ri, k};
            const auto gt_path = manifest.resolve(rec.gt_paths[k]);
            const auto gt = read_png(gt_path);
            const auto restored = quantize8(restorer.restore(blur, rec.control_factors[k], ctx));
            const double p = opts.psnr ? psnr(restored, gt) : 0.0;
            const double s = opts.ssim ? ssim(restored, gt) : 0.0;
            groups[rec.n_frames].add(p, s);
            all.add(p, s);
            if (opts.plugins.empty())
                continue;
            char name[64];
            std::snprintf(name, sizeof(name), "r%05zu_f%02zu.png", ri, k);
            const auto restored_path = opts.work_dir / name;
            write_png(restored_path, restored);
            for (const auto &plugin : opts.plugins) {
                if (failed.count(plugin->name()))
                    continue;
                try {
                    for (const auto &[key, v] : plugin->compute(restored_path, gt_path, manifest.resolve(rec.blur_path))) {
                        const auto full_key = plugin->name() + "." + key;
                        for (auto *acc : {&groups[rec.n_frames], &all}) {
                            acc->extra[full_key].first += v;
                            acc->extra[full_key].second += 1;
                        }
                    }
                } catch (const std::exception &e) {
                    failed.insert(plugin->name());
                    report.notes.push_back("metric " + plugin->name() + " absent: " + e.what());
                }
            }
        }
    }
    for (const auto &[n, acc] : groups)
        report.per_group[n] = acc.finish(opts, failed);
    report.overall = all.finish(opts, failed);
    if (all.n_inf > 0)
        report.notes.push_back(std::to_string(all.n_inf) + " exact pair(s) had infinite PSNR and are excluded from PSNR means");
    return report;
}

namespace {

json group_json(const std::string &key, const GroupMetrics &g) {
    json j;
    j["n_frames"] = key;
    j["n_pairs"] = g.n_pairs;
    j["n_infinite_psnr"] = g.n_infinite_psnr;
    if (g.psnr)
        j["psnr"] = std::isinf(*g.psnr) ? json("inf") : json(*g.psnr);
    else
        j["psnr"] = nullptr;
    j["ssim"] = g.ssim ? json(*g.ssim) : json(nullptr);
    for (const auto &[k, v] : g.extra)
        j[k] = v;
    return j;
}

std::string cell(const std::optional<double> &v, int precision) {
    if (!v)
        return "-";
    if (std::isinf(*v))
        return "inf";
    std::ostringstream os;
    os << std::fixed << std::setprecision(precision) << *v;
    return os.str();
}

} // namespace

std::string report_jsonl(const EvalReport &report) {
    std::string out;
    for (const auto &[n, g] : report.per_group)
        out += group_json(std::to_string(n), g).dump() + "\n";
    auto overall = group_json("ALL", report.overall);
    overall["notes"] = report.notes;
    out += overall.dump() + "\n";
    return out;
}

std::string report_table(const EvalReport &report) {
    std::set<std::string> extra_keys;
    for (const auto &[k, v] : report.overall.extra)
        extra_keys.insert(k);
    std::ostringstream os;
    auto row = [&](const std::string &label, const GroupMetrics &g) {
        os << std::left << std::setw(10) << label << std::right << std::setw(12) << g.n_pairs << std::setw(12)
           << cell(g.psnr, 4) << std::setw(10) << cell(g.ssim, 4);
        for (const auto &k : extra_keys) {
            auto it = g.extra.find(k);
            os << std::setw(16) << cell(it == g.extra.end() ? std::nullopt : std::optional<double>(it->second), 4);
        }
        os << "\n";
    };
    os << std::left << std::setw(10) << "# of GT" << std::right << std::setw(12) << "# of pairs" << std::setw(12)
       << "PSNR" << std::setw(10) << "SSIM";
    for (const auto &k : extra_keys)
        os << std::setw(16) << k;
    os << "\n";
    for (const auto &[n, g] : report.per_group)
        row(std::to_string(n), g);
    row("ALL", report.overall);
    for (const auto &n : report.notes)
        os << "note: " << n << "\n";
    return os.str();
}

} // namespace cfmd
