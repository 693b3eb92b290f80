#include "cfmd/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cfmd/checkpoint.hpp"
#include "cfmd/config.hpp"
#include "cfmd/dataset.hpp"
#include "cfmd/error.hpp"
#include "cfmd/evaluation.hpp"
#include "cfmd/plot.hpp"
#include "cfmd/synthetic.hpp"
#include "cfmd/trainer.hpp"

namespace cfmd {

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kUsage = 2;

class UsageError : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

struct SynthesizeArgs {
    std::string clips, eyes, out;
    std::vector<int> n_frames{5, 7, 9, 11, 13};
    bool gamma = false;
};

struct TrainArgs {
    std::string manifest, config, out, resume;
};

struct InferArgs {
    std::string ckpt, blur, out;
    int num_frames = 0;
    std::vector<double> u;
    bool gif = false;
    int fps = 5;
};

struct EvaluateArgs {
    std::string manifest, ckpt, out, baseline;
    std::vector<std::string> metrics{"psnr", "ssim"};
    std::vector<std::string> metric_cmds;
};

struct DemoArgs {
    std::string out;
    int clips = 2, frames = 14;
    int64_t size = 128;
    uint64_t seed = 0;
};

struct PlotArgs {
    std::string log, out, title = "training losses";
    std::vector<std::string> keys{"L_Denc", "L_Ddec", "L_Q", "L_ar", "L_adv", "L_pix", "L_per"};
};

int cmd_synthesize(const SynthesizeArgs &a, std::ostream &out, std::ostream &err) {
    for (int n : a.n_frames)
        if (n < kMinWindow || n > kMaxWindow)
            throw UsageError("--n-frames values must lie in 5..13, got " + std::to_string(n));
    if (!fs::is_directory(a.clips))
        throw UsageError("--clips is not a directory: " + a.clips);
    if (!fs::is_directory(a.eyes))
        throw UsageError("--eyes is not a directory: " + a.eyes);

    std::vector<fs::path> dirs;
    for (const auto &e : fs::directory_iterator(a.clips))
        if (e.is_directory())
            dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    std::vector<FrameSequence> clips;
    for (const auto &d : dirs) {
        const std::string id = d.filename().string();
        const fs::path sidecar = fs::path(a.eyes) / (id + ".eyes.csv");
        if (!fs::exists(sidecar)) {
            err << "warning: no eye sidecar for clip " << id << " (" << sidecar.string() << "); skipped\n";
            continue;
        }
        clips.push_back(load_clip(d, sidecar, id));
    }
    const auto response = a.gamma ? CameraResponse::gamma_curve() : CameraResponse::identity();
    const auto build = build_dataset(clips, a.n_frames, a.out, response);
    for (const auto &w : build.warnings)
        err << "warning: " << w << "\n";

    const auto counts = build.manifest.counts_by_n();
    out << std::left << std::setw(18) << "# of averaged" << std::setw(18) << "# of blurred" << "# of sharp\n";
    size_t total_b = 0, total_s = 0;
    for (int n : std::set<int>(a.n_frames.begin(), a.n_frames.end())) {
        const size_t c = counts.count(n) ? counts.at(n) : 0;
        out << std::left << std::setw(18) << n << std::setw(18) << c << c * static_cast<size_t>(n) << "\n";
        total_b += c;
        total_s += c * static_cast<size_t>(n);
    }
    out << std::left << std::setw(18) << "Total" << std::setw(18) << total_b << total_s << "\n";
    out << "manifest: " << (fs::path(a.out) / "manifest.jsonl").string() << "\n";
    return kOk;
}

int cmd_train(const TrainArgs &a, std::ostream &out) {
    auto cfg = load_experiment_config(a.config);
    apply_seed_override(cfg);
    const auto manifest = read_manifest(a.manifest);
    if (manifest.records.empty())
        throw UsageError("manifest has no records: " + a.manifest);
    std::optional<fs::path> resume;
    if (!a.resume.empty())
        resume = a.resume;
    fs::create_directories(a.out);
    write_file_atomic(fs::path(a.out) / "config.txt", to_config_text(cfg));
    const auto result = train_loop(manifest, cfg, a.out, resume);
    if (!result.metrics.empty()) {
        const auto &m = result.metrics.back();
        out << "step " << m.step << " epoch " << m.epoch << " L_D " << m.L_D << " L_G " << m.L_G << " L_pix "
            << m.L_pix << " lr " << m.lr << "\n";
    }
    out << "ran " << result.metrics.size() << " step(s); checkpoint: " << result.final_checkpoint.string() << "\n";
    return kOk;
}

int cmd_infer(const InferArgs &a, std::ostream &out) {
    std::vector<double> us = a.u;
    if (us.empty()) {
        if (a.num_frames < 1)
            throw UsageError("give --num-frames M (M >= 1) or --u LIST");
        for (int k = 0; k < a.num_frames; ++k)
            us.push_back(static_cast<double>(k) / a.num_frames);
    }
    for (double u : us)
        if (!(u >= 0.0 && u <= 1.0))
            throw UsageError("control factor outside [0,1]: " + std::to_string(u));
    auto generator = load_generator(fs::path(a.ckpt));
    const auto blur = read_png(a.blur);
    if (blur.size(1) % 4 != 0 || blur.size(2) % 4 != 0)
        throw UsageError("blur image size must be divisible by 4");
    fs::create_directories(a.out);
    std::vector<Image> frames;
    std::ostringstream index;
    for (size_t k = 0; k < us.size(); ++k) {
        auto frame = generator->restore(blur, us[k]);
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%03zu.png", k);
        write_png(fs::path(a.out) / name, frame);
        index << name << " " << std::setprecision(17) << us[k] << "\n";
        frames.push_back(frame);
    }
    write_file_atomic(fs::path(a.out) / "frames.txt", index.str());
    if (a.gif)
        write_apng(fs::path(a.out) / "preview.png", frames, a.fps);
    out << "wrote " << frames.size() << " frame(s) to " << a.out << "\n";
    return kOk;
}

int cmd_evaluate(const EvaluateArgs &a, std::ostream &out) {
    EvalOptions opts;
    opts.psnr = opts.ssim = false;
    for (const auto &m : a.metrics) {
        if (m == "psnr")
            opts.psnr = true;
        else if (m == "ssim")
            opts.ssim = true;
        else
            throw UsageError("unknown metric: " + m);
    }
    for (const auto &spec : a.metric_cmds) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos || eq == 0)
            throw UsageError("--metric-cmd expects NAME=COMMAND");
        opts.plugins.push_back(std::make_shared<CommandMetricPlugin>(spec.substr(0, eq), spec.substr(eq + 1)));
    }
    if (a.ckpt.empty() == a.baseline.empty())
        throw UsageError("give exactly one of --ckpt or --baseline");
    const auto manifest = read_manifest(a.manifest);
    if (manifest.records.empty())
        throw UsageError("manifest has no records: " + a.manifest);
    std::unique_ptr<Restorer> restorer;
    if (!a.ckpt.empty())
        restorer = std::make_unique<GeneratorRestorer>(load_generator(fs::path(a.ckpt)));
    else if (a.baseline == "blur")
        restorer = std::make_unique<BlurRestorer>();
    else if (a.baseline == "oracle")
        restorer = std::make_unique<OracleRestorer>();
    else
        throw UsageError("unknown baseline: " + a.baseline);
    const fs::path out_path(a.out);
    if (out_path.has_parent_path())
        fs::create_directories(out_path.parent_path());
    opts.work_dir = out_path.string() + ".restored";
    const auto report = evaluate_dataset(manifest, *restorer, opts);
    write_file_atomic(out_path, report_jsonl(report));
    const auto table = report_table(report);
    write_file_atomic(out_path.string() + ".txt", table);
    out << table;
    return kOk;
}

int cmd_demo(const DemoArgs &a, std::ostream &out) {
    if (a.clips < 1 || a.frames < 1 || a.size < 16)
        throw UsageError("demo-clips needs --clips >= 1, --frames >= 1, --size >= 16");
    for (int c = 0; c < a.clips; ++c) {
        SyntheticClipOptions o;
        o.height = o.width = a.size;
        o.n_frames = a.frames;
        o.seed = a.seed * 1000 + static_cast<uint64_t>(c);
        char id[32];
        std::snprintf(id, sizeof(id), "clip%03d", c);
        write_clip(make_synthetic_clip(o, id), fs::path(a.out) / "clips", fs::path(a.out) / "eyes");
    }
    out << "wrote " << a.clips << " clip(s) under " << a.out << "\n";
    return kOk;
}

int cmd_plot(const PlotArgs &a, std::ostream &out) {
    const auto series = read_metric_series(a.log, a.keys);
    write_file_atomic(a.out, render_svg_plot(series, a.title, "step"));
    out << "wrote " << a.out << "\n";
    return kOk;
}

} // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"Continuous facial motion deblurring toolkit", "cfmd"};
    app.require_subcommand(1);

    SynthesizeArgs syn;
    auto *s = app.add_subcommand("synthesize", "Build a blurred dataset and manifest from sharp clips");
    s->add_option("--clips", syn.clips, "directory with one sub-directory of PNG frames per clip")->required();
    s->add_option("--eyes", syn.eyes, "directory with <clip_id>.eyes.csv sidecars")->required();
    s->add_option("--out", syn.out, "output dataset directory")->required();
    s->add_option("--n-frames", syn.n_frames, "frame counts to average")->delimiter(',');
    s->add_flag("--gamma", syn.gamma, "apply the v^(1/2.2) camera response");

    TrainArgs tr;
    auto *t = app.add_subcommand("train", "Train the conditional GAN");
    t->add_option("--manifest", tr.manifest)->required();
    t->add_option("--config", tr.config, "flat key = value experiment config")->required();
    t->add_option("--out", tr.out, "run directory")->required();
    t->add_option("--resume", tr.resume, "checkpoint to resume from");

    InferArgs inf;
    auto *i = app.add_subcommand("infer", "Restore a sequence of sharp moments from one blurred image");
    i->add_option("--ckpt", inf.ckpt)->required();
    i->add_option("--blur", inf.blur)->required();
    auto *nf = i->add_option("--num-frames", inf.num_frames, "evenly spaced u = k/M, k = 0..M-1");
    auto *ul = i->add_option("--u", inf.u, "explicit control factors")->delimiter(',');
    nf->excludes(ul);
    i->add_option("--out", inf.out)->required();
    i->add_flag("--gif", inf.gif, "also write an animated preview (APNG)");
    i->add_option("--fps", inf.fps, "preview frame rate")->check(CLI::PositiveNumber);

    EvaluateArgs ev;
    auto *e = app.add_subcommand("evaluate", "PSNR/SSIM report grouped by ground-truth frame count");
    e->add_option("--manifest", ev.manifest)->required();
    e->add_option("--ckpt", ev.ckpt);
    e->add_option("--baseline", ev.baseline, "blur | oracle instead of a checkpoint");
    e->add_option("--out", ev.out, "report path (.txt table written alongside)")->required();
    e->add_option("--metrics", ev.metrics)->delimiter(',');
    e->add_option("--metric-cmd", ev.metric_cmds, "NAME=COMMAND external metric plugin");

    DemoArgs demo;
    auto *d = app.add_subcommand("demo-clips", "Write procedural face clips with eye sidecars");
    d->add_option("--out", demo.out)->required();
    d->add_option("--clips", demo.clips);
    d->add_option("--frames", demo.frames);
    d->add_option("--size", demo.size);
    d->add_option("--seed", demo.seed);

    PlotArgs plot;
    auto *p = app.add_subcommand("plot", "Plot a metrics log as SVG");
    p->add_option("--log", plot.log)->required();
    p->add_option("--out", plot.out)->required();
    p->add_option("--keys", plot.keys)->delimiter(',');
    p->add_option("--title", plot.title);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp &) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError &ex) {
        err << "error: " << ex.what() << "\n";
        return kUsage;
    }

    try {
        if (s->parsed())
            return cmd_synthesize(syn, out, err);
        if (t->parsed())
            return cmd_train(tr, out);
        if (i->parsed())
            return cmd_infer(inf, out);
        if (e->parsed())
            return cmd_evaluate(ev, out);
        if (d->parsed())
            return cmd_demo(demo, out);
        if (p->parsed())
            return cmd_plot(plot, out);
    } catch (const ConfigError &ex) {
        err << "error: " << ex.what() << " (key: " << ex.key() << ")\n";
        return kUsage;
    } catch (const InvalidInput &ex) {
        err << "error: " << ex.what() << "\n";
        return kUsage;
    } catch (const std::exception &ex) {
        err << "error: " << ex.what() << "\n";
        return kRuntime;
    }
    return kUsage;
}

} // namespace cfmd
