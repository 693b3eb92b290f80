#include "cfmd/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "cfmd/dataset.hpp"
#include "cfmd/error.hpp"

namespace cfmd {

namespace fs = std::filesystem;

namespace {

struct Rgb {
    float r, g, b;
};

// Anti-aliased ellipse coverage in [0,1].
float ellipse_cover(double px, double py, double cx, double cy, double ax, double ay) {
    const double dx = (px - cx) / ax, dy = (py - cy) / ay;
    const double sd = (std::sqrt(dx * dx + dy * dy) - 1.0) * std::min(ax, ay);
    return static_cast<float>(std::clamp(0.5 - sd, 0.0, 1.0));
}

void blend(Rgb &dst, const Rgb &src, float a) {
    dst.r += (src.r - dst.r) * a;
    dst.g += (src.g - dst.g) * a;
    dst.b += (src.b - dst.b) * a;
}

struct FaceStyle {
    Rgb skin, hair, iris, lips;
    double rx, ry; // face radii as a fraction of the frame
    double phase_x, phase_y, freq;
};

Image render(int64_t h, int64_t w, const FaceStyle &st, double cx, double cy) {
    std::vector<float> buf(static_cast<size_t>(3 * h * w));
    const double W = static_cast<double>(w), H = static_cast<double>(h);
    const double ax = st.rx * W, ay = st.ry * H;
    const double eye_dx = 0.38 * ax, eye_dy = -0.22 * ay;
    for (int64_t y = 0; y < h; ++y) {
        for (int64_t x = 0; x < w; ++x) {
            const double px = static_cast<double>(x) + 0.5, py = static_cast<double>(y) + 0.5;
            const double t = std::sin(st.freq * px + st.phase_x) * std::cos(0.7 * st.freq * py + st.phase_y);
            Rgb c{static_cast<float>(0.25 + 0.35 * px / W + 0.08 * t), static_cast<float>(0.35 + 0.1 * t),
                  static_cast<float>(0.55 - 0.25 * py / H + 0.08 * t)};
            blend(c, st.hair, ellipse_cover(px, py, cx, cy - 0.18 * ay, ax * 1.08, ay * 0.95));
            blend(c, st.skin, ellipse_cover(px, py, cx, cy + 0.05 * ay, ax, ay * 0.92));
            for (int side : {-1, 1}) {
                const double ex = cx + side * eye_dx, ey = cy + eye_dy;
                blend(c, {0.95f, 0.95f, 0.93f}, ellipse_cover(px, py, ex, ey, 0.2 * ax, 0.1 * ay));
                blend(c, st.iris, ellipse_cover(px, py, ex, ey, 0.08 * ax, 0.08 * ay));
                blend(c, {0.05f, 0.04f, 0.04f}, ellipse_cover(px, py, ex, ey, 0.035 * ax, 0.035 * ay));
                blend(c, st.hair, ellipse_cover(px, py, ex, ey - 0.17 * ay, 0.22 * ax, 0.03 * ay));
            }
            blend(c, {st.skin.r * 0.8f, st.skin.g * 0.72f, st.skin.b * 0.7f},
                  ellipse_cover(px, py, cx, cy + 0.12 * ay, 0.08 * ax, 0.16 * ay));
            blend(c, st.lips, ellipse_cover(px, py, cx, cy + 0.48 * ay, 0.34 * ax, 0.07 * ay));
            const auto idx = static_cast<size_t>(y * w + x);
            buf[idx] = std::clamp(c.r, 0.f, 1.f);
            buf[static_cast<size_t>(h * w) + idx] = std::clamp(c.g, 0.f, 1.f);
            buf[static_cast<size_t>(2 * h * w) + idx] = std::clamp(c.b, 0.f, 1.f);
        }
    }
    return torch::from_blob(buf.data(), {3, h, w}, torch::kFloat32).clone();
}

} // namespace

FrameSequence make_synthetic_clip(const SyntheticClipOptions &opts, const std::string &clip_id) {
    if (opts.height < 16 || opts.width < 16 || opts.n_frames < 1)
        throw InvalidInput("synthetic clip: frame too small or no frames");
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    FaceStyle st;
    st.skin = {static_cast<float>(0.75 + 0.2 * unit(rng)), static_cast<float>(0.55 + 0.15 * unit(rng)),
               static_cast<float>(0.4 + 0.15 * unit(rng))};
    st.hair = {static_cast<float>(0.1 + 0.3 * unit(rng)), static_cast<float>(0.07 + 0.15 * unit(rng)),
               static_cast<float>(0.05 + 0.1 * unit(rng))};
    st.iris = {static_cast<float>(0.1 + 0.3 * unit(rng)), static_cast<float>(0.2 + 0.4 * unit(rng)),
               static_cast<float>(0.2 + 0.5 * unit(rng))};
    st.lips = {static_cast<float>(0.6 + 0.2 * unit(rng)), 0.2f, 0.25f};
    st.rx = 0.26 + 0.04 * unit(rng);
    st.ry = 0.33 + 0.04 * unit(rng);
    st.phase_x = 6.28 * unit(rng);
    st.phase_y = 6.28 * unit(rng);
    st.freq = 0.15 + 0.2 * unit(rng);

    const double W = static_cast<double>(opts.width), H = static_cast<double>(opts.height);
    const double angle = 6.283185307179586 * unit(rng);
    const double speed = opts.max_speed * (0.6 + 0.4 * unit(rng));
    double vx = speed * std::cos(angle), vy = speed * std::sin(angle);
    double cx = W * (0.45 + 0.1 * unit(rng)), cy = H * (0.47 + 0.06 * unit(rng));
    const double ax = st.rx * W, ay = st.ry * H;

    FrameSequence seq;
    seq.clip_id = clip_id;
    std::normal_distribution<double> jitter(0.0, 0.25 * opts.max_speed);
    for (int i = 0; i < opts.n_frames; ++i) {
        seq.frames.push_back(render(opts.height, opts.width, st, cx, cy));
        const double ex = std::clamp(cx - 0.38 * ax, 0.0, W - 1.0);
        const double ey = std::clamp(cy - 0.22 * ay, 0.0, H - 1.0);
        seq.eye_positions.push_back(quantize_eye(ex, ey));
        seq.original_indices.push_back(i + 1);
        // Drift with jitter; bounce off a margin so the face stays in frame.
        cx += vx + jitter(rng);
        cy += vy + jitter(rng);
        if (cx < 0.35 * W || cx > 0.65 * W)
            vx = -vx;
        if (cy < 0.4 * H || cy > 0.6 * H)
            vy = -vy;
    }
    return seq;
}

void write_clip(const FrameSequence &clip, const fs::path &clips_dir, const fs::path &eyes_dir) {
    std::error_code ec;
    fs::create_directories(clips_dir / clip.clip_id, ec);
    if (!ec)
        fs::create_directories(eyes_dir, ec);
    if (ec)
        throw IoError("cannot create clip directories: " + ec.message());
    for (size_t i = 0; i < clip.frames.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "%04zu.png", i + 1);
        write_png(clips_dir / clip.clip_id / name, clip.frames[i]);
    }
    write_eye_sidecar(eyes_dir / (clip.clip_id + ".eyes.csv"), clip.eye_positions);
}

} // namespace cfmd
