#include "cfmd/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cfmd/error.hpp"

namespace cfmd {

namespace fs = std::filesystem;
using nlohmann::json;

std::map<int, size_t> DatasetManifest::counts_by_n() const {
    std::map<int, size_t> counts;
    for (const auto &r : records)
        ++counts[r.n_frames];
    return counts;
}

void write_manifest(const fs::path &path, const DatasetManifest &manifest) {
    std::string out;
    for (const auto &r : manifest.records) {
        json j;
        j["schema_version"] = manifest.schema_version;
        j["blur_path"] = r.blur_path;
        j["gt_paths"] = r.gt_paths;
        j["control_factors"] = r.control_factors;
        j["clip_id"] = r.clip_id;
        j["n_frames"] = r.n_frames;
        out += j.dump();
        out += '\n';
    }
    write_file_atomic(path, out);
}

DatasetManifest read_manifest(const fs::path &path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open manifest " + path.string());
    DatasetManifest m;
    m.root = path.parent_path();
    std::string line;
    std::vector<std::string> missing;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception &e) {
            throw InvalidInput(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        try {
            const int version = j.at("schema_version").get<int>();
            if (version != DatasetManifest::kSchemaVersion)
                throw InvalidInput(path.string() + ":" + std::to_string(line_no) + ": unsupported schema_version " +
                                   std::to_string(version));
            ManifestRecord r;
            r.blur_path = j.at("blur_path").get<std::string>();
            r.gt_paths = j.at("gt_paths").get<std::vector<std::string>>();
            r.control_factors = j.at("control_factors").get<std::vector<double>>();
            r.clip_id = j.at("clip_id").get<std::string>();
            r.n_frames = j.at("n_frames").get<int>();
            if (r.gt_paths.size() != static_cast<size_t>(r.n_frames) ||
                r.control_factors.size() != static_cast<size_t>(r.n_frames))
                throw InvalidInput(path.string() + ":" + std::to_string(line_no) +
                                   ": gt_paths/control_factors length differs from n_frames");
            if (!fs::exists(m.resolve(r.blur_path)))
                missing.push_back(m.resolve(r.blur_path).string());
            for (const auto &g : r.gt_paths)
                if (!fs::exists(m.resolve(g)))
                    missing.push_back(m.resolve(g).string());
            m.records.push_back(std::move(r));
        } catch (const json::exception &e) {
            throw InvalidInput(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!missing.empty()) {
        std::string msg = "manifest references missing files:";
        for (const auto &p : missing)
            msg += "\n  " + p;
        throw IoError(msg);
    }
    return m;
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

template <class T> bool parse_number(std::string_view s, T &out) {
    s = trim(s);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(static_cast<double>(out));
}

std::string window_name(const std::string &clip_id, int n, size_t w) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "_n%02d_w%03zu", n, w);
    return clip_id + buf;
}

std::string gt_name(int rank, int original) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "r%02d_t%02d.png", rank, original);
    return buf;
}

} // namespace

std::vector<SidecarRow> read_eye_sidecar(const fs::path &path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open eye sidecar " + path.string());
    std::vector<SidecarRow> rows;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        std::vector<std::string_view> fields;
        std::string_view rest(line);
        for (size_t pos; (pos = rest.find(',')) != std::string_view::npos; rest.remove_prefix(pos + 1))
            fields.push_back(rest.substr(0, pos));
        fields.push_back(rest);
        SidecarRow row;
        double x = 0, y = 0;
        if (fields.size() != 3 || !parse_number(fields[0], row.frame_index) || !parse_number(fields[1], x) ||
            !parse_number(fields[2], y)) {
            if (line_no == 1 && line.find("frame_index") != std::string::npos)
                continue;
            throw InvalidInput(path.string() + ":" + std::to_string(line_no) + ": expected frame_index,x,y");
        }
        // detectors report sub-pixel landmarks
        row.eye = quantize_eye(x, y);
        rows.push_back(row);
    }
    return rows;
}

void write_eye_sidecar(const fs::path &path, std::span<const EyePosition> eyes) {
    std::string out = "frame_index,x,y\n";
    for (size_t i = 0; i < eyes.size(); ++i)
        out += std::to_string(i + 1) + "," + std::to_string(eyes[i].x) + "," + std::to_string(eyes[i].y) + "\n";
    write_file_atomic(path, out);
}

FrameSequence load_clip(const fs::path &frames_dir, const fs::path &sidecar, const std::string &clip_id) {
    if (!fs::is_directory(frames_dir))
        throw IoError("clip directory not found: " + frames_dir.string());
    std::vector<fs::path> files;
    for (const auto &entry : fs::directory_iterator(frames_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".png")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    const auto rows = read_eye_sidecar(sidecar);
    std::map<int, EyePosition> by_index;
    for (const auto &r : rows)
        by_index[r.frame_index] = r.eye;

    FrameSequence seq;
    seq.clip_id = clip_id;
    for (size_t i = 0; i < files.size(); ++i) {
        const int idx = static_cast<int>(i) + 1;
        auto it = by_index.find(idx);
        if (it == by_index.end())
            throw InvalidInput(sidecar.string() + ": no eye position for frame " + std::to_string(idx));
        seq.frames.push_back(read_png(files[i]));
        seq.eye_positions.push_back(it->second);
        seq.original_indices.push_back(idx);
    }
    if (!seq.frames.empty())
        seq.validate();
    return seq;
}

DatasetBuild build_dataset(std::span<const FrameSequence> clips, std::span<const int> n_frames_choices,
                           const fs::path &out_dir, const CameraResponse &response) {
    if (n_frames_choices.empty())
        throw InvalidInput("build_dataset: no frame counts requested");
    for (int n : n_frames_choices)
        if (n < kMinWindow || n > kMaxWindow)
            throw InvalidInput("build_dataset: frame count " + std::to_string(n) + " outside 5..13");
    const std::set<int> choices(n_frames_choices.begin(), n_frames_choices.end());
    const int min_n = *choices.begin();

    std::error_code ec;
    fs::create_directories(out_dir / "blur", ec);
    if (!ec)
        fs::create_directories(out_dir / "gt", ec);
    if (ec)
        throw IoError("cannot create output directory " + out_dir.string() + ": " + ec.message());

    DatasetBuild build;
    build.manifest.root = out_dir;
    for (const auto &clip : clips) {
        if (static_cast<int>(clip.size()) < min_n) {
            build.warnings.push_back("clip " + clip.clip_id + " has " + std::to_string(clip.size()) +
                                     " frames, fewer than " + std::to_string(min_n) + "; skipped");
            continue;
        }
        clip.validate();
        for (int n : choices) {
            const size_t windows = clip.size() / static_cast<size_t>(n);
            if (windows == 0) {
                build.warnings.push_back("clip " + clip.clip_id + " too short for N=" + std::to_string(n));
                continue;
            }
            for (size_t w = 0; w < windows; ++w) {
                FrameSequence window;
                window.clip_id = clip.clip_id;
                for (int k = 0; k < n; ++k) {
                    const size_t src = w * static_cast<size_t>(n) + static_cast<size_t>(k);
                    window.frames.push_back(clip.frames[src]);
                    window.eye_positions.push_back(clip.eye_positions[src]);
                    window.original_indices.push_back(k + 1);
                }
                const auto reordered = fmr_reorder(window);
                const auto blur = synthesize_blur(window, response);

                const std::string name = window_name(clip.clip_id, n, w);
                ManifestRecord rec;
                rec.clip_id = clip.clip_id;
                rec.n_frames = n;
                rec.blur_path = "blur/" + name + ".png";
                write_png(out_dir / rec.blur_path, blur);
                fs::create_directories(out_dir / "gt" / name, ec);
                if (ec)
                    throw IoError("cannot create " + (out_dir / "gt" / name).string() + ": " + ec.message());
                for (int rank = 1; rank <= n; ++rank) {
                    const auto r = static_cast<size_t>(rank - 1);
                    std::string rel = "gt/" + name + "/" + gt_name(rank, reordered.permutation[r]);
                    write_png(out_dir / rel, reordered.frames[r]);
                    rec.gt_paths.push_back(std::move(rel));
                    rec.control_factors.push_back(reordered.control_factors[r]);
                }
                build.manifest.records.push_back(std::move(rec));
            }
        }
    }
    write_manifest(out_dir / "manifest.jsonl", build.manifest);
    return build;
}

BlurSample load_sample(const DatasetManifest &manifest, size_t index) {
    if (index >= manifest.records.size())
        throw InvalidInput("load_sample: record index out of range");
    const auto &rec = manifest.records[index];
    BlurSample s;
    s.blur = read_png(manifest.resolve(rec.blur_path));
    s.clip_id = rec.clip_id;
    s.n_frames = rec.n_frames;
    s.gt_frames.control_factors = rec.control_factors;
    bool have_permutation = true;
    for (const auto &g : rec.gt_paths) {
        s.gt_frames.frames.push_back(read_png(manifest.resolve(g)));
        int rank = 0, original = 0;
        const std::string stem = fs::path(g).stem().string();
        if (have_permutation && std::sscanf(stem.c_str(), "r%d_t%d", &rank, &original) == 2)
            s.gt_frames.permutation.push_back(original);
        else
            have_permutation = false;
    }
    if (!have_permutation)
        s.gt_frames.permutation.clear();
    return s;
}

} // namespace cfmd
