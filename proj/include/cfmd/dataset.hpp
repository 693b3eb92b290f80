#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cfmd/blur.hpp"
#include "cfmd/fmr.hpp"

namespace cfmd {

struct BlurSample {
    Image blur;
    ReorderedSequence gt_frames;
    std::string clip_id;
    int n_frames = 0;
};

struct ManifestRecord {
    std::string blur_path;             // relative to the manifest directory
    std::vector<std::string> gt_paths; // ordered by control factor
    std::vector<double> control_factors;
    std::string clip_id;
    int n_frames = 0;

    friend bool operator==(const ManifestRecord &, const ManifestRecord &) = default;
};

struct DatasetManifest {
    static constexpr int kSchemaVersion = 1;

    int schema_version = kSchemaVersion;
    std::vector<ManifestRecord> records;
    std::filesystem::path root; // directory that record paths are relative to

    std::map<int, size_t> counts_by_n() const;
    std::filesystem::path resolve(const std::string &relative) const { return root / relative; }
};

// One JSON object per line. Existence of referenced files is checked on read.
void write_manifest(const std::filesystem::path &path, const DatasetManifest &manifest);
DatasetManifest read_manifest(const std::filesystem::path &path);

struct SidecarRow {
    int frame_index = 0; // 1-based, position of the frame in sorted file order
    EyePosition eye;
};

// `<clip_id>.eyes.csv`: `frame_index,x,y` per line; a header line is tolerated.
std::vector<SidecarRow> read_eye_sidecar(const std::filesystem::path &path);
void write_eye_sidecar(const std::filesystem::path &path, std::span<const EyePosition> eyes);

// Frames are the `*.png` files in `frames_dir`, sorted by file name.
FrameSequence load_clip(const std::filesystem::path &frames_dir, const std::filesystem::path &sidecar,
                        const std::string &clip_id);

struct DatasetBuild {
    DatasetManifest manifest;
    std::vector<std::string> warnings;
};

// Non-overlapping windows of every requested length over every clip, each reordered,
// blurred and persisted under `out_dir` together with `out_dir/manifest.jsonl`.
DatasetBuild build_dataset(std::span<const FrameSequence> clips, std::span<const int> n_frames_choices,
                           const std::filesystem::path &out_dir, const CameraResponse &response = {});

BlurSample load_sample(const DatasetManifest &manifest, size_t index);

} // namespace cfmd
