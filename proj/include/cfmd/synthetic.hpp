#pragma once

#include <cstdint>
#include <filesystem>

#include "cfmd/fmr.hpp"

namespace cfmd {

// Procedural stand-in for a face video clip: a cartoon face drifting over a textured
// background, with the left-eye centre reported per frame.
struct SyntheticClipOptions {
    int64_t height = 128;
    int64_t width = 128;
    int n_frames = 14;
    double max_speed = 2.5; // pixels per frame
    uint64_t seed = 0;
};

FrameSequence make_synthetic_clip(const SyntheticClipOptions &opts, const std::string &clip_id);

// Writes frames to `clips_dir/<clip_id>/NNNN.png` and `eyes_dir/<clip_id>.eyes.csv`.
void write_clip(const FrameSequence &clip, const std::filesystem::path &clips_dir,
                const std::filesystem::path &eyes_dir);

} // namespace cfmd
