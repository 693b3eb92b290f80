#pragma once

#include <span>
#include <string>
#include <vector>

#include "cfmd/image_io.hpp"

namespace cfmd {

// Left-eye position in integer pixels (column x, row y).
struct EyePosition {
    int x = 0;
    int y = 0;
    friend bool operator==(const EyePosition &, const EyePosition &) = default;
};

EyePosition quantize_eye(double x, double y);

// Sharp frames of one clip window in capture order.
struct FrameSequence {
    std::vector<Image> frames;
    std::vector<EyePosition> eye_positions;
    std::string clip_id;
    std::vector<int> original_indices; // 1-based temporal indices

    size_t size() const { return frames.size(); }

    // Throws InvalidInput. `training_window` additionally enforces 5 <= N <= 13.
    void validate(bool training_window = false) const;
};

// Frames in facial-motion order with their control factors.
struct ReorderedSequence {
    std::vector<Image> frames;
    std::vector<double> control_factors;
    std::vector<int> permutation; // reordered position -> original index
};

constexpr int kMinWindow = 5;
constexpr int kMaxWindow = 13;

// u = (rank - 1) / N with rank 1-based.
double control_factor(int rank, int n);

// Order by left-eye x, then y, then temporal index. Returns positions into the inputs.
std::vector<size_t> fmr_order(std::span<const EyePosition> eyes, std::span<const int> original_indices);

ReorderedSequence fmr_reorder(const FrameSequence &seq);

} // namespace cfmd
