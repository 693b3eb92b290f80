#include "cfmd/fmr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "cfmd/error.hpp"

namespace cfmd {

EyePosition quantize_eye(double x, double y) {
    return {static_cast<int>(std::lround(x)), static_cast<int>(std::lround(y))};
}

void FrameSequence::validate(bool training_window) const {
    const size_t n = frames.size();
    if (n == 0)
        throw InvalidInput("frame sequence is empty");
    if (eye_positions.size() != n || original_indices.size() != n)
        throw InvalidInput("frame sequence lists differ in length: frames=" + std::to_string(n) +
                           " eyes=" + std::to_string(eye_positions.size()) +
                           " indices=" + std::to_string(original_indices.size()));
    if (training_window && (n < kMinWindow || n > kMaxWindow))
        throw InvalidInput("training window must hold 5..13 frames, got " + std::to_string(n));
    check_image(frames[0], "frame sequence");
    const int64_t h = frames[0].size(1), w = frames[0].size(2);
    for (size_t i = 0; i < n; ++i) {
        check_image(frames[i], "frame sequence");
        if (frames[i].size(1) != h || frames[i].size(2) != w)
            throw InvalidInput("frames differ in size within clip " + clip_id);
        const auto &e = eye_positions[i];
        if (e.x < 0 || e.y < 0 || e.x >= w || e.y >= h)
            throw InvalidInput("eye position outside frame " + std::to_string(i + 1) + " of clip " + clip_id);
    }
    std::vector<int> sorted = original_indices;
    std::sort(sorted.begin(), sorted.end());
    for (size_t i = 0; i < n; ++i)
        if (sorted[i] != static_cast<int>(i) + 1)
            throw InvalidInput("original indices must be a permutation of 1..N");
}

double control_factor(int rank, int n) {
    if (n <= 0 || rank < 1 || rank > n)
        throw InvalidInput("control_factor: rank must lie in 1..N");
    return static_cast<double>(rank - 1) / static_cast<double>(n);
}

std::vector<size_t> fmr_order(std::span<const EyePosition> eyes, std::span<const int> original_indices) {
    if (eyes.empty())
        throw InvalidInput("fmr: empty sequence");
    if (eyes.size() != original_indices.size())
        throw InvalidInput("fmr: eye and index lists differ in length");
    std::vector<size_t> order(eyes.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return std::tie(eyes[a].x, eyes[a].y, original_indices[a]) <
               std::tie(eyes[b].x, eyes[b].y, original_indices[b]);
    });
    return order;
}

ReorderedSequence fmr_reorder(const FrameSequence &seq) {
    if (seq.frames.empty() && seq.eye_positions.empty())
        throw InvalidInput("fmr: empty sequence");
    seq.validate();
    const auto order = fmr_order(seq.eye_positions, seq.original_indices);
    const int n = static_cast<int>(order.size());
    ReorderedSequence out;
    out.frames.reserve(order.size());
    for (int rank = 1; rank <= n; ++rank) {
        const size_t src = order[static_cast<size_t>(rank - 1)];
        out.frames.push_back(seq.frames[src]);
        out.permutation.push_back(seq.original_indices[src]);
        out.control_factors.push_back(control_factor(rank, n));
    }
    return out;
}

} // namespace cfmd
