#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "cfmd/error.hpp"
#include "cfmd/fmr.hpp"
#include "util.hpp"

using namespace cfmd;

namespace {

// Independent reference: selection sort with an explicit lexicographic comparison.
std::vector<size_t> brute_order(const std::vector<EyePosition> &eyes, const std::vector<int> &idx) {
    std::vector<size_t> remaining(eyes.size());
    std::iota(remaining.begin(), remaining.end(), size_t{0});
    std::vector<size_t> out;
    while (!remaining.empty()) {
        size_t best = 0;
        for (size_t k = 1; k < remaining.size(); ++k) {
            const auto &a = eyes[remaining[k]], &b = eyes[remaining[best]];
            const int ia = idx[remaining[k]], ib = idx[remaining[best]];
            const bool less = a.x != b.x ? a.x < b.x : (a.y != b.y ? a.y < b.y : ia < ib);
            if (less)
                best = k;
        }
        out.push_back(remaining[best]);
        remaining.erase(remaining.begin() + static_cast<long>(best));
    }
    return out;
}

FrameSequence tagged_sequence(const std::vector<EyePosition> &eyes) {
    FrameSequence s;
    s.clip_id = "t";
    for (size_t i = 0; i < eyes.size(); ++i) {
        s.frames.push_back(make_image(32, 32, static_cast<float>(i) / 16.f));
        s.eye_positions.push_back(eyes[i]);
        s.original_indices.push_back(static_cast<int>(i) + 1);
    }
    return s;
}

} // namespace

TEST_SUITE("fmr") {

TEST_CASE("control factor is (rank-1)/N") {
    CHECK(control_factor(1, 7) == 0.0);
    CHECK(control_factor(4, 7) == doctest::Approx(3.0 / 7.0));
    CHECK(control_factor(7, 7) == doctest::Approx(6.0 / 7.0));
    CHECK_THROWS_AS(control_factor(0, 7), InvalidInput);
    CHECK_THROWS_AS(control_factor(8, 7), InvalidInput);
}

TEST_CASE("eye quantization rounds half away from zero") {
    CHECK((quantize_eye(2.5, 3.49) == EyePosition{3, 3}));
    CHECK((quantize_eye(0.49, 7.5) == EyePosition{0, 8}));
}

TEST_CASE("order: x first, then y, then temporal index") {
    std::vector<EyePosition> eyes{{5, 1}, {3, 9}, {3, 2}, {5, 1}, {1, 1}};
    std::vector<int> idx{1, 2, 3, 4, 5};
    const auto order = fmr_order(eyes, idx);
    CHECK((order == std::vector<size_t>{4, 2, 1, 0, 3}));
}

TEST_CASE("temporal index breaks ties even when inputs arrive shuffled") {
    std::vector<EyePosition> eyes(6, EyePosition{2, 2});
    std::vector<int> idx{4, 1, 6, 3, 2, 5};
    const auto order = fmr_order(eyes, idx);
    std::vector<int> got;
    for (auto p : order)
        got.push_back(idx[p]);
    CHECK(got == std::vector<int>{1, 2, 3, 4, 5, 6});
}

TEST_CASE("randomized agreement with brute force and reorder invariants") {
    std::mt19937_64 rng(1234);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = std::uniform_int_distribution<int>(5, 13)(rng);
        const int range = trial % 3 == 0 ? 2 : 31;
        std::uniform_int_distribution<int> coord(0, range);
        std::vector<EyePosition> eyes;
        for (int i = 0; i < n; ++i)
            eyes.push_back({coord(rng), coord(rng)});
        std::vector<int> idx(n);
        std::iota(idx.begin(), idx.end(), 1);
        REQUIRE(fmr_order(eyes, idx) == brute_order(eyes, idx));

        const auto seq = tagged_sequence(eyes);
        const auto r = fmr_reorder(seq);
        REQUIRE(r.frames.size() == static_cast<size_t>(n));
        // permutation of 1..N
        auto perm = r.permutation;
        std::sort(perm.begin(), perm.end());
        std::vector<int> expect(n);
        std::iota(expect.begin(), expect.end(), 1);
        REQUIRE(perm == expect);
        for (int k = 0; k < n; ++k) {
            REQUIRE(r.control_factors[k] == doctest::Approx(static_cast<double>(k) / n));
            // frame carries its original identity
            REQUIRE(torch::equal(r.frames[k], seq.frames[r.permutation[k] - 1]));
            if (k > 0)
                REQUIRE(r.control_factors[k] > r.control_factors[k - 1]);
        }
        REQUIRE(r.control_factors.back() < 1.0);
    }
}

TEST_CASE("reordering an ordered sequence is the identity") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = std::uniform_int_distribution<int>(5, 13)(rng);
        std::uniform_int_distribution<int> coord(0, 4);
        std::vector<EyePosition> eyes;
        for (int i = 0; i < n; ++i)
            eyes.push_back({coord(rng), coord(rng)});
        const auto first = fmr_reorder(tagged_sequence(eyes));
        std::vector<EyePosition> ordered;
        for (int p : first.permutation)
            ordered.push_back(eyes[p - 1]);
        const auto again = fmr_reorder(tagged_sequence(ordered));
        std::vector<int> identity(n);
        std::iota(identity.begin(), identity.end(), 1);
        REQUIRE(again.permutation == identity);
    }
}

TEST_CASE("reorder is deterministic") {
    const auto seq = tagged_sequence({{3, 3}, {1, 1}, {3, 3}, {0, 9}, {2, 2}});
    const auto a = fmr_reorder(seq), b = fmr_reorder(seq);
    CHECK(a.permutation == b.permutation);
    CHECK(a.permutation == std::vector<int>{4, 2, 5, 1, 3});
}

TEST_CASE("validation") {
    auto seq = tagged_sequence({{1, 1}, {2, 2}, {3, 3}, {1, 1}, {2, 2}});
    CHECK_NOTHROW(seq.validate(true));
    auto short_seq = tagged_sequence({{1, 1}, {2, 2}, {3, 3}, {1, 1}});
    CHECK_NOTHROW(short_seq.validate(false));
    CHECK_THROWS_AS(short_seq.validate(true), InvalidInput);
    auto long_seq = tagged_sequence(std::vector<EyePosition>(14, EyePosition{1, 1}));
    CHECK_THROWS_AS(long_seq.validate(true), InvalidInput);

    auto bad = seq;
    bad.eye_positions.pop_back();
    CHECK_THROWS_AS(fmr_reorder(bad), InvalidInput);
    bad = seq;
    bad.eye_positions[0] = {32, 0};
    CHECK_THROWS_AS(bad.validate(), InvalidInput); // outside the 32x32 frame
    bad = seq;
    bad.original_indices[0] = 2;
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
    bad = seq;
    bad.frames[1] = make_image(32, 33);
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
}

}
