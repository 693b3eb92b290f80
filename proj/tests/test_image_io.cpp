#include <doctest.h>

#include <fstream>
#include <iterator>

#include "cfmd/error.hpp"
#include "cfmd/image_io.hpp"
#include "util.hpp"

using namespace cfmd;

namespace {
std::string slurp(const std::filesystem::path &p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}
} // namespace

TEST_SUITE("image_io") {

TEST_CASE("png round trip is exact on the 8-bit grid") {
    testutil::TempDir dir("png");
    const auto img = testutil::rand_image(13, 17, 3);
    write_png(dir / "a.png", img);
    const auto back = read_png(dir / "a.png");
    CHECK(back.sizes() == img.sizes());
    CHECK(torch::equal(back, quantize8(img)));
    // second write of the quantized image yields identical bytes
    write_png(dir / "b.png", back);
    CHECK(slurp(dir / "a.png") == slurp(dir / "b.png"));
}

TEST_CASE("quantize8 is idempotent and clamps") {
    auto img = testutil::rand_image(4, 4, 9) * 1.4 - 0.2;
    const auto q = quantize8(img);
    CHECK(torch::equal(quantize8(q), q));
    CHECK(q.min().item<float>() >= 0.f);
    CHECK(q.max().item<float>() <= 1.f);
}

TEST_CASE("apng carries animation chunks") {
    testutil::TempDir dir("apng");
    std::vector<Image> frames{make_image(8, 8, 0.f), make_image(8, 8, 0.5f), make_image(8, 8, 1.f)};
    write_apng(dir / "p.png", frames, 5);
    const auto bytes = slurp(dir / "p.png");
    CHECK(bytes.find("acTL") != std::string::npos);
    CHECK(bytes.find("fcTL") != std::string::npos);
    CHECK(bytes.find("fdAT") != std::string::npos);
    // a plain decoder sees the first frame
    CHECK(torch::equal(read_png(dir / "p.png"), frames[0]));
    CHECK_THROWS_AS(write_apng(dir / "q.png", {make_image(8, 8), make_image(4, 8)}), InvalidInput);
}

TEST_CASE("errors") {
    testutil::TempDir dir("pngerr");
    CHECK_THROWS_AS(read_png(dir / "missing.png"), IoError);
    write_file_atomic(dir / "junk.png", "not a png");
    CHECK_THROWS_AS(read_png(dir / "junk.png"), IoError);
    CHECK_THROWS_AS(check_image(torch::zeros({4, 4}), "img"), InvalidInput);
    CHECK_FALSE(std::filesystem::exists(dir / "junk.png.tmp"));
}

}
