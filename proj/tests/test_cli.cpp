#include <doctest.h>

#include <fstream>
#include <iterator>
#include <sstream>

#include "cfmd/cli.hpp"
#include "util.hpp"

using namespace cfmd;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path &p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit with 2") {
    CHECK(run({}).code == 2);
    CHECK(run({"bogus"}).code == 2);
    CHECK(run({"infer", "--ckpt", "x"}).code == 2);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("end to end") {
    testutil::TempDir dir("cli");
    const auto d = dir.path().string();
    REQUIRE(run({"demo-clips", "--out", d + "/src", "--clips", "1", "--frames", "10", "--size", "32"}).code == 0);
    // one sidecar missing: warned and skipped
    REQUIRE(run({"demo-clips", "--out", d + "/src2", "--clips", "1", "--frames", "10", "--size", "32"}).code == 0);
    std::filesystem::rename(dir / "src2/clips/clip000", dir / "src/clips/clip999");

    auto bad = run({"synthesize", "--clips", d + "/src/clips", "--eyes", d + "/src/eyes", "--out", d + "/ds",
                    "--n-frames", "4,5"});
    CHECK(bad.code == 2);
    auto syn = run({"synthesize", "--clips", d + "/src/clips", "--eyes", d + "/src/eyes", "--out", d + "/ds",
                    "--n-frames", "5"});
    REQUIRE(syn.code == 0);
    CHECK(syn.err.find("clip999") != std::string::npos);
    CHECK(syn.out.find("# of blurred") != std::string::npos);

    std::ofstream(dir / "cfg.txt") << "base_channels = 4\nn_blocks_per_stage = 1\ndisc_base_channels = 4\n"
                                      "batch_size = 1\ncrop = 16\nepochs = 1\n";
    std::ofstream(dir / "bad.txt") << "colour = blue\n";
    const std::string manifest = d + "/ds/manifest.jsonl";
    auto bt = run({"train", "--manifest", manifest, "--config", d + "/bad.txt", "--out", d + "/run"});
    CHECK(bt.code == 2);
    CHECK(bt.err.find("colour") != std::string::npos);
    REQUIRE(run({"train", "--manifest", manifest, "--config", d + "/cfg.txt", "--out", d + "/run"}).code == 0);
    const std::string ckpt = d + "/run/final.cfmd";

    const std::string blur = d + "/ds/blur/clip000_n05_w000.png";
    CHECK(run({"infer", "--ckpt", ckpt, "--blur", blur, "--u", "0.2,1.5", "--out", d + "/x"}).code == 2);
    CHECK(run({"infer", "--ckpt", ckpt, "--blur", blur, "--u", "0.2", "--num-frames", "3", "--out", d + "/x"}).code ==
          2);
    REQUIRE(run({"infer", "--ckpt", ckpt, "--blur", blur, "--num-frames", "4", "--out", d + "/i1", "--gif"}).code == 0);
    REQUIRE(run({"infer", "--ckpt", ckpt, "--blur", blur, "--num-frames", "4", "--out", d + "/i2", "--gif"}).code == 0);
    for (const char *f : {"frame_000.png", "frame_003.png", "preview.png", "frames.txt"})
        CHECK(slurp(dir / "i1" / f) == slurp(dir / "i2" / f));
    CHECK(slurp(dir / "i1/frames.txt").find("frame_002.png 0.5") != std::string::npos);

    CHECK(run({"evaluate", "--manifest", manifest, "--ckpt", ckpt, "--out", d + "/r.jsonl", "--metrics", "lpips"})
              .code == 2);
    auto ev = run({"evaluate", "--manifest", manifest, "--ckpt", ckpt, "--out", d + "/eval/r.jsonl"});
    REQUIRE(ev.code == 0);
    CHECK(std::filesystem::exists(dir / "eval/r.jsonl"));
    CHECK(std::filesystem::exists(dir / "eval/r.jsonl.txt"));
    const auto first_report = slurp(dir / "eval/r.jsonl");
    REQUIRE(run({"evaluate", "--manifest", manifest, "--ckpt", ckpt, "--out", d + "/eval/r.jsonl"}).code == 0);
    CHECK(slurp(dir / "eval/r.jsonl") == first_report);

    CHECK(run({"plot", "--log", d + "/run/metrics.jsonl", "--out", d + "/loss.svg"}).code == 0);
    CHECK(slurp(dir / "loss.svg").find("<svg") != std::string::npos);

    CHECK(run({"evaluate", "--manifest", d + "/nothing.jsonl", "--baseline", "blur", "--out", d + "/r.jsonl"}).code ==
          1);
}

}
