#include "cfmd/image_io.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <sstream>

#include <png.h>
#include <zlib.h>

#include "cfmd/error.hpp"

namespace cfmd {

namespace fs = std::filesystem;

Image make_image(int64_t height, int64_t width, float value) {
    return torch::full({3, height, width}, value, torch::kFloat32);
}

void check_image(const Image &img, const char *what) {
    if (!img.defined() || img.dim() != 3 || img.size(0) != 3)
        throw InvalidInput(std::string(what) + ": expected a [3,H,W] image");
    if (img.scalar_type() != torch::kFloat32)
        throw InvalidInput(std::string(what) + ": expected float32 pixels");
}

Image quantize8(const Image &img) {
    return (img.clamp(0.f, 1.f) * 255.f).round() / 255.f;
}

Image read_png(const fs::path &path) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
        throw IoError("cannot read PNG " + path.string() + ": " + image.message);
    image.format = PNG_FORMAT_RGB;
    std::vector<uint8_t> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        png_image_free(&image);
        throw IoError("cannot decode PNG " + path.string() + ": " + image.message);
    }
    const int64_t h = image.height, w = image.width;
    auto hwc = torch::from_blob(buffer.data(), {h, w, 3}, torch::kUInt8);
    return hwc.permute({2, 0, 1}).to(torch::kFloat32).div(255.f).contiguous();
}

namespace {

void put_u32(std::string &out, uint32_t v) {
    out.push_back(static_cast<char>((v >> 24) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>(v & 0xff));
}

void put_u16(std::string &out, uint16_t v) {
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>(v & 0xff));
}

void put_chunk(std::string &out, const char type[4], const std::string &data) {
    put_u32(out, static_cast<uint32_t>(data.size()));
    std::string body(type, 4);
    body += data;
    uLong crc = crc32(0L, reinterpret_cast<const Bytef *>(body.data()), static_cast<uInt>(body.size()));
    out += body;
    put_u32(out, static_cast<uint32_t>(crc));
}

// Filter type 0 scanlines, deflated.
std::string encode_scanlines(const Image &img) {
    check_image(img, "png encode");
    const int64_t h = img.size(1), w = img.size(2);
    auto bytes = (img.clamp(0.f, 1.f) * 255.f).round().to(torch::kUInt8).permute({1, 2, 0}).contiguous();
    const uint8_t *px = bytes.data_ptr<uint8_t>();
    std::string raw;
    raw.reserve(static_cast<size_t>(h * (w * 3 + 1)));
    for (int64_t y = 0; y < h; ++y) {
        raw.push_back('\0');
        raw.append(reinterpret_cast<const char *>(px + y * w * 3), static_cast<size_t>(w * 3));
    }
    uLongf cap = compressBound(static_cast<uLong>(raw.size()));
    std::string packed(cap, '\0');
    if (compress2(reinterpret_cast<Bytef *>(packed.data()), &cap, reinterpret_cast<const Bytef *>(raw.data()),
                  static_cast<uLong>(raw.size()), 6) != Z_OK)
        throw IoError("zlib compression failed");
    packed.resize(cap);
    return packed;
}

std::string ihdr(int64_t w, int64_t h) {
    std::string d;
    put_u32(d, static_cast<uint32_t>(w));
    put_u32(d, static_cast<uint32_t>(h));
    d += std::string{8, 2, 0, 0, 0}; // 8-bit, truecolor, deflate, adaptive filter, no interlace
    return d;
}

const std::string kSignature("\x89PNG\r\n\x1a\n", 8);

} // namespace

void write_file_atomic(const fs::path &path, const std::string &bytes) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f)
            throw IoError("cannot open " + tmp.string() + " for writing");
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!f)
            throw IoError("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec)
        throw IoError("cannot rename " + tmp.string() + " -> " + path.string() + ": " + ec.message());
}

void write_png(const fs::path &path, const Image &img) {
    check_image(img, "write_png");
    std::string out = kSignature;
    put_chunk(out, "IHDR", ihdr(img.size(2), img.size(1)));
    put_chunk(out, "IDAT", encode_scanlines(img));
    put_chunk(out, "IEND", "");
    write_file_atomic(path, out);
}

void write_apng(const fs::path &path, const std::vector<Image> &frames, int fps) {
    if (frames.empty())
        throw InvalidInput("write_apng: no frames");
    if (fps <= 0)
        throw InvalidInput("write_apng: fps must be positive");
    const int64_t h = frames.front().size(1), w = frames.front().size(2);
    std::string out = kSignature;
    put_chunk(out, "IHDR", ihdr(w, h));
    std::string actl;
    put_u32(actl, static_cast<uint32_t>(frames.size()));
    put_u32(actl, 0); // loop forever
    put_chunk(out, "acTL", actl);

    uint32_t seq = 0;
    for (size_t i = 0; i < frames.size(); ++i) {
        check_image(frames[i], "write_apng");
        if (frames[i].size(1) != h || frames[i].size(2) != w)
            throw InvalidInput("write_apng: frame sizes differ");
        std::string fctl;
        put_u32(fctl, seq++);
        put_u32(fctl, static_cast<uint32_t>(w));
        put_u32(fctl, static_cast<uint32_t>(h));
        put_u32(fctl, 0);
        put_u32(fctl, 0);
        put_u16(fctl, 1);
        put_u16(fctl, static_cast<uint16_t>(fps));
        fctl.push_back('\0'); // dispose: none
        fctl.push_back('\0'); // blend: source
        put_chunk(out, "fcTL", fctl);
        std::string data = encode_scanlines(frames[i]);
        if (i == 0) {
            put_chunk(out, "IDAT", data);
        } else {
            std::string fdat;
            put_u32(fdat, seq++);
            fdat += data;
            put_chunk(out, "fdAT", fdat);
        }
    }
    put_chunk(out, "IEND", "");
    write_file_atomic(path, out);
}

} // namespace cfmd
