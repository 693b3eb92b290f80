#pragma once

#include <filesystem>
#include <vector>

#include <torch/torch.h>

namespace cfmd {

// Images are float32 tensors laid out [3, H, W] with values in [0, 1].
using Image = torch::Tensor;

Image make_image(int64_t height, int64_t width, float value = 0.f);
void check_image(const Image &img, const char *what);

// 8-bit RGB PNG. Reading accepts any PNG libpng understands and converts to RGB.
Image read_png(const std::filesystem::path &path);
void write_png(const std::filesystem::path &path, const Image &img);

// Animated PNG (lossless); frames must share one size.
void write_apng(const std::filesystem::path &path, const std::vector<Image> &frames, int fps = 5);

// Round to the 8-bit grid exactly as write_png does.
Image quantize8(const Image &img);

// Writes to `<path>.tmp` and renames over `path`.
void write_file_atomic(const std::filesystem::path &path, const std::string &bytes);

} // namespace cfmd
