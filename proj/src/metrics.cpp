#include "cfmd/metrics.hpp"

#include <cmath>
#include <vector>

#include "cfmd/error.hpp"

namespace cfmd {

namespace {

void check_pair(const Image &a, const Image &b, const char *what) {
    if (!a.defined() || !b.defined() || a.sizes() != b.sizes())
        throw InvalidInput(std::string(what) + ": image shapes differ");
}

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;

std::vector<double> gaussian_taps() {
    std::vector<double> g(kWindow);
    double sum = 0;
    for (int i = 0; i < kWindow; ++i) {
        const double d = i - kWindow / 2;
        g[static_cast<size_t>(i)] = std::exp(-d * d / (2 * kSigma * kSigma));
        sum += g[static_cast<size_t>(i)];
    }
    for (auto &v : g)
        v /= sum;
    return g;
}

// Separable valid-mode filtering of an h x w plane.
std::vector<double> filter_valid(const std::vector<double> &src, int64_t h, int64_t w, const std::vector<double> &g) {
    const int64_t oh = h - kWindow + 1, ow = w - kWindow + 1;
    std::vector<double> tmp(static_cast<size_t>(h * ow));
    for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < ow; ++x) {
            double acc = 0;
            for (int k = 0; k < kWindow; ++k)
                acc += g[static_cast<size_t>(k)] * src[static_cast<size_t>(y * w + x + k)];
            tmp[static_cast<size_t>(y * ow + x)] = acc;
        }
    std::vector<double> out(static_cast<size_t>(oh * ow));
    for (int64_t y = 0; y < oh; ++y)
        for (int64_t x = 0; x < ow; ++x) {
            double acc = 0;
            for (int k = 0; k < kWindow; ++k)
                acc += g[static_cast<size_t>(k)] * tmp[static_cast<size_t>((y + k) * ow + x)];
            out[static_cast<size_t>(y * ow + x)] = acc;
        }
    return out;
}

std::vector<double> luma(const Image &img) {
    auto l = img.to(torch::kFloat64).mean(0).contiguous();
    const double *p = l.data_ptr<double>();
    return {p, p + l.numel()};
}

} // namespace

double mse(const Image &a, const Image &b) {
    check_pair(a, b, "mse");
    return (a.to(torch::kFloat64) - b.to(torch::kFloat64)).pow(2).mean().item<double>();
}

double psnr(const Image &a, const Image &b, double max_val) {
    check_pair(a, b, "psnr");
    const double e = mse(a, b);
    if (e == 0.0)
        return kInfinitePsnr;
    return 10.0 * std::log10(max_val * max_val / e);
}

double ssim(const Image &a, const Image &b) {
    check_pair(a, b, "ssim");
    if (a.dim() != 3)
        throw InvalidInput("ssim: expected [C,H,W] images");
    const int64_t h = a.size(1), w = a.size(2);
    if (h < kWindow || w < kWindow)
        throw InvalidInput("ssim: images smaller than the 11x11 window");
    static const auto g = gaussian_taps();
    const auto x = luma(a), y = luma(b);
    std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(x, h, w, g), my = filter_valid(y, h, w, g);
    const auto sxx = filter_valid(xx, h, w, g), syy = filter_valid(yy, h, w, g), sxy = filter_valid(xy, h, w, g);
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    double total = 0;
    for (size_t i = 0; i < mx.size(); ++i) {
        const double vx = sxx[i] - mx[i] * mx[i], vy = syy[i] - my[i] * my[i], cov = sxy[i] - mx[i] * my[i];
        total += ((2 * mx[i] * my[i] + c1) * (2 * cov + c2)) /
                 ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    return total / static_cast<double>(mx.size());
}

} // namespace cfmd
