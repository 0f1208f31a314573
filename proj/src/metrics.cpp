#include "splatstream/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace splatstream {

namespace {

void check_sizes(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height) {
        throw std::invalid_argument("image sizes differ: " + std::to_string(a.width) + "x" + std::to_string(a.height) +
                                    " vs " + std::to_string(b.width) + "x" + std::to_string(b.height));
    }
}

}  // namespace

double psnr(const Image& a, const Image& b) {
    check_sizes(a, b);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = double(a.data[i]) - double(b.data[i]);
        sum += d * d;
    }
    if (sum == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return 10.0 * std::log10(double(a.data.size()) / sum);
}

double ssim(const Image& a, const Image& b, const SsimConfig& config) {
    check_sizes(a, b);
    const int n = config.window;
    if (a.width < n || a.height < n) {
        throw std::invalid_argument("ssim needs images of at least " + std::to_string(n) + "x" + std::to_string(n));
    }
    std::vector<double> g(static_cast<std::size_t>(n));
    double gsum = 0.0;
    for (int k = 0; k < n; ++k) {
        const double x = k - (n - 1) / 2.0;
        g[k] = std::exp(-x * x / (2.0 * config.sigma * config.sigma));
        gsum += g[k];
    }
    for (double& v : g) v /= gsum;

    const double c1 = config.k1 * config.k1;
    const double c2 = config.k2 * config.k2;
    const int w = a.width, h = a.height;
    const int ow = w - n + 1, oh = h - n + 1;
    double total = 0.0;
    // Separable filtering of x, y, x^2, y^2, xy; horizontal pass first, valid region only.
    std::vector<double> rows(std::size_t(5) * h * ow);
    auto row_at = [&](int q, int y, int x) -> double& { return rows[(std::size_t(q) * h + y) * ow + x]; };
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < ow; ++x) {
                double s[5] = {0, 0, 0, 0, 0};
                for (int k = 0; k < n; ++k) {
                    const double u = a.at(x + k, y, c);
                    const double v = b.at(x + k, y, c);
                    s[0] += g[k] * u;
                    s[1] += g[k] * v;
                    s[2] += g[k] * u * u;
                    s[3] += g[k] * v * v;
                    s[4] += g[k] * u * v;
                }
                for (int q = 0; q < 5; ++q) row_at(q, y, x) = s[q];
            }
        }
        double channel = 0.0;
        for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x) {
                double s[5] = {0, 0, 0, 0, 0};
                for (int k = 0; k < n; ++k) {
                    for (int q = 0; q < 5; ++q) s[q] += g[k] * row_at(q, y + k, x);
                }
                const double mx = s[0], my = s[1];
                const double vx = s[2] - mx * mx;
                const double vy = s[3] - my * my;
                const double cxy = s[4] - mx * my;
                channel += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            }
        }
        total += channel / (double(ow) * oh);
    }
    return total / 3.0;
}

}  // namespace splatstream
