#pragma once

#include "splatstream/core.hpp"
#include "splatstream/parallel.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace splatstream {

/// Interleaved RGB float image.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    Image() = default;
    Image(int w, int h, float fill = 0.0f) : width(w), height(h), data(std::size_t(w) * h * 3, fill) {}

    float& at(int x, int y, int c) { return data[(std::size_t(y) * width + x) * 3 + c]; }
    float at(int x, int y, int c) const { return data[(std::size_t(y) * width + x) * 3 + c]; }
};

struct DepthMap {
    int width = 0;
    int height = 0;
    std::vector<float> data;
};

double max_abs_difference(const Image& a, const Image& b);

/// A projected, colored Gaussian ready for compositing.
struct Splat {
    Vec2 mean = Vec2::Zero();
    Mat2 cov = Mat2::Identity();
    double depth = 0.0;
    Eigen::Vector3f color = Eigen::Vector3f::Zero();
    float opacity = 0.5f;
    std::uint32_t source_index = 0;
};

struct BlendConfig {
    int tile = 16;
    double alpha_max = 0.99;
    /// Per-splat alphas below this are skipped at a pixel.
    double alpha_min = 1.0 / 255.0;
    double min_transmittance = 1e-4;
    /// alpha * T above this marks a splat as contributing.
    double contribution_threshold = 1e-4;
    double singular_determinant = 1e-12;
    Eigen::Vector3f background = Eigen::Vector3f::Zero();
    bool depth = true;
};

struct BlendResult {
    Image image;
    std::optional<DepthMap> depth;
    /// Aligned with the input splats.
    Mask contributed;
    std::size_t blended = 0;
    std::size_t singular = 0;
};

/// Front-to-back alpha compositing. Splats are sorted globally by (depth, source_index),
/// binned into tiles by their 3-sigma screen bounds, and tiles are composited in parallel.
BlendResult blend(std::span<const Splat> splats, int width, int height, const BlendConfig& config = {});

namespace reference {

/// Per-pixel scan over every splat in depth order; no tiling, single thread.
BlendResult blend(std::span<const Splat> splats, int width, int height, const BlendConfig& config = {});

/// Transmittance at pixel (x, y) after each splat that passed the alpha test, in blend order.
std::vector<double> transmittance_trace(std::span<const Splat> splats, int x, int y, const BlendConfig& config = {});

}  // namespace reference

}  // namespace splatstream
