#include "splatstream/raster.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace splatstream {

double max_abs_difference(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height) {
        throw std::invalid_argument("max_abs_difference: image sizes differ");
    }
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        m = std::max(m, double(std::abs(a.data[i] - b.data[i])));
    }
    return m;
}

namespace {

/// Per-splat data in the form the pixel loop consumes.
struct Prepared {
    float mx, my;
    float ca, cb, cc;  // conic (inverse covariance)
    float r, g, b;
    float opacity;
    float depth;
    float cutoff;  // powers below this certainly give alpha < alpha_min
    int x0, x1, y0, y1;  // inclusive pixel bounds of the 3-sigma box
    bool valid;
};

Prepared prepare(const Splat& s, const BlendConfig& config) {
    Prepared p{};
    const double det = s.cov.determinant();
    if (!(det >= config.singular_determinant) || !s.mean.allFinite()) {
        p.valid = false;
        return p;
    }
    const double inv = 1.0 / det;
    p.ca = float(s.cov(1, 1) * inv);
    p.cb = float(-s.cov(0, 1) * inv);
    p.cc = float(s.cov(0, 0) * inv);
    const double mid = 0.5 * (s.cov(0, 0) + s.cov(1, 1));
    const double lambda = mid + std::sqrt(std::max(0.1, mid * mid - det));
    const double radius = std::ceil(3.0 * std::sqrt(lambda));
    p.mx = float(s.mean.x());
    p.my = float(s.mean.y());
    p.x0 = int(std::floor(s.mean.x() - radius));
    p.x1 = int(std::ceil(s.mean.x() + radius));
    p.y0 = int(std::floor(s.mean.y() - radius));
    p.y1 = int(std::ceil(s.mean.y() + radius));
    p.r = s.color.x();
    p.g = s.color.y();
    p.b = s.color.z();
    p.opacity = s.opacity;
    p.cutoff = float(std::log(config.alpha_min / std::max(double(s.opacity), 1e-30))) - 1e-3f;
    p.depth = float(s.depth);
    p.valid = true;
    return p;
}

std::vector<std::uint32_t> depth_order(std::span<const Splat> splats, const std::vector<Prepared>& prepared) {
    struct Key {
        double depth;
        std::uint32_t source;
        std::uint32_t index;
    };
    std::vector<Key> keys;
    keys.reserve(splats.size());
    for (std::uint32_t i = 0; i < splats.size(); ++i) {
        if (prepared[i].valid) {
            keys.push_back({splats[i].depth, splats[i].source_index, i});
        }
    }
    std::sort(keys.begin(), keys.end(), [](const Key& a, const Key& b) {
        if (a.depth != b.depth) return a.depth < b.depth;
        return a.source < b.source;
    });
    std::vector<std::uint32_t> order(keys.size());
    for (std::size_t k = 0; k < keys.size(); ++k) {
        order[k] = keys[k].index;
    }
    return order;
}

struct PixelAccumulator {
    float r = 0, g = 0, b = 0, d = 0;
    float transmittance = 1.0f;
    bool done = false;
};

/// Composites one splat into one pixel. Returns alpha * T if the splat passed the alpha test, else -1.
inline float composite(PixelAccumulator& acc, const Prepared& p, int x, int y, const BlendConfig& config) {
    if (x < p.x0 || x > p.x1 || y < p.y0 || y > p.y1) {
        return -1.0f;
    }
    const float dx = float(x) - p.mx;
    const float dy = float(y) - p.my;
    const float power = -0.5f * (p.ca * dx * dx + p.cc * dy * dy) - p.cb * dx * dy;
    if (power > 0.0f || power < p.cutoff) {
        return -1.0f;
    }
    const float alpha = std::min(float(config.alpha_max), p.opacity * std::exp(power));
    if (alpha < float(config.alpha_min)) {
        return -1.0f;
    }
    const float w = alpha * acc.transmittance;
    acc.r += p.r * w;
    acc.g += p.g * w;
    acc.b += p.b * w;
    acc.d += p.depth * w;
    acc.transmittance *= 1.0f - alpha;
    if (acc.transmittance < float(config.min_transmittance)) {
        acc.done = true;
    }
    return w;
}

void write_pixel(BlendResult& out, const PixelAccumulator& acc, int x, int y, const BlendConfig& config) {
    const float t = acc.transmittance;
    out.image.at(x, y, 0) = std::clamp(acc.r + t * config.background.x(), 0.0f, 1.0f);
    out.image.at(x, y, 1) = std::clamp(acc.g + t * config.background.y(), 0.0f, 1.0f);
    out.image.at(x, y, 2) = std::clamp(acc.b + t * config.background.z(), 0.0f, 1.0f);
    if (out.depth) {
        const float covered = 1.0f - t;
        out.depth->data[std::size_t(y) * out.image.width + x] = covered > 0.0f ? acc.d / covered : 0.0f;
    }
}

BlendResult make_result(std::size_t n, int width, int height, const BlendConfig& config) {
    if (width < 1 || height < 1) {
        throw std::invalid_argument("blend: image size must be at least 1x1");
    }
    BlendResult out;
    out.image = Image(width, height);
    if (config.depth) {
        out.depth = DepthMap{width, height, std::vector<float>(std::size_t(width) * height, 0.0f)};
    }
    out.contributed.assign(n, 0);
    return out;
}

}  // namespace

BlendResult blend(std::span<const Splat> splats, int width, int height, const BlendConfig& config) {
    BlendResult out = make_result(splats.size(), width, height, config);
    const auto n = static_cast<std::int64_t>(splats.size());
    std::vector<Prepared> prepared(splats.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        prepared[i] = prepare(splats[i], config);
    }
    const std::vector<std::uint32_t> order = depth_order(splats, prepared);
    out.blended = order.size();
    out.singular = splats.size() - order.size();

    const int tile = std::max(1, config.tile);
    const int tiles_x = (width + tile - 1) / tile;
    const int tiles_y = (height + tile - 1) / tile;
    const std::size_t tile_count = std::size_t(tiles_x) * tiles_y;

    // Bin in depth order so every tile list is already sorted.
    auto tile_range = [&](const Prepared& p, int& tx0, int& tx1, int& ty0, int& ty1) {
        tx0 = std::max(0, p.x0 < 0 ? 0 : p.x0 / tile);
        tx1 = std::min(tiles_x - 1, p.x1 < 0 ? -1 : p.x1 / tile);
        ty0 = std::max(0, p.y0 < 0 ? 0 : p.y0 / tile);
        ty1 = std::min(tiles_y - 1, p.y1 < 0 ? -1 : p.y1 / tile);
    };
    std::vector<std::uint32_t> offsets(tile_count + 1, 0);
    for (std::uint32_t i : order) {
        int tx0, tx1, ty0, ty1;
        tile_range(prepared[i], tx0, tx1, ty0, ty1);
        for (int ty = ty0; ty <= ty1; ++ty) {
            for (int tx = tx0; tx <= tx1; ++tx) {
                ++offsets[std::size_t(ty) * tiles_x + tx + 1];
            }
        }
    }
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
    std::vector<std::uint32_t> entries(offsets.back());
    {
        std::vector<std::uint32_t> cursor(offsets.begin(), offsets.end() - 1);
        for (std::uint32_t i : order) {
            int tx0, tx1, ty0, ty1;
            tile_range(prepared[i], tx0, tx1, ty0, ty1);
            for (int ty = ty0; ty <= ty1; ++ty) {
                for (int tx = tx0; tx <= tx1; ++tx) {
                    entries[cursor[std::size_t(ty) * tiles_x + tx]++] = i;
                }
            }
        }
    }

    const auto tiles = static_cast<std::int64_t>(tile_count);
#pragma omp parallel
    {
        std::vector<PixelAccumulator> accs(std::size_t(tile) * tile);
#pragma omp for schedule(dynamic, 1)
        for (std::int64_t t = 0; t < tiles; ++t) {
            const int x_lo = int(t % tiles_x) * tile;
            const int y_lo = int(t / tiles_x) * tile;
            const int x_hi = std::min(width, x_lo + tile) - 1;
            const int y_hi = std::min(height, y_lo + tile) - 1;
            const int row = x_hi - x_lo + 1;
            int open = row * (y_hi - y_lo + 1);
            std::fill(accs.begin(), accs.end(), PixelAccumulator{});
            // Splat-major inside the tile; every pixel still sees splats in depth order.
            for (std::uint32_t k = offsets[t]; k < offsets[t + 1] && open > 0; ++k) {
                const std::uint32_t i = entries[k];
                const Prepared& p = prepared[i];
                bool hit = false;
                for (int y = std::max(p.y0, y_lo); y <= std::min(p.y1, y_hi); ++y) {
                    for (int x = std::max(p.x0, x_lo); x <= std::min(p.x1, x_hi); ++x) {
                        PixelAccumulator& acc = accs[std::size_t(y - y_lo) * row + (x - x_lo)];
                        if (acc.done) continue;
                        if (composite(acc, p, x, y, config) > float(config.contribution_threshold)) hit = true;
                        if (acc.done) --open;
                    }
                }
                if (hit) {
                    std::atomic_ref<std::uint8_t>(out.contributed[i]).store(1, std::memory_order_relaxed);
                }
            }
            for (int y = y_lo; y <= y_hi; ++y) {
                for (int x = x_lo; x <= x_hi; ++x) {
                    write_pixel(out, accs[std::size_t(y - y_lo) * row + (x - x_lo)], x, y, config);
                }
            }
        }
    }
    return out;
}

namespace reference {

BlendResult blend(std::span<const Splat> splats, int width, int height, const BlendConfig& config) {
    BlendResult out = make_result(splats.size(), width, height, config);
    std::vector<Prepared> prepared;
    prepared.reserve(splats.size());
    for (const Splat& s : splats) {
        prepared.push_back(prepare(s, config));
    }
    const std::vector<std::uint32_t> order = depth_order(splats, prepared);
    out.blended = order.size();
    out.singular = splats.size() - order.size();
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            PixelAccumulator acc;
            for (std::uint32_t i : order) {
                if (acc.done) break;
                if (composite(acc, prepared[i], x, y, config) > float(config.contribution_threshold)) {
                    out.contributed[i] = 1;
                }
            }
            write_pixel(out, acc, x, y, config);
        }
    }
    return out;
}

std::vector<double> transmittance_trace(std::span<const Splat> splats, int x, int y, const BlendConfig& config) {
    std::vector<Prepared> prepared;
    for (const Splat& s : splats) {
        prepared.push_back(prepare(s, config));
    }
    std::vector<double> trace;
    PixelAccumulator acc;
    for (std::uint32_t i : depth_order(splats, prepared)) {
        if (acc.done) break;
        if (composite(acc, prepared[i], x, y, config) >= 0.0f) {
            trace.push_back(acc.transmittance);
        }
    }
    return trace;
}

}  // namespace reference

}  // namespace splatstream
