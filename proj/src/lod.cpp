#include "splatstream/lod.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <stdexcept>

namespace splatstream {

namespace {

/// splitmix64; small-state generator usable with the standard distributions.
class SplitMix64 {
public:
    using result_type = std::uint64_t;
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type(0); }
    result_type operator()() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

}  // namespace

void validate_lod_config(const LodConfig& c) {
    if (!(c.r >= 0.0) || !(c.p_max >= 0.0 && c.p_max <= 1.0) || !(c.reference_depth > 0.0) ||
        !c.offset_scale.allFinite()) {
        throw std::invalid_argument("invalid LOD config (need r >= 0, 0 <= p_max <= 1, D > 0)");
    }
}

double scale2d(const Mat2& cov2d) {
    if (!cov2d.allFinite() || std::abs(cov2d(0, 1) - cov2d(1, 0)) > 1e-9 * (1.0 + cov2d.norm())) {
        throw std::invalid_argument("scale2d: covariance must be finite and symmetric");
    }
    const double a = cov2d(0, 0);
    const double c = cov2d(1, 1);
    const double b = cov2d(0, 1);
    const double mid = 0.5 * (a + c);
    const double rad = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
    const double lambda_min = mid - rad;
    if (lambda_min < -1e-12 * (1.0 + std::abs(mid))) {
        throw std::invalid_argument("scale2d: covariance is not positive semi-definite");
    }
    return 3.0 * std::sqrt(std::max(mid + rad, 0.0));
}

double drop_probability(double depth, const LodConfig& config) {
    const double d_ref = config.reference_depth;
    const double m = std::min(0.0, (depth - d_ref) / d_ref);
    // p_max + (p_max - 0.01) * m, arranged so d >= D gives p_max and d = 0 gives 0.01 exactly.
    const double p = m == 0.0 ? config.p_max : 1e-2 + (config.p_max - 1e-2) * (1.0 + m);
    return std::clamp(p, 0.0, 1.0);
}

std::uint64_t lod_stream_seed(std::uint64_t rng_seed, double t) {
    SplitMix64 mix(rng_seed ^ std::bit_cast<std::uint64_t>(t));
    return mix();
}

LodResult apply_lod(std::span<const ProjectedGaussian> projected, const LodConfig& config, std::uint64_t stream_seed) {
    validate_lod_config(config);
    LodResult result;
    if (config.r <= 0.0) {
        result.large.resize(projected.size());
        for (std::size_t i = 0; i < projected.size(); ++i) {
            result.large[i] = static_cast<std::uint32_t>(i);
        }
        return result;
    }
    double d_max = 0.0;
    for (const ProjectedGaussian& p : projected) {
        d_max = std::max(d_max, p.depth);
    }
    for (std::size_t i = 0; i < projected.size(); ++i) {
        const ProjectedGaussian& p = projected[i];
        if (scale2d(p.cov2d) > config.r) {
            result.large.push_back(static_cast<std::uint32_t>(i));
            continue;
        }
        // Fresh distributions per entry: normal_distribution caches a spare draw.
        std::uniform_real_distribution<double> uniform(0.0, 1.0);
        std::normal_distribution<double> normal(0.0, 1.0);
        SplitMix64 rng(stream_seed ^ (0xD1B54A32D192ED03ull * (std::uint64_t(p.source_index) + 1)));
        if (uniform(rng) < drop_probability(p.depth, config)) {
            ++result.culled;
            continue;
        }
        const double weight = d_max > 0.0 ? std::clamp(p.depth / d_max, 0.0, 1.0) : 0.0;
        Vec3 noise;
        for (int k = 0; k < 3; ++k) {
            noise[k] = normal(rng);
        }
        result.small_kept.push_back(static_cast<std::uint32_t>(i));
        result.offsets.push_back(config.offset_scale.cwiseProduct(noise) * weight);
    }
    return result;
}

}  // namespace splatstream
