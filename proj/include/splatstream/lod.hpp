#pragma once

#include "splatstream/core.hpp"
#include "splatstream/project.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace splatstream {

struct LodConfig {
    /// Footprint threshold, px. Zero disables LOD.
    double r = 4.0;
    double p_max = 0.5;
    /// Reference depth D, meters.
    double reference_depth = 50.0;
    /// (dx, dy, dz) jitter scale, meters.
    Vec3 offset_scale = Vec3::Constant(0.05);
    std::uint64_t rng_seed = 0;
};

void validate_lod_config(const LodConfig& config);

/// 3-sigma pixel radius along the major axis: 3 * sqrt(lambda_max).
double scale2d(const Mat2& cov2d);

/// p = p_max + (p_max - 0.01) * min(0, (d - D) / D), clamped to [0, 1].
double drop_probability(double depth, const LodConfig& config);

struct LodResult {
    /// Indices into the input batch.
    std::vector<std::uint32_t> large;
    std::vector<std::uint32_t> small_kept;
    /// One 3D offset per small_kept entry, in the Gaussian's own frame.
    std::vector<Vec3> offsets;
    std::size_t culled = 0;
};

/// Seed of the random stream for one render call at time t.
std::uint64_t lod_stream_seed(std::uint64_t rng_seed, double t);

/// Adaptive LOD over a batch of frustum-passed projections. Random draws for an entry
/// depend only on (stream_seed, source_index), so results do not depend on worker count.
LodResult apply_lod(std::span<const ProjectedGaussian> projected, const LodConfig& config, std::uint64_t stream_seed);

}  // namespace splatstream
