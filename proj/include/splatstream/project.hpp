#pragma once

#include "splatstream/core.hpp"
#include "splatstream/parallel.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace splatstream {

struct ProjectionConfig {
    double near_plane = 0.01;
    /// Added to the 2D covariance diagonal, px^2.
    double low_pass = 0.3;
    /// x/z and y/z are clamped to this multiple of the half-FOV tangent before the Jacobian.
    double tangent_clamp = 1.3;
};

struct ProjectedGaussian {
    Vec2 mean2d = Vec2::Zero();
    Mat2 cov2d = Mat2::Identity();
    double depth = 0.0;
    std::uint32_t source_index = 0;
    bool in_frustum = false;
};

/// EWA projection of one Gaussian: mean through the pinhole, covariance through the
/// perspective Jacobian. Points at or behind the near plane come back with in_frustum = false.
ProjectedGaussian project_gaussian(const Vec3& position, const Mat3& cov3d, const Camera& camera,
                                   const ProjectionConfig& config = {});

/// 2x3 perspective Jacobian at a camera-frame point, with the tangent clamp applied.
Eigen::Matrix<double, 2, 3> projection_jacobian(const Vec3& p_cam, const Camera& camera,
                                                const ProjectionConfig& config = {});

/// Per-object cameras sharing the base intrinsics, extrinsics W_t * W_{t,i2g}.
std::map<int, Camera> build_instance_cameras(const Camera& base, const std::map<int, Pose>& object_poses);

/// Default screen margin: 0.15 of the larger image side, so accepted centers span 1.3x the half-extent.
double default_margin(int width, int height);

/// True iff in_frustum and the mean lies in [-margin, width + margin] x [-margin, height + margin].
Mask frustum_cull(std::span<const ProjectedGaussian> projected, int width, int height, double margin);

/// One unit of batch projection. Geometry is already expressed in the frame `camera` expects.
struct ProjectionTask {
    Vec3 position;
    Mat3 covariance;
    const Camera* camera = nullptr;
    std::uint32_t source_index = 0;
};

/// OpenMP-parallel projection of a batch; output aligned with `tasks`.
std::vector<ProjectedGaussian> project_batch(std::span<const ProjectionTask> tasks, const ProjectionConfig& config);

namespace reference {

std::vector<ProjectedGaussian> project_batch(std::span<const ProjectionTask> tasks, const ProjectionConfig& config);
Mask frustum_cull(std::span<const ProjectedGaussian> projected, int width, int height, double margin);

}  // namespace reference

}  // namespace splatstream
