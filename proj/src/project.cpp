#include "splatstream/project.hpp"

#include <algorithm>
#include <cmath>

namespace splatstream {

Eigen::Matrix<double, 2, 3> projection_jacobian(const Vec3& p_cam, const Camera& camera,
                                                const ProjectionConfig& config) {
    const double z = p_cam.z();
    const double lim_x = config.tangent_clamp * 0.5 * camera.width / camera.fx;
    const double lim_y = config.tangent_clamp * 0.5 * camera.height / camera.fy;
    const double tx = std::clamp(p_cam.x() / z, -lim_x, lim_x) * z;
    const double ty = std::clamp(p_cam.y() / z, -lim_y, lim_y) * z;
    Eigen::Matrix<double, 2, 3> j;
    j << camera.fx / z, 0.0, -camera.fx * tx / (z * z),
         0.0, camera.fy / z, -camera.fy * ty / (z * z);
    return j;
}

ProjectedGaussian project_gaussian(const Vec3& position, const Mat3& cov3d, const Camera& camera,
                                   const ProjectionConfig& config) {
    ProjectedGaussian out;
    const Rigid& w = camera.world_to_camera;
    const Vec3 p = w.apply(position);
    out.depth = p.z();
    if (!(p.z() > config.near_plane)) {
        out.cov2d = Mat2::Identity() * config.low_pass;
        return out;
    }
    out.mean2d = {camera.fx * p.x() / p.z() + camera.cx, camera.fy * p.y() / p.z() + camera.cy};
    const Eigen::Matrix<double, 2, 3> t = projection_jacobian(p, camera, config) * w.rotation;
    Mat2 cov = t * cov3d * t.transpose();
    cov(0, 1) = cov(1, 0) = 0.5 * (cov(0, 1) + cov(1, 0));
    cov(0, 0) += config.low_pass;
    cov(1, 1) += config.low_pass;
    out.cov2d = cov;
    out.in_frustum = true;
    return out;
}

std::map<int, Camera> build_instance_cameras(const Camera& base, const std::map<int, Pose>& object_poses) {
    std::map<int, Camera> cameras;
    for (const auto& [id, pose] : object_poses) {
        cameras.emplace(id, base.with_extrinsics(compose_se3(base.world_to_camera, pose.to_rigid())));
    }
    return cameras;
}

double default_margin(int width, int height) { return 0.15 * std::max(width, height); }

namespace {

inline bool inside(const ProjectedGaussian& p, int width, int height, double margin) {
    return p.in_frustum && p.mean2d.x() >= -margin && p.mean2d.x() <= width + margin &&
           p.mean2d.y() >= -margin && p.mean2d.y() <= height + margin;
}

}  // namespace

Mask frustum_cull(std::span<const ProjectedGaussian> projected, int width, int height, double margin) {
    Mask mask(projected.size(), 0);
    const auto n = static_cast<std::int64_t>(projected.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        mask[i] = inside(projected[i], width, height, margin) ? 1 : 0;
    }
    return mask;
}

std::vector<ProjectedGaussian> project_batch(std::span<const ProjectionTask> tasks, const ProjectionConfig& config) {
    std::vector<ProjectedGaussian> out(tasks.size());
    const auto n = static_cast<std::int64_t>(tasks.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        const ProjectionTask& task = tasks[i];
        out[i] = project_gaussian(task.position, task.covariance, *task.camera, config);
        out[i].source_index = task.source_index;
    }
    return out;
}

namespace reference {

std::vector<ProjectedGaussian> project_batch(std::span<const ProjectionTask> tasks, const ProjectionConfig& config) {
    std::vector<ProjectedGaussian> out;
    out.reserve(tasks.size());
    for (const ProjectionTask& task : tasks) {
        ProjectedGaussian p = project_gaussian(task.position, task.covariance, *task.camera, config);
        p.source_index = task.source_index;
        out.push_back(p);
    }
    return out;
}

Mask frustum_cull(std::span<const ProjectedGaussian> projected, int width, int height, double margin) {
    Mask mask;
    mask.reserve(projected.size());
    for (const ProjectedGaussian& p : projected) {
        bool keep = p.in_frustum;
        keep = keep && p.mean2d.x() >= -margin && p.mean2d.x() <= width + margin;
        keep = keep && p.mean2d.y() >= -margin && p.mean2d.y() <= height + margin;
        mask.push_back(keep ? 1 : 0);
    }
    return mask;
}

}  // namespace reference

}  // namespace splatstream
