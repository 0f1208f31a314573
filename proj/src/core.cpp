#include "splatstream/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace splatstream {

Rigid Rigid::from_matrix(const Mat4& m) {
    return {m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
}

Mat4 Rigid::matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = rotation;
    m.topRightCorner<3, 1>() = translation;
    return m;
}

Rigid Rigid::inverse() const {
    const Mat3 rt = rotation.transpose();
    return {rt, -(rt * translation)};
}

void validate_rigid(const Rigid& transform, double tolerance) {
    if (!transform.rotation.allFinite() || !transform.translation.allFinite()) {
        throw std::invalid_argument("rigid transform has non-finite entries");
    }
    const double ortho = (transform.rotation.transpose() * transform.rotation - Mat3::Identity()).norm();
    if (ortho > tolerance) {
        throw std::invalid_argument("rotation is not orthonormal (|R^T R - I| = " + std::to_string(ortho) + ")");
    }
    if (std::abs(transform.rotation.determinant() - 1.0) > tolerance) {
        throw std::invalid_argument("rotation determinant is not +1");
    }
}

Rigid compose_se3(const Rigid& a, const Rigid& b) {
    return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

Gaussian3D make_gaussian(const Eigen::Vector3f& position,
                         const Eigen::Vector3f& log_scale,
                         const Eigen::Quaternionf& rotation,
                         float opacity,
                         GaussianColor color,
                         std::optional<std::int32_t> instance_id) {
    if (!position.allFinite() || !log_scale.allFinite() || !rotation.coeffs().allFinite()) {
        throw std::invalid_argument("gaussian has non-finite geometry");
    }
    const float qn = rotation.norm();
    if (qn < 1e-12f) {
        throw std::invalid_argument("gaussian rotation quaternion is zero");
    }
    if (!(opacity > 0.0f && opacity < 1.0f)) {
        throw std::invalid_argument("gaussian opacity must lie in (0, 1)");
    }
    Gaussian3D g;
    g.position = position;
    g.log_scale = log_scale;
    g.rotation = Eigen::Quaternionf(rotation.coeffs() / qn);
    g.opacity = opacity;
    g.color = color;
    g.instance_id = instance_id;
    return g;
}

bool same_gaussian(const Gaussian3D& a, const Gaussian3D& b) {
    return a.position == b.position && a.log_scale == b.log_scale &&
           a.rotation.coeffs() == b.rotation.coeffs() && a.opacity == b.opacity &&
           a.color.from_field == b.color.from_field && (a.color.from_field || a.color.rgb == b.color.rgb) &&
           a.visibility == b.visibility && a.life == b.life && a.instance_id == b.instance_id;
}

void validate_camera(const Camera& camera) {
    validate_rigid(camera.world_to_camera);
    if (camera.width < 1 || camera.height < 1) {
        throw std::invalid_argument("camera image size must be at least 1x1");
    }
    if (!(camera.fx > 0.0) || !(camera.fy > 0.0) || !std::isfinite(camera.cx) || !std::isfinite(camera.cy)) {
        throw std::invalid_argument("camera intrinsics invalid");
    }
}

Camera look_at_camera(const Vec3& eye, const Vec3& forward, const Vec3& up,
                      double fx, double fy, int width, int height, double time) {
    const Vec3 z = forward.normalized();
    const Vec3 y = (-(up - up.dot(z) * z)).normalized();
    const Vec3 x = y.cross(z);
    Mat3 r;
    r.row(0) = x.transpose();
    r.row(1) = y.transpose();
    r.row(2) = z.transpose();
    Camera cam;
    cam.fx = fx;
    cam.fy = fy;
    cam.cx = 0.5 * width;
    cam.cy = 0.5 * height;
    cam.world_to_camera = {r, -(r * eye)};
    cam.width = width;
    cam.height = height;
    cam.time = time;
    return cam;
}

Mat3 euler_to_matrix(const Vec3& ypr) {
    return (Eigen::AngleAxisd(ypr[0], Vec3::UnitZ()) * Eigen::AngleAxisd(ypr[1], Vec3::UnitY()) *
            Eigen::AngleAxisd(ypr[2], Vec3::UnitX()))
        .toRotationMatrix();
}

Vec3 matrix_to_euler(const Mat3& r) {
    // R = Rz(yaw) Ry(pitch) Rx(roll); r(2,0) = -sin(pitch).
    const double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
    const double yaw = std::atan2(r(1, 0), r(0, 0));
    const double roll = std::atan2(r(2, 1), r(2, 2));
    return {yaw, pitch, roll};
}

Rigid Pose::to_rigid() const { return {euler_to_matrix(rotation), translation}; }

Pose Pose::from_rigid(const Rigid& transform) { return {matrix_to_euler(transform.rotation), transform.translation}; }

Mat3 build_covariance(const Vec3& log_scale, const Eigen::Quaterniond& rotation) {
    if (!log_scale.allFinite() || !rotation.coeffs().allFinite()) {
        throw std::invalid_argument("build_covariance: non-finite input");
    }
    const Mat3 r = rotation.normalized().toRotationMatrix();
    const Vec3 var = (2.0 * log_scale).array().exp();
    Mat3 sigma = r * var.asDiagonal() * r.transpose();
    // Exact symmetry regardless of rounding in the product.
    return 0.5 * (sigma + sigma.transpose());
}

Mat3 build_covariance(const Gaussian3D& g) {
    return build_covariance(g.log_scale.cast<double>(), g.rotation.cast<double>());
}

double normalize_time(int frame_index, int frame_count) {
    if (frame_count < 1 || frame_index < 0 || frame_index >= frame_count) {
        throw std::out_of_range("normalize_time: frame " + std::to_string(frame_index) + " outside [0, " +
                                std::to_string(frame_count) + ")");
    }
    if (frame_count == 1) {
        return 0.0;
    }
    return -1.0 + 2.0 * double(frame_index) / double(frame_count - 1);
}

double time_to_frame(double t, int frame_count) {
    if (frame_count <= 1) {
        return 0.0;
    }
    return 0.5 * (t + 1.0) * double(frame_count - 1);
}

}  // namespace splatstream
