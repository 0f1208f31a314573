#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <optional>

namespace splatstream {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Rigid transform x -> rotation * x + translation.
struct Rigid {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    static Rigid identity() { return {}; }
    static Rigid from_translation(const Vec3& t) { return {Mat3::Identity(), t}; }
    static Rigid from_matrix(const Mat4& m);

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
    Mat4 matrix() const;
    Rigid inverse() const;
};

/// Throws std::invalid_argument unless the rotation is orthonormal with determinant +1.
void validate_rigid(const Rigid& transform, double tolerance = 1e-6);

/// Homogeneous product a * b: b is applied first.
Rigid compose_se3(const Rigid& a, const Rigid& b);

/// Closed time interval in normalized scene time.
struct TimeInterval {
    float start = -1.0f;
    float end = 1.0f;

    bool contains(double t) const { return double(start) <= t && t <= double(end); }
    friend bool operator==(const TimeInterval&, const TimeInterval&) = default;
};

inline constexpr TimeInterval kAlwaysVisible{-1.0f, 1.0f};
inline constexpr TimeInterval kEmptyLife{1.0f, -1.0f};

/// Constant RGB, or a marker telling the renderer to query a neural color field.
struct GaussianColor {
    Eigen::Vector3f rgb = Eigen::Vector3f::Constant(0.5f);
    bool from_field = false;

    static GaussianColor constant(const Eigen::Vector3f& c) { return {c, false}; }
    static GaussianColor field() { return {Eigen::Vector3f::Constant(0.5f), true}; }
};

/// One splat. Static Gaussians live in world coordinates, dynamic ones in their object's frame.
struct Gaussian3D {
    Eigen::Vector3f position = Eigen::Vector3f::Zero();
    Eigen::Vector3f log_scale = Eigen::Vector3f::Zero();
    Eigen::Quaternionf rotation = Eigen::Quaternionf::Identity();
    float opacity = 0.5f;
    GaussianColor color;
    TimeInterval visibility = kAlwaysVisible;
    TimeInterval life = kEmptyLife;
    std::optional<std::int32_t> instance_id;

    bool is_dynamic() const { return instance_id.has_value(); }
};

/// Builds a validated Gaussian with a normalized quaternion and fresh visibility/life.
Gaussian3D make_gaussian(const Eigen::Vector3f& position,
                         const Eigen::Vector3f& log_scale,
                         const Eigen::Quaternionf& rotation,
                         float opacity,
                         GaussianColor color,
                         std::optional<std::int32_t> instance_id = std::nullopt);

bool same_gaussian(const Gaussian3D& a, const Gaussian3D& b);

/// Pinhole camera with world-to-camera extrinsics. Camera frame: x right, y down, z forward.
struct Camera {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    Rigid world_to_camera;
    int width = 1;
    int height = 1;
    double time = 0.0;

    Vec3 center_world() const { return world_to_camera.inverse().translation; }
    Camera with_extrinsics(const Rigid& w) const {
        Camera c = *this;
        c.world_to_camera = w;
        return c;
    }
};

void validate_camera(const Camera& camera);

/// Camera at `eye` looking along `forward` with `up` as the image's negative y direction.
Camera look_at_camera(const Vec3& eye, const Vec3& forward, const Vec3& up,
                      double fx, double fy, int width, int height, double time = 0.0);

/// Object pose as yaw-pitch-roll Euler angles (radians) plus a translation.
/// The rotation matrix is Rz(yaw) * Ry(pitch) * Rx(roll).
struct Pose {
    Vec3 rotation = Vec3::Zero();
    Vec3 translation = Vec3::Zero();

    Rigid to_rigid() const;
    static Pose from_rigid(const Rigid& transform);
};

Mat3 euler_to_matrix(const Vec3& yaw_pitch_roll);
Vec3 matrix_to_euler(const Mat3& rotation);

/// Sigma = R * S * S^T * R^T with S = diag(exp(log_scale)).
Mat3 build_covariance(const Vec3& log_scale, const Eigen::Quaterniond& rotation);
Mat3 build_covariance(const Gaussian3D& g);

/// Maps frame_index in [0, frame_count) linearly onto [-1, 1]; a single frame maps to 0.
double normalize_time(int frame_index, int frame_count);

/// Inverse of normalize_time as a fractional frame coordinate.
double time_to_frame(double t, int frame_count);

}  // namespace splatstream
