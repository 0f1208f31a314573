#pragma once

#include "splatstream/core.hpp"
#include "splatstream/io.hpp"
#include "splatstream/scene.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace splatstream {

enum class Trajectory { constant_velocity, circular };

/// A moving box-shaped object. Frames are absolute; positions in meters, rates per frame.
struct ObjectSpec {
    std::string label = "car";
    int class_index = 0;
    int spawn_frame = 0;
    /// Exclusive.
    int despawn_frame = 1;
    Trajectory trajectory = Trajectory::constant_velocity;
    Vec3 start = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();
    Vec3 center = Vec3::Zero();
    double radius = 1.0;
    double angular_speed = 0.0;
    double phase = 0.0;
    Vec3 size{4.0, 1.8, 1.5};
    int gaussian_count = 200;
};

/// Side-looking camera driving along +x at y = 0, looking at the facade at +y.
struct CameraSpec {
    int width = 128;
    int height = 128;
    double tan_half_fov = 0.5;
    double mount_height = 1.5;
};

/// Street of `segment_count` equal segments; the camera crosses one segment every
/// `frames_per_segment` frames, so each segment is seen only in its own frame window.
struct SceneSpec {
    std::uint64_t seed = 0;
    int segment_count = 1;
    int frames_per_segment = 24;
    double segment_length = 20.0;
    /// Static Gaussians per meter of street (facade and ground together).
    double static_density = 2400.0;
    double facade_fraction = 0.7;
    /// In-plane standard deviation of static splats as a multiple of their mean spacing.
    double splat_scale = 0.35;
    double opacity_min = 0.5;
    double opacity_max = 0.95;
    double building_height = 6.0;
    double facade_distance = 8.0;
    /// Ground strip spans y in [ground_near, facade_distance].
    double ground_near = 3.0;
    CameraSpec camera;
    std::vector<ObjectSpec> objects;

    int frame_count() const { return segment_count * frames_per_segment; }
    double street_length() const { return segment_count * segment_length; }
};

void validate_spec(const SceneSpec& spec);

/// One segment with a car driving along the street and a cyclist circling.
SceneSpec default_street_spec(std::uint64_t seed = 0);

/// Copies `base` with `segments` segments; its objects are repeated in every
/// segment, shifted by one segment length and one frame window each.
SceneSpec replicate_segments(const SceneSpec& base, int segments);

void to_json(nlohmann::json& j, const SceneSpec& spec);
void from_json(const nlohmann::json& j, SceneSpec& spec);

struct GroundTruth {
    /// Table order.
    std::vector<Eigen::Vector3f> colors;
    /// Segment of each static Gaussian.
    std::vector<int> static_segment;
    /// Per instance, the pose at every frame (empty outside the active frames).
    std::map<int, std::vector<std::optional<Pose>>> object_poses;
};

struct GeneratedScene {
    SceneSpec spec;
    SceneModel scene;
    GroundTruth truth;
};

GeneratedScene generate_scene(const SceneSpec& spec);

/// Table indices whose center projects in front of the near plane and within `margin` px of the
/// image at `frame`, using the true object poses. Inactive objects are excluded.
std::vector<std::uint32_t> visible_set(const GeneratedScene& generated, int frame, double margin);

/// Object position at `frame` from the analytic trajectory.
Pose object_pose(const ObjectSpec& object, int frame);

inline constexpr int kSceneFormatVersion = 1;
inline constexpr std::size_t kGaussianRecordBytes = 76;

/// Writes `<stem>.scene.json` and `<stem>.scene.bin`; `path` may name either file or the stem.
void save_scene(const SceneModel& scene, const std::filesystem::path& path, const SceneSpec* spec = nullptr);
SceneModel load_scene(const std::filesystem::path& path, SceneSpec* spec = nullptr);

/// Intrinsics, image size, time and world-to-camera rotation (row-major) plus translation.
nlohmann::json camera_to_json(const Camera& camera);
Camera camera_from_json(const nlohmann::json& j);

/// Manifest and blob paths for a scene path or stem.
std::filesystem::path scene_manifest_path(const std::filesystem::path& path);
std::filesystem::path scene_blob_path(const std::filesystem::path& path);

/// World-space centers of every Gaussian active at frame 0 or static.
PointCloud scene_points(const SceneModel& scene);

}  // namespace splatstream
