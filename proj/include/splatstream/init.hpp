#pragma once

#include "splatstream/core.hpp"
#include "splatstream/io.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace splatstream {

/// Label given to points that no semantic image covers.
inline constexpr std::uint16_t kUnknownLabel = 0xFFFF;

struct SemanticPointCloud {
    std::vector<Vec3> points;
    std::vector<std::uint16_t> labels;
    std::map<std::uint16_t, std::string> label_names;
};

/// Reads {"<id>": "<name>", ...}.
std::map<std::uint16_t, std::string> read_label_map(const std::filesystem::path& path);
/// Ids whose name is in `names`; unknown names throw.
std::set<std::uint16_t> labels_named(const std::map<std::uint16_t, std::string>& label_map,
                                     const std::vector<std::string>& names);

/// Centroid of each occupied voxel floor(p / grid), in order of first occurrence.
std::vector<Vec3> voxel_downsample(std::span<const Vec3> points, double grid);

/// Pixel the point projects to (rounded), if it lies in front of the near plane and inside the image.
std::optional<Eigen::Vector2i> pixel_of(const Camera& camera, const Vec3& point, double near_plane = 0.01);

/// Label at each point's rounded pixel; kUnknownLabel outside the image or behind the camera.
SemanticPointCloud label_points(std::span<const Vec3> points, const GrayImage& semantic_image, const Camera& camera);

struct BevConfig {
    double grid = 1.0;
    double dz = 0.5;
    double height = 10.0;
};

/// Vertical columns over every BEV cell occupied by a target-labeled point, at the cell center,
/// z in {dz, 2dz, ...} up to the height, kept when at least one camera sees them.
std::vector<Vec3> bev_augment(const SemanticPointCloud& cloud, const std::set<std::uint16_t>& target_labels,
                              const BevConfig& config, std::span<const Camera> cameras);

/// Original points first, then the augmented ones.
std::vector<Vec3> merge(std::span<const Vec3> original, std::span<const Vec3> augmented);

/// Distance from each point to its nearest other point; 0 for exact duplicates, and
/// `fallback` for a lone point.
std::vector<double> nearest_neighbor_distance(std::span<const Vec3> points, double fallback = 0.1);

/// Default Gaussians for initialization points: isotropic scale from the nearest-neighbor distance,
/// opacity 0.1, field color.
std::vector<Gaussian3D> init_gaussians(std::span<const Vec3> points, double min_scale = 1e-3);

}  // namespace splatstream
