#include "splatstream/init.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace splatstream {

namespace {

struct CellHash {
    std::size_t operator()(const Eigen::Vector3i& c) const {
        std::uint64_t h = std::uint64_t(std::uint32_t(c.x())) * 0x9E3779B97F4A7C15ull;
        h ^= std::uint64_t(std::uint32_t(c.y())) * 0xC2B2AE3D27D4EB4Full + (h << 6) + (h >> 2);
        h ^= std::uint64_t(std::uint32_t(c.z())) * 0x165667B19E3779F9ull + (h << 6) + (h >> 2);
        return std::size_t(h);
    }
};

struct CellEq {
    bool operator()(const Eigen::Vector3i& a, const Eigen::Vector3i& b) const { return a == b; }
};

Eigen::Vector3i cell_of(const Vec3& p, double grid) {
    return {int(std::floor(p.x() / grid)), int(std::floor(p.y() / grid)), int(std::floor(p.z() / grid))};
}

}  // namespace

std::map<std::uint16_t, std::string> read_label_map(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    const nlohmann::json j = nlohmann::json::parse(in);
    std::map<std::uint16_t, std::string> out;
    for (const auto& [key, value] : j.items()) {
        const int id = std::stoi(key);
        if (id < 0 || id >= kUnknownLabel) {
            throw std::runtime_error("label id " + key + " out of range");
        }
        out[std::uint16_t(id)] = value.get<std::string>();
    }
    return out;
}

std::set<std::uint16_t> labels_named(const std::map<std::uint16_t, std::string>& label_map,
                                     const std::vector<std::string>& names) {
    std::set<std::uint16_t> out;
    for (const std::string& name : names) {
        bool found = false;
        for (const auto& [id, n] : label_map) {
            if (n == name) {
                out.insert(id);
                found = true;
            }
        }
        if (!found) {
            throw std::invalid_argument("label '" + name + "' is not in the label map");
        }
    }
    return out;
}

std::vector<Vec3> voxel_downsample(std::span<const Vec3> points, double grid) {
    if (!(grid > 0.0)) {
        throw std::invalid_argument("voxel_downsample: grid must be positive");
    }
    std::unordered_map<Eigen::Vector3i, std::size_t, CellHash, CellEq> slot;
    std::vector<Vec3> sums;
    std::vector<std::size_t> counts;
    for (const Vec3& p : points) {
        auto [it, fresh] = slot.try_emplace(cell_of(p, grid), sums.size());
        if (fresh) {
            sums.push_back(Vec3::Zero());
            counts.push_back(0);
        }
        sums[it->second] += p;
        ++counts[it->second];
    }
    for (std::size_t i = 0; i < sums.size(); ++i) {
        sums[i] /= double(counts[i]);
    }
    return sums;
}

std::optional<Eigen::Vector2i> pixel_of(const Camera& camera, const Vec3& point, double near_plane) {
    const Vec3 pc = camera.world_to_camera.apply(point);
    if (!(pc.z() > near_plane)) {
        return std::nullopt;
    }
    const double u = camera.fx * pc.x() / pc.z() + camera.cx;
    const double v = camera.fy * pc.y() / pc.z() + camera.cy;
    const long x = std::lround(u);
    const long y = std::lround(v);
    if (x < 0 || y < 0 || x >= camera.width || y >= camera.height) {
        return std::nullopt;
    }
    return Eigen::Vector2i(int(x), int(y));
}

SemanticPointCloud label_points(std::span<const Vec3> points, const GrayImage& semantic_image, const Camera& camera) {
    validate_camera(camera);
    if (semantic_image.width != camera.width || semantic_image.height != camera.height) {
        throw std::invalid_argument("label_points: semantic image size differs from the camera");
    }
    SemanticPointCloud out;
    out.points.assign(points.begin(), points.end());
    out.labels.resize(points.size(), kUnknownLabel);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(points.size()); ++i) {
        if (auto px = pixel_of(camera, points[i])) {
            out.labels[i] = semantic_image.at(px->x(), px->y());
        }
    }
    return out;
}

std::vector<Vec3> bev_augment(const SemanticPointCloud& cloud, const std::set<std::uint16_t>& target_labels,
                              const BevConfig& config, std::span<const Camera> cameras) {
    if (!(config.dz > 0.0) || !(config.height >= config.dz) || !(config.grid > 0.0)) {
        throw std::invalid_argument("bev_augment: need grid > 0, dz > 0 and height >= dz");
    }
    if (cloud.labels.size() != cloud.points.size()) {
        throw std::invalid_argument("bev_augment: labels not aligned with points");
    }
    std::set<std::pair<long, long>> cells;
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        if (target_labels.count(cloud.labels[i])) {
            const Vec3& p = cloud.points[i];
            cells.emplace(long(std::floor(p.x() / config.grid)), long(std::floor(p.y() / config.grid)));
        }
    }
    // Integer steps so z is an exact multiple of dz.
    const long levels = long(std::floor(config.height / config.dz + 1e-9));
    std::vector<Vec3> column;
    for (const auto& [cx, cy] : cells) {
        const double x = (double(cx) + 0.5) * config.grid;
        const double y = (double(cy) + 0.5) * config.grid;
        for (long k = 1; k <= levels; ++k) {
            column.emplace_back(x, y, double(k) * config.dz);
        }
    }
    std::vector<std::uint8_t> keep(column.size(), 0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(column.size()); ++i) {
        for (const Camera& cam : cameras) {
            if (pixel_of(cam, column[i])) {
                keep[i] = 1;
                break;
            }
        }
    }
    std::vector<Vec3> out;
    for (std::size_t i = 0; i < column.size(); ++i) {
        if (keep[i]) out.push_back(column[i]);
    }
    return out;
}

std::vector<Vec3> merge(std::span<const Vec3> original, std::span<const Vec3> augmented) {
    std::vector<Vec3> out(original.begin(), original.end());
    out.insert(out.end(), augmented.begin(), augmented.end());
    return out;
}

std::vector<double> nearest_neighbor_distance(std::span<const Vec3> points, double fallback) {
    std::vector<double> out(points.size(), fallback);
    if (points.size() < 2) {
        return out;
    }
    Vec3 lo = points[0], hi = points[0];
    for (const Vec3& p : points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    // About one point per cell for a surface-like cloud.
    const double extent = std::max((hi - lo).maxCoeff(), 1e-9);
    const double cell = std::max(extent / std::cbrt(double(points.size())), 1e-6);
    std::unordered_map<Eigen::Vector3i, std::vector<std::uint32_t>, CellHash, CellEq> grid;
    for (std::size_t i = 0; i < points.size(); ++i) {
        grid[cell_of(points[i] - lo, cell)].push_back(std::uint32_t(i));
    }
    const int max_ring = int(std::ceil(extent / cell)) + 1;
#pragma omp parallel for schedule(dynamic, 256)
    for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(points.size()); ++i) {
        const Eigen::Vector3i c = cell_of(points[i] - lo, cell);
        double best = std::numeric_limits<double>::infinity();
        for (int ring = 0; ring <= max_ring; ++ring) {
            // Anything in ring r+1 or beyond is at least r * cell away.
            if (best <= double(ring - 1) * cell) break;
            for (int dx = -ring; dx <= ring; ++dx)
                for (int dy = -ring; dy <= ring; ++dy)
                    for (int dz = -ring; dz <= ring; ++dz) {
                        if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != ring) continue;
                        auto it = grid.find(Eigen::Vector3i(c.x() + dx, c.y() + dy, c.z() + dz));
                        if (it == grid.end()) continue;
                        for (std::uint32_t j : it->second) {
                            if (j == std::uint32_t(i)) continue;
                            best = std::min(best, (points[j] - points[i]).norm());
                        }
                    }
        }
        out[i] = best;
    }
    return out;
}

std::vector<Gaussian3D> init_gaussians(std::span<const Vec3> points, double min_scale) {
    const std::vector<double> nn = nearest_neighbor_distance(points);
    std::vector<Gaussian3D> out;
    out.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        const float s = float(std::log(std::max(nn[i], min_scale)));
        out.push_back(make_gaussian(points[i].cast<float>(), Eigen::Vector3f::Constant(s),
                                    Eigen::Quaternionf::Identity(), 0.1f, GaussianColor::field()));
    }
    return out;
}

}  // namespace splatstream
