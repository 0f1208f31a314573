#include "splatstream/init.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

using namespace splatstream;

namespace {

/// Camera at (3.5, -6, 2) looking along +y at the column over cell (3, 4).
Camera column_camera() { return look_at_camera({3.5, -6, 2}, {0, 1, 0}, {0, 0, 1}, 80, 80, 100, 100); }

}  // namespace

TEST(Voxel, SameAndDistinctCells) {
    const std::vector<Vec3> near{{0.05, 0.05, 0.05}, {0.06, 0.05, 0.05}};
    const auto one = voxel_downsample(near, 0.15);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_LT((one[0] - Vec3(0.055, 0.05, 0.05)).norm(), 1e-12);
    const std::vector<Vec3> far{{0, 0, 0}, {10, 0, 0}};
    EXPECT_EQ(voxel_downsample(far, 0.15).size(), 2u);
    EXPECT_THROW(voxel_downsample(far, 0.0), std::invalid_argument);
}

TEST(Voxel, MatchesHashSetOracle) {
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (double grid : {0.15, 0.5, 1.0}) {
        std::vector<Vec3> pts(20000);
        for (auto& p : pts) p = {u(rng), u(rng), 0.3 * u(rng)};
        EXPECT_EQ(voxel_downsample(pts, grid).size(), oracle::voxel_count(pts, grid));
    }
}

TEST(LabelPoints, LookupAndUnknown) {
    const Camera cam = fixture::simple_camera();
    GrayImage sem{100, 100, 65535, std::vector<std::uint16_t>(100 * 100, 3)};
    sem.data[50 * 100 + 50] = 7;
    const std::vector<Vec3> pts{{0, 0, 2}, {0, 0, -2}, {100, 0, 1}};
    const SemanticPointCloud c = label_points(pts, sem, cam);
    EXPECT_EQ(c.labels, (std::vector<std::uint16_t>{7, kUnknownLabel, kUnknownLabel}));
}

TEST(LabelPoints, TwoRegionsMatchScalarOracle) {
    const Camera cam = fixture::simple_camera(64, 48, 40.0);
    GrayImage sem{64, 48, 255, std::vector<std::uint16_t>(64 * 48)};
    for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 64; ++x) sem.data[y * 64 + x] = x + y < 50 ? 1 : 2;
    std::vector<Vec3> pts;
    for (double x = -4; x <= 4; x += 0.13)
        for (double y = -3; y <= 3; y += 0.17) pts.push_back({x, y, 3.0 + 0.1 * x});
    const SemanticPointCloud c = label_points(pts, sem, cam);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const long px = std::lround(40.0 * pts[i].x() / pts[i].z() + 32.0);
        const long py = std::lround(40.0 * pts[i].y() / pts[i].z() + 24.0);
        const std::uint16_t expected =
            px >= 0 && px < 64 && py >= 0 && py < 48 ? (px + py < 50 ? 1 : 2) : kUnknownLabel;
        ASSERT_EQ(c.labels[i], expected) << i;
    }
}

TEST(Bev, HandEnumeratedColumn) {
    SemanticPointCloud cloud;
    cloud.points = {{3.0, 4.0, 1.0}, {-8.0, 2.0, 0.0}};
    cloud.labels = {5, 1};
    const std::vector<Camera> cams{column_camera()};
    const auto out = bev_augment(cloud, {5}, {1.0, 1.0, 3.0}, cams);
    ASSERT_EQ(out.size(), 3u);
    for (int k = 0; k < 3; ++k) EXPECT_LT((out[k] - Vec3(3.5, 4.5, k + 1.0)).norm(), 1e-12);
}

TEST(Bev, VacuousCases) {
    SemanticPointCloud cloud;
    cloud.points = {{3.0, 4.0, 1.0}};
    cloud.labels = {1};
    const std::vector<Camera> cams{column_camera()};
    EXPECT_TRUE(bev_augment(cloud, {5}, {1.0, 1.0, 3.0}, cams).empty());
    cloud.labels = {5};
    const std::vector<Camera> away{look_at_camera({3.5, -6, 2}, {0, -1, 0}, {0, 0, 1}, 80, 80, 100, 100)};
    EXPECT_TRUE(bev_augment(cloud, {5}, {1.0, 1.0, 3.0}, away).empty());
}

TEST(Bev, ColumnInvariants) {
    std::mt19937_64 rng(72);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    SemanticPointCloud cloud;
    for (int k = 0; k < 400; ++k) {
        cloud.points.push_back({u(rng), 10.0 + u(rng), 0.1 * u(rng)});
        cloud.labels.push_back(std::uint16_t(rng() % 3));
    }
    const std::vector<Camera> cams{look_at_camera({0, -5, 1.5}, {0, 1, 0}, {0, 0, 1}, 60, 60, 128, 96),
                                   look_at_camera({0, 25, 1.5}, {0, -1, 0}, {0, 0, 1}, 60, 60, 128, 96)};
    const BevConfig cfg{0.7, 0.4, 5.0};
    const auto out = bev_augment(cloud, {2}, cfg, cams);
    ASSERT_FALSE(out.empty());
    for (const Vec3& p : out) {
        const double k = p.z() / cfg.dz;
        EXPECT_NEAR(k, std::round(k), 1e-9);
        EXPECT_GE(std::round(k), 1.0);
        EXPECT_LE(p.z(), cfg.height + 1e-9);
        bool seen = false;
        for (const Camera& c : cams) seen = seen || pixel_of(c, p).has_value();
        EXPECT_TRUE(seen);
    }
    const auto merged = merge(cloud.points, out);
    EXPECT_EQ(merged.size(), cloud.points.size() + out.size());
    EXPECT_EQ(merged.front(), cloud.points.front());
    EXPECT_EQ(merged.back(), out.back());
}

TEST(Merge, Counts) {
    const std::vector<Vec3> a{{1, 0, 0}, {2, 0, 0}}, none;
    EXPECT_EQ(merge(a, none).size(), 2u);
    EXPECT_EQ(merge(none, a).size(), 2u);
}

TEST(InitGaussians, NearestNeighborScale) {
    const std::vector<Vec3> pts{{0, 0, 0}, {0.5, 0, 0}, {3, 0, 0}, {3, 0, 0}};
    const auto nn = nearest_neighbor_distance(pts);
    EXPECT_EQ(nn, (std::vector<double>{0.5, 0.5, 0.0, 0.0}));
    const auto gs = init_gaussians(pts);
    EXPECT_NEAR(gs[0].log_scale.x(), std::log(0.5), 1e-6);
    EXPECT_NEAR(gs[2].log_scale.x(), std::log(1e-3), 1e-6);
    EXPECT_FLOAT_EQ(gs[0].opacity, 0.1f);
    EXPECT_TRUE(gs[0].color.from_field);
}

TEST(LabelMap, ReadAndSelect) {
    const auto path = std::filesystem::temp_directory_path() / "splatstream_labels.json";
    std::ofstream(path) << R"({"1": "road", "2": "building", "11": "vegetation"})";
    const auto map = read_label_map(path);
    EXPECT_EQ(map.at(11), "vegetation");
    EXPECT_EQ(labels_named(map, {"building", "vegetation"}), (std::set<std::uint16_t>{2, 11}));
    EXPECT_THROW(labels_named(map, {"sky"}), std::invalid_argument);
}
