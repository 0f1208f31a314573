#include "splatstream/motion.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace splatstream;

namespace {

double rk4_exp_error(int steps) {
    const auto rhs = [](const Vec6& z, double) { return z; };
    const Vec6 z = integrate_rk4(rhs, Vec6::Constant(1.0), 0.0, 1.0, steps);
    return std::abs(z[0] - std::exp(1.0));
}

}  // namespace

TEST(Rk4, ZeroRhsKeepsState) {
    const Vec6 z0 = (Vec6() << 1, 2, 3, 4, 5, 6).finished();
    EXPECT_EQ(integrate_rk4([](const Vec6&, double) { return Vec6::Zero().eval(); }, z0, -1, 1, 9), z0);
}

TEST(Rk4, ExponentialAccuracyAndOrder) {
    EXPECT_LT(rk4_exp_error(100), 1e-7);
    for (int n : {5, 10, 20}) {
        const double ratio = rk4_exp_error(n) / rk4_exp_error(2 * n);
        EXPECT_GE(ratio, 12.0) << n;
        EXPECT_LE(ratio, 20.0) << n;
    }
    EXPECT_THROW(rk4_exp_error(0), std::invalid_argument);
}

TEST(Rk4, StepRule) {
    EXPECT_EQ(rk4_steps(-1, 1), 8);
    EXPECT_EQ(rk4_steps(0, 0.1), 4);
}

TEST(OdeGradient, MatchesFiniteDifferences) {
    ObjectTrack t = fixture::linear_track(1, Vec3(0, 1, 0), Vec3(1.5, 0, 0.2), 5);
    prepare_track(t, 4, 3);
    const OdeModel m = OdeModel::create(4, 8, 1, 5, 3.0);
    const ObjectTrack* tracks[] = {&t};
    const OdeLossGradient g = ode_loss_gradient(m, tracks);
    const double h = 1e-6;
    for (std::size_t i = 0; i < m.weights.size(); i += 3) {
        OdeModel a = m, b = m;
        a.weights[i] += h;
        b.weights[i] -= h;
        const double fd = (ode_loss_gradient(a, tracks).loss - ode_loss_gradient(b, tracks).loss) / (2 * h);
        EXPECT_NEAR(g.weights[i], fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
    for (int j = 0; j < 4; ++j) {
        ObjectTrack a = t, b = t;
        a.embedding[j] += h;
        b.embedding[j] -= h;
        const ObjectTrack* ta[] = {&a};
        const ObjectTrack* tb[] = {&b};
        const double fd = (ode_loss_gradient(m, ta).loss - ode_loss_gradient(m, tb).loss) / (2 * h);
        EXPECT_NEAR(g.embeddings[0][j], fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
}

TEST(FitOde, ConstantVelocity) {
    const Vec3 x0(2, 1, 0), v(3, 0.5, 0);
    ObjectTrack t = fixture::linear_track(1, x0, v, 12);
    fit_ode(t, 3e-3, 1000);
    EXPECT_LT(fixture::track_rmse(t, x0, v, fixture::sample_times(t)), 0.05);
    EXPECT_LT(fixture::track_rmse(t, x0, v, fixture::midpoints(t)), 0.1);

    // initial condition
    const Pose p0 = query_pose(t, t.t0);
    EXPECT_LT((p0.translation - t.coarse.front().xyz).norm(), 1e-12);
    EXPECT_EQ(p0.rotation, Vec3::Zero());

    // continuity over a fine sweep
    Vec3 prev = p0.translation;
    for (double tau = -1.0 + 1e-3; tau <= 1.0; tau += 1e-3) {
        const Vec3 cur = query_pose(t, tau).translation;
        EXPECT_LT((cur - prev).norm(), 1e-3 * 10.0 * v.norm());
        prev = cur;
    }
}

TEST(FitOde, Stationary) {
    const Vec3 x0(-1, 4, 0.5);
    ObjectTrack t = fixture::linear_track(2, x0, Vec3::Zero(), 12);
    fit_ode(t, 3e-3, 1000);
    EXPECT_LT(fixture::track_rmse(t, x0, Vec3::Zero(), fixture::sample_times(t)), 0.01);
    const Vec6 u = t.dynamics->rhs(Vec6::Zero(), 0.0, t.embedding);
    EXPECT_LT(u.head<3>().norm() * t.dynamics->position_scale, 0.05);
}

TEST(FitOde, SharedNetworkTwoObjects) {
    const Vec3 a0(0, 0, 0), av(4, 0, 0), b0(1, 3, 0), bv(-2, 1, 0);
    ObjectTrack a = fixture::linear_track(1, a0, av, 12);
    ObjectTrack b = fixture::linear_track(2, b0, bv, 12);
    prepare_track(a, 16, 1);
    prepare_track(b, 16, 2);
    OdeModel m = OdeModel::create(16, 64, 2, 0, 8.0);
    ObjectTrack* tracks[] = {&a, &b};
    fit_ode(tracks, m, 1e-3, 2000);
    EXPECT_LT(fixture::track_rmse(a, a0, av, fixture::sample_times(a)), 0.1);
    EXPECT_LT(fixture::track_rmse(b, b0, bv, fixture::sample_times(b)), 0.1);
}

TEST(FitOde, NeedsThreeSamples) {
    ObjectTrack t = fixture::linear_track(1, Vec3::Zero(), Vec3::UnitX(), 2);
    EXPECT_THROW(fit_ode(t, 1e-3, 10), std::invalid_argument);
}

TEST(TrackPose, KeyframeInterpolation) {
    ObjectTrack t;
    t.poses = {{-1.0, {Vec3(3.0, 0, 0), Vec3(0, 0, 0)}}, {1.0, {Vec3(-3.0, 0, 0), Vec3(2, 4, 0)}}};
    const Pose p = track_pose(t, 0.0);
    EXPECT_LT((p.translation - Vec3(1, 2, 0)).norm(), 1e-12);
    // shortest arc across +-pi
    EXPECT_NEAR(std::abs(p.rotation.x()), 3.0 + (2 * M_PI - 6.0) / 2, 1e-12);
    EXPECT_THROW(query_pose(t, 0.0), std::logic_error);
}

TEST(CoarseTrack, SymmetricObjectCenter) {
    const Camera cam = look_at_camera({0, 0, 0}, {1, 0, 0}, {0, 0, 1}, 100, 100, 100, 100);
    std::vector<Vec3> pts;
    for (int dx : {-1, 1})
        for (int dy : {-1, 1})
            for (int dz : {-1, 1}) pts.push_back(Vec3(10, 0, 0) + 0.5 * Vec3(dx, dy, dz));
    pts.push_back({-5, 0, 0});  // behind
    pts.push_back({10, 8, 0});  // outside the mask
    BinaryMask mask{100, 100, std::vector<std::uint8_t>(100 * 100, 0)};
    for (int y = 40; y < 60; ++y)
        for (int x = 40; x < 60; ++x) mask.data[y * 100 + x] = 1;
    BinaryMask empty{100, 100, std::vector<std::uint8_t>(100 * 100, 0)};
    const std::vector<std::vector<Vec3>> lidar{pts, pts};
    const std::vector<Camera> cams{cam, cam};
    std::vector<std::string> warnings;
    const auto tracks = coarse_track(lidar, {{1, {mask, empty}}, {2, {empty, std::nullopt}}}, cams, 5, &warnings);
    ASSERT_EQ(tracks.size(), 1u);
    ASSERT_EQ(tracks.at(1).size(), 1u);
    EXPECT_LT((tracks.at(1)[0].xyz - Vec3(10, 0, 0)).norm(), 1e-6);
    EXPECT_EQ(warnings.size(), 1u);
}

TEST(CoarseTrack, DisjointMasksMatchScalarMeans) {
    std::mt19937_64 rng(61);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const Camera cam = fixture::simple_camera(120, 80, 60.0);
    std::vector<Vec3> pts;
    for (int k = 0; k < 2000; ++k) pts.push_back({3 * u(rng), 2 * u(rng), 6 + 2 * u(rng)});
    BinaryMask left{120, 80, std::vector<std::uint8_t>(120 * 80, 0)}, right = left;
    for (int y = 0; y < 80; ++y)
        for (int x = 0; x < 120; ++x) (x < 50 ? left : right).data[y * 120 + x] = x < 50 || x > 70;
    const auto tracks = coarse_track(std::vector<std::vector<Vec3>>{pts}, {{1, {left}}, {2, {right}}},
                                     std::vector<Camera>{cam}, 5);
    for (auto [id, mask] : {std::pair{1, &left}, std::pair{2, &right}}) {
        Vec3 sum = Vec3::Zero();
        int n = 0;
        for (const Vec3& p : pts) {
            const long x = std::lround(60.0 * p.x() / p.z() + 60.0);
            const long y = std::lround(60.0 * p.y() / p.z() + 40.0);
            if (x >= 0 && x < 120 && y >= 0 && y < 80 && mask->data[y * 120 + x]) {
                sum += p;
                ++n;
            }
        }
        ASSERT_GT(n, 5);
        EXPECT_LT((tracks.at(id)[0].xyz - sum / n).norm(), 1e-12);
    }
}
