#pragma once

#include "splatstream/core.hpp"
#include "splatstream/mlp.hpp"

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace splatstream {

struct TrackSample {
    double t = 0.0;
    Vec3 xyz = Vec3::Zero();
};

struct TimedPose {
    double t = 0.0;
    Pose pose;
};

/// Shared dynamics network f(z, t, c) -> dz/dt.
///
/// The network sees a normalized state: z = z0 + S * u with S = diag(s, s, s, 1, 1, 1),
/// u(t0) = 0 and du/dt = f(u, t, c). `position_scale` is s, in meters.
struct OdeModel {
    MlpShape shape;
    std::vector<double> weights;
    int embedding_dim = 16;
    double position_scale = 1.0;

    static OdeModel create(int embedding_dim = 16, int hidden_width = 64, int hidden_layers = 2,
                           std::uint64_t seed = 0, double position_scale = 1.0);

    Vec6 rhs(const Vec6& u, double t, const Eigen::VectorXd& embedding) const;
};

struct ObjectTrack {
    int instance_id = 0;
    std::string label;
    int class_index = 0;
    /// Sorted by t.
    std::vector<TrackSample> coarse;
    /// Keyframe poses, used for rendering when no fitted dynamics are attached.
    std::vector<TimedPose> poses;
    Eigen::VectorXd embedding;
    std::optional<OdeModel> dynamics;
    /// z(t0); position part from the first coarse sample, rotation zero.
    Vec6 initial_state = Vec6::Zero();
    double t0 = -1.0;
    double active_start = -1.0;
    double active_end = 1.0;

    bool active_at(double t) const { return active_start <= t && t <= active_end; }
};

/// Seeds t0, initial_state and a random embedding from the coarse samples.
void prepare_track(ObjectTrack& track, int embedding_dim = 16, std::uint64_t seed = 0);

/// Classical fixed-step RK4 with step (t1 - t0) / steps.
Vec6 integrate_rk4(const std::function<Vec6(const Vec6&, double)>& rhs, const Vec6& z0, double t0, double t1,
                   int steps);

/// 4 steps per unit of normalized time, at least 4.
int rk4_steps(double t0, double t1);

/// Pose from the fitted dynamics. Throws if the track has none.
Pose query_pose(const ObjectTrack& track, double t);

/// Pose used by the renderer: fitted dynamics when present, otherwise keyframe interpolation
/// (linear translation, shortest-arc angles).
Pose track_pose(const ObjectTrack& track, double t);

struct OdeLossGradient {
    double loss = 0.0;
    std::vector<double> weights;
    std::vector<Eigen::VectorXd> embeddings;
};

/// Mean over all observations of |position(z(t_k)) - xyz_k|^2 with gradients obtained by
/// backpropagating through the unrolled integrator.
OdeLossGradient ode_loss_gradient(const OdeModel& model, std::span<const ObjectTrack* const> tracks);

struct OdeFitResult {
    std::vector<double> loss_trace;
};

/// Joint Adam fit of a shared network and per-track embeddings. Each track receives a copy
/// of the fitted network. Throws std::runtime_error if the loss diverges.
OdeFitResult fit_ode(std::span<ObjectTrack* const> tracks, OdeModel& model, double learning_rate, int iterations);

/// Single-track convenience: creates a network sized to the track and fits it.
OdeFitResult fit_ode(ObjectTrack& track, double learning_rate, int iterations, std::uint64_t seed = 0);

/// Binary object mask, nonzero = inside.
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    bool inside(int x, int y) const {
        return x >= 0 && y >= 0 && x < width && y < height && data[std::size_t(y) * width + x] != 0;
    }
};

/// Per frame and object: mean of the world points whose projection lands inside the mask.
/// Frames with fewer than `min_points` hits give no sample; objects with no samples are dropped.
std::map<int, std::vector<TrackSample>> coarse_track(
    std::span<const std::vector<Vec3>> lidar_frames,
    const std::map<int, std::vector<std::optional<BinaryMask>>>& masks,
    std::span<const Camera> cameras,
    int min_points = 5,
    std::vector<std::string>* warnings = nullptr);

}  // namespace splatstream
