#include "splatstream/motion.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace splatstream {

OdeModel OdeModel::create(int embedding_dim, int hidden_width, int hidden_layers, std::uint64_t seed,
                          double position_scale) {
    if (embedding_dim < 0 || hidden_width < 1 || hidden_layers < 1 || !(position_scale > 0.0)) {
        throw std::invalid_argument("invalid NeuralODE architecture");
    }
    OdeModel m;
    m.embedding_dim = embedding_dim;
    m.position_scale = position_scale;
    std::vector<int> sizes{6 + 1 + embedding_dim};
    for (int l = 0; l < hidden_layers; ++l) {
        sizes.push_back(hidden_width);
    }
    sizes.push_back(6);
    m.shape = MlpShape(sizes, Activation::tanh, Activation::identity);
    m.weights.assign(m.shape.parameter_count(), 0.0);
    m.shape.initialize(m.weights, seed, 0.1);
    return m;
}

namespace {

Eigen::VectorXd rhs_input(const Vec6& u, double t, const Eigen::VectorXd& embedding) {
    Eigen::VectorXd x(7 + embedding.size());
    x.head<6>() = u;
    x[6] = t;
    x.tail(embedding.size()) = embedding;
    return x;
}

struct Stage {
    MlpShape::Tape tape;
};

struct StepRecord {
    Stage stages[4];
};

/// One integration from t0 to t1 with its tape, for backpropagation.
struct TapedTrajectory {
    double h = 0.0;
    std::vector<StepRecord> steps;
    Vec6 end = Vec6::Zero();
};

Vec6 eval_stage(const OdeModel& m, const Vec6& u, double t, const Eigen::VectorXd& c, Stage& stage) {
    const Eigen::VectorXd y = m.shape.forward(m.weights, rhs_input(u, t, c), &stage.tape);
    return y.head<6>();
}

TapedTrajectory integrate_taped(const OdeModel& m, const Eigen::VectorXd& c, double t0, double t1) {
    TapedTrajectory traj;
    const int n = rk4_steps(t0, t1);
    traj.h = (t1 - t0) / n;
    traj.steps.resize(n);
    const double h = traj.h;
    Vec6 u = Vec6::Zero();
    for (int s = 0; s < n; ++s) {
        const double t = t0 + s * h;
        StepRecord& rec = traj.steps[s];
        const Vec6 k1 = eval_stage(m, u, t, c, rec.stages[0]);
        const Vec6 k2 = eval_stage(m, u + 0.5 * h * k1, t + 0.5 * h, c, rec.stages[1]);
        const Vec6 k3 = eval_stage(m, u + 0.5 * h * k2, t + 0.5 * h, c, rec.stages[2]);
        const Vec6 k4 = eval_stage(m, u + h * k3, t + h, c, rec.stages[3]);
        u += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!u.allFinite()) {
            throw std::runtime_error("NeuralODE state became non-finite during integration");
        }
    }
    traj.end = u;
    return traj;
}

/// Vector-Jacobian product through one stage; returns dL/du for the stage input.
Vec6 stage_vjp(const OdeModel& m, const Stage& stage, const Vec6& grad_k, std::span<double> grad_w,
               Eigen::VectorXd& grad_c) {
    const Eigen::VectorXd gx = m.shape.backward(m.weights, stage.tape, grad_k, grad_w);
    grad_c += gx.tail(grad_c.size());
    return gx.head<6>();
}

void backprop(const OdeModel& m, const TapedTrajectory& traj, Vec6 grad_end, std::span<double> grad_w,
              Eigen::VectorXd& grad_c) {
    const double h = traj.h;
    for (std::size_t s = traj.steps.size(); s-- > 0;) {
        const StepRecord& rec = traj.steps[s];
        Vec6 dk1 = h / 6.0 * grad_end;
        Vec6 dk2 = h / 3.0 * grad_end;
        Vec6 dk3 = h / 3.0 * grad_end;
        const Vec6 dk4 = h / 6.0 * grad_end;
        Vec6 du = grad_end;
        const Vec6 d4 = stage_vjp(m, rec.stages[3], dk4, grad_w, grad_c);
        du += d4;
        dk3 += h * d4;
        const Vec6 d3 = stage_vjp(m, rec.stages[2], dk3, grad_w, grad_c);
        du += d3;
        dk2 += 0.5 * h * d3;
        const Vec6 d2 = stage_vjp(m, rec.stages[1], dk2, grad_w, grad_c);
        du += d2;
        dk1 += 0.5 * h * d2;
        du += stage_vjp(m, rec.stages[0], dk1, grad_w, grad_c);
        grad_end = du;
    }
}

Vec6 state_scale(const OdeModel& m) {
    Vec6 s = Vec6::Ones();
    s.head<3>().setConstant(m.position_scale);
    return s;
}

double wrap_angle(double a) { return std::remainder(a, 2.0 * std::numbers::pi); }

}  // namespace

Vec6 OdeModel::rhs(const Vec6& u, double t, const Eigen::VectorXd& embedding) const {
    return shape.forward(weights, rhs_input(u, t, embedding)).head<6>();
}

void prepare_track(ObjectTrack& track, int embedding_dim, std::uint64_t seed) {
    if (track.coarse.empty()) {
        throw std::invalid_argument("prepare_track: track has no coarse samples");
    }
    std::sort(track.coarse.begin(), track.coarse.end(),
              [](const TrackSample& a, const TrackSample& b) { return a.t < b.t; });
    track.t0 = track.coarse.front().t;
    track.initial_state.setZero();
    track.initial_state.head<3>() = track.coarse.front().xyz;
    std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ull * std::uint64_t(track.instance_id + 1)));
    std::normal_distribution<double> dist(0.0, 0.5);
    track.embedding.resize(embedding_dim);
    for (int k = 0; k < embedding_dim; ++k) {
        track.embedding[k] = dist(rng);
    }
}

int rk4_steps(double t0, double t1) {
    return std::max(4, static_cast<int>(std::ceil(4.0 * std::abs(t1 - t0) - 1e-12)));
}

Vec6 integrate_rk4(const std::function<Vec6(const Vec6&, double)>& rhs, const Vec6& z0, double t0, double t1,
                   int steps) {
    if (steps < 1) {
        throw std::invalid_argument("integrate_rk4: steps must be >= 1");
    }
    const double h = (t1 - t0) / steps;
    Vec6 z = z0;
    for (int s = 0; s < steps; ++s) {
        const double t = t0 + s * h;
        const Vec6 k1 = rhs(z, t);
        const Vec6 k2 = rhs(z + 0.5 * h * k1, t + 0.5 * h);
        const Vec6 k3 = rhs(z + 0.5 * h * k2, t + 0.5 * h);
        const Vec6 k4 = rhs(z + h * k3, t + h);
        z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!z.allFinite()) {
            throw std::runtime_error("integrate_rk4: state became non-finite at step " + std::to_string(s));
        }
    }
    return z;
}

Pose query_pose(const ObjectTrack& track, double t) {
    if (!track.dynamics) {
        throw std::logic_error("query_pose: track " + std::to_string(track.instance_id) + " has no fitted dynamics");
    }
    const OdeModel& m = *track.dynamics;
    const auto rhs = [&](const Vec6& u, double tau) { return m.rhs(u, tau, track.embedding); };
    const Vec6 u = integrate_rk4(rhs, Vec6::Zero(), track.t0, t, rk4_steps(track.t0, t));
    const Vec6 z = track.initial_state + state_scale(m).cwiseProduct(u);
    return {z.tail<3>(), z.head<3>()};
}

Pose track_pose(const ObjectTrack& track, double t) {
    if (track.dynamics) {
        return query_pose(track, t);
    }
    const auto& kf = track.poses;
    if (kf.empty()) {
        if (!track.coarse.empty()) {
            // Fall back to the coarse positions with zero rotation.
            auto it = std::lower_bound(track.coarse.begin(), track.coarse.end(), t,
                                       [](const TrackSample& s, double v) { return s.t < v; });
            if (it == track.coarse.begin()) return {Vec3::Zero(), it->xyz};
            if (it == track.coarse.end()) return {Vec3::Zero(), track.coarse.back().xyz};
            const auto& a = *(it - 1);
            const double w = (t - a.t) / (it->t - a.t);
            return {Vec3::Zero(), (1.0 - w) * a.xyz + w * it->xyz};
        }
        return {};
    }
    auto it = std::lower_bound(kf.begin(), kf.end(), t, [](const TimedPose& p, double v) { return p.t < v; });
    if (it == kf.begin()) return it->pose;
    if (it == kf.end()) return kf.back().pose;
    const TimedPose& a = *(it - 1);
    const TimedPose& b = *it;
    const double w = (t - a.t) / (b.t - a.t);
    Pose p;
    p.translation = (1.0 - w) * a.pose.translation + w * b.pose.translation;
    for (int k = 0; k < 3; ++k) {
        p.rotation[k] = a.pose.rotation[k] + w * wrap_angle(b.pose.rotation[k] - a.pose.rotation[k]);
    }
    return p;
}

OdeLossGradient ode_loss_gradient(const OdeModel& model, std::span<const ObjectTrack* const> tracks) {
    OdeLossGradient out;
    out.weights.assign(model.weights.size(), 0.0);
    std::size_t observations = 0;
    for (const ObjectTrack* track : tracks) {
        observations += track->coarse.size();
    }
    if (observations == 0) {
        throw std::invalid_argument("ode_loss_gradient: no observations");
    }
    const double inv_n = 1.0 / double(observations);
    const double s = model.position_scale;
    for (const ObjectTrack* track : tracks) {
        if (track->embedding.size() != model.embedding_dim) {
            throw std::invalid_argument("ode_loss_gradient: embedding size does not match the network");
        }
        Eigen::VectorXd grad_c = Eigen::VectorXd::Zero(model.embedding_dim);
        for (const TrackSample& obs : track->coarse) {
            if (obs.t == track->t0) {
                out.loss += (track->initial_state.head<3>() - obs.xyz).squaredNorm() * inv_n;
                continue;
            }
            const TapedTrajectory traj = integrate_taped(model, track->embedding, track->t0, obs.t);
            const Vec3 pos = track->initial_state.head<3>() + s * traj.end.head<3>();
            const Vec3 err = pos - obs.xyz;
            out.loss += err.squaredNorm() * inv_n;
            Vec6 g = Vec6::Zero();
            g.head<3>() = 2.0 * inv_n * s * err;
            backprop(model, traj, g, out.weights, grad_c);
        }
        out.embeddings.push_back(std::move(grad_c));
    }
    return out;
}

namespace {

struct Adam {
    explicit Adam(std::size_t n, double lr) : m(n, 0.0), v(n, 0.0), lr(lr) {}

    void step(std::span<double> params, std::span<const double> grad) {
        ++t;
        const double c1 = 1.0 - std::pow(beta1, t);
        const double c2 = 1.0 - std::pow(beta2, t);
        for (std::size_t i = 0; i < params.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
            params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
        }
    }

    std::vector<double> m, v;
    double lr;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    int t = 0;
};

}  // namespace

OdeFitResult fit_ode(std::span<ObjectTrack* const> tracks, OdeModel& model, double learning_rate, int iterations) {
    for (ObjectTrack* track : tracks) {
        if (track->coarse.size() < 3) {
            throw std::invalid_argument("fit_ode: track " + std::to_string(track->instance_id) +
                                        " needs at least 3 coarse positions");
        }
        if (track->embedding.size() != model.embedding_dim) {
            prepare_track(*track, model.embedding_dim);
        }
    }
    const std::size_t nw = model.weights.size();
    const std::size_t ne = std::size_t(model.embedding_dim);
    std::vector<double> params(nw + ne * tracks.size());
    std::vector<double> grad(params.size());
    Adam adam(params.size(), learning_rate);
    std::vector<const ObjectTrack*> view(tracks.begin(), tracks.end());

    auto scatter = [&] {
        std::copy(params.begin(), params.begin() + nw, model.weights.begin());
        for (std::size_t k = 0; k < tracks.size(); ++k) {
            for (std::size_t j = 0; j < ne; ++j) {
                tracks[k]->embedding[j] = params[nw + k * ne + j];
            }
        }
    };
    std::copy(model.weights.begin(), model.weights.end(), params.begin());
    for (std::size_t k = 0; k < tracks.size(); ++k) {
        for (std::size_t j = 0; j < ne; ++j) {
            params[nw + k * ne + j] = tracks[k]->embedding[j];
        }
    }

    OdeFitResult result;
    double initial = -1.0;
    for (int it = 0; it < iterations; ++it) {
        const OdeLossGradient lg = ode_loss_gradient(model, view);
        if (!std::isfinite(lg.loss)) {
            throw std::runtime_error("fit_ode: non-finite loss at iteration " + std::to_string(it));
        }
        if (initial < 0.0) {
            initial = lg.loss;
        }
        if (lg.loss > 10.0 * std::max(initial, 1e-2)) {
            throw std::runtime_error("fit_ode: diverged at iteration " + std::to_string(it) + " (loss " +
                                     std::to_string(lg.loss) + ", initial " + std::to_string(initial) + ")");
        }
        result.loss_trace.push_back(lg.loss);
        std::copy(lg.weights.begin(), lg.weights.end(), grad.begin());
        for (std::size_t k = 0; k < tracks.size(); ++k) {
            std::copy(lg.embeddings[k].data(), lg.embeddings[k].data() + ne, grad.begin() + nw + k * ne);
        }
        adam.step(params, grad);
        scatter();
    }
    result.loss_trace.push_back(ode_loss_gradient(model, view).loss);
    for (ObjectTrack* track : tracks) {
        track->dynamics = model;
    }
    return result;
}

OdeFitResult fit_ode(ObjectTrack& track, double learning_rate, int iterations, std::uint64_t seed) {
    prepare_track(track, 16, seed);
    double extent = 0.0;
    for (const TrackSample& s : track.coarse) {
        extent = std::max(extent, (s.xyz - track.coarse.front().xyz).norm());
    }
    OdeModel model = OdeModel::create(16, 64, 2, seed, std::max(1.0, extent));
    ObjectTrack* tracks[] = {&track};
    return fit_ode(tracks, model, learning_rate, iterations);
}

std::map<int, std::vector<TrackSample>> coarse_track(
    std::span<const std::vector<Vec3>> lidar_frames,
    const std::map<int, std::vector<std::optional<BinaryMask>>>& masks,
    std::span<const Camera> cameras,
    int min_points,
    std::vector<std::string>* warnings) {
    if (lidar_frames.size() != cameras.size()) {
        throw std::invalid_argument("coarse_track: lidar frames and cameras differ in count");
    }
    std::map<int, std::vector<TrackSample>> tracks;
    for (const auto& [id, per_frame] : masks) {
        if (per_frame.size() != cameras.size()) {
            throw std::invalid_argument("coarse_track: mask sequence of object " + std::to_string(id) +
                                        " is not aligned with the camera frames");
        }
        std::vector<TrackSample> samples;
        for (std::size_t f = 0; f < cameras.size(); ++f) {
            if (!per_frame[f]) {
                continue;
            }
            const Camera& cam = cameras[f];
            const BinaryMask& mask = *per_frame[f];
            Vec3 sum = Vec3::Zero();
            int hits = 0;
            for (const Vec3& p : lidar_frames[f]) {
                const Vec3 pc = cam.world_to_camera.apply(p);
                if (pc.z() <= 0.01) {
                    continue;
                }
                const long u = std::lround(cam.fx * pc.x() / pc.z() + cam.cx);
                const long v = std::lround(cam.fy * pc.y() / pc.z() + cam.cy);
                if (mask.inside(int(u), int(v))) {
                    sum += p;
                    ++hits;
                }
            }
            if (hits >= min_points) {
                samples.push_back({cam.time, sum / hits});
            }
        }
        if (samples.empty()) {
            const std::string msg = "object " + std::to_string(id) + " has no usable mask frames; dropped";
            if (warnings) {
                warnings->push_back(msg);
            } else {
                std::clog << "warning: " << msg << "\n";
            }
            continue;
        }
        tracks.emplace(id, std::move(samples));
    }
    return tracks;
}

}  // namespace splatstream
