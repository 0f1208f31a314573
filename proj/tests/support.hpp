#pragma once

#include "splatstream/core.hpp"

#include <random>

namespace splatstream::fixture {

inline Eigen::Quaterniond random_quaternion(std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
    q.normalize();
    return q;
}

inline Rigid random_rigid(std::mt19937_64& rng, double spread = 2.0) {
    std::uniform_real_distribution<double> u(-spread, spread);
    return {random_quaternion(rng).toRotationMatrix(), Vec3(u(rng), u(rng), u(rng))};
}

inline Pose random_pose(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> a(-3.0, 3.0);
    std::uniform_real_distribution<double> p(-1.4, 1.4);
    std::uniform_real_distribution<double> t(-10.0, 10.0);
    return {Vec3(a(rng), p(rng), a(rng)), Vec3(t(rng), t(rng), t(rng))};
}

inline Camera simple_camera(int w = 100, int h = 100, double f = 100.0) {
    Camera c;
    c.fx = c.fy = f;
    c.cx = w / 2.0;
    c.cy = h / 2.0;
    c.width = w;
    c.height = h;
    return c;
}

}  // namespace splatstream::fixture

#include "splatstream/motion.hpp"

namespace splatstream::fixture {

/// Track sampled at `frames` evenly spaced normalized times, position x0 + v * (t + 1).
inline ObjectTrack linear_track(int id, const Vec3& x0, const Vec3& v, int frames) {
    ObjectTrack t;
    t.instance_id = id;
    for (int k = 0; k < frames; ++k) {
        const double tk = normalize_time(k, frames);
        t.coarse.push_back({tk, x0 + v * (tk + 1.0)});
    }
    return t;
}

/// RMSE of fitted positions against x0 + v * (t + 1) at the given times.
inline double track_rmse(const ObjectTrack& t, const Vec3& x0, const Vec3& v, const std::vector<double>& times) {
    double se = 0.0;
    for (double tk : times) se += (query_pose(t, tk).translation - (x0 + v * (tk + 1.0))).squaredNorm();
    return std::sqrt(se / double(times.size()));
}

inline std::vector<double> sample_times(const ObjectTrack& t) {
    std::vector<double> out;
    for (const TrackSample& s : t.coarse) out.push_back(s.t);
    return out;
}

inline std::vector<double> midpoints(const ObjectTrack& t) {
    std::vector<double> out;
    for (std::size_t k = 0; k + 1 < t.coarse.size(); ++k) out.push_back(0.5 * (t.coarse[k].t + t.coarse[k + 1].t));
    return out;
}

}  // namespace splatstream::fixture
