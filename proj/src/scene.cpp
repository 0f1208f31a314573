#include "splatstream/scene.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace splatstream {

std::size_t SceneModel::gaussian_count() const {
    std::size_t n = static_gaussians.size();
    for (const auto& [id, gs] : dynamic_gaussians) {
        n += gs.size();
    }
    return n;
}

GaussianTable SceneModel::table() {
    std::vector<Gaussian3D*> entries;
    entries.reserve(gaussian_count());
    for (Gaussian3D& g : static_gaussians) {
        entries.push_back(&g);
    }
    for (auto& [id, gs] : dynamic_gaussians) {
        for (Gaussian3D& g : gs) {
            entries.push_back(&g);
        }
    }
    return GaussianTable(std::move(entries));
}

Camera SceneModel::camera_at(double t) const {
    if (cameras.empty()) {
        throw std::logic_error("scene has no cameras");
    }
    const double f = time_to_frame(t, int(cameras.size()));
    const long k = std::lround(std::clamp(f, 0.0, double(cameras.size() - 1)));
    Camera cam = cameras[std::size_t(k)];
    cam.time = t;
    return cam;
}

void SceneModel::validate() const {
    if (frame_count < 1) {
        throw std::invalid_argument("scene frame_count must be >= 1");
    }
    for (const Camera& cam : cameras) {
        validate_camera(cam);
        if (cam.time < -1.0 || cam.time > 1.0) {
            throw std::invalid_argument("camera time outside [-1, 1]");
        }
    }
    for (const Gaussian3D& g : static_gaussians) {
        if (g.instance_id) {
            throw std::invalid_argument("static Gaussian carries an instance id");
        }
    }
    for (const auto& [id, gs] : dynamic_gaussians) {
        if (!tracks.contains(id)) {
            throw std::invalid_argument("dynamic Gaussians of instance " + std::to_string(id) + " have no track");
        }
        for (const Gaussian3D& g : gs) {
            if (g.instance_id != id) {
                throw std::invalid_argument("dynamic Gaussian filed under the wrong instance " + std::to_string(id));
            }
        }
    }
}

namespace {

bool same_gaussians(const std::vector<Gaussian3D>& a, const std::vector<Gaussian3D>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!same_gaussian(a[i], b[i])) return false;
    }
    return true;
}

bool same_camera(const Camera& a, const Camera& b) {
    return a.fx == b.fx && a.fy == b.fy && a.cx == b.cx && a.cy == b.cy && a.width == b.width &&
           a.height == b.height && a.time == b.time && a.world_to_camera.rotation == b.world_to_camera.rotation &&
           a.world_to_camera.translation == b.world_to_camera.translation;
}

bool same_track(const ObjectTrack& a, const ObjectTrack& b) {
    if (a.instance_id != b.instance_id || a.label != b.label || a.class_index != b.class_index ||
        a.coarse.size() != b.coarse.size() || a.poses.size() != b.poses.size() ||
        a.embedding.size() != b.embedding.size() || a.embedding != b.embedding ||
        a.initial_state != b.initial_state || a.t0 != b.t0 || a.active_start != b.active_start ||
        a.active_end != b.active_end || a.dynamics.has_value() != b.dynamics.has_value()) {
        return false;
    }
    for (std::size_t i = 0; i < a.coarse.size(); ++i) {
        if (a.coarse[i].t != b.coarse[i].t || a.coarse[i].xyz != b.coarse[i].xyz) return false;
    }
    for (std::size_t i = 0; i < a.poses.size(); ++i) {
        if (a.poses[i].t != b.poses[i].t || a.poses[i].pose.rotation != b.poses[i].pose.rotation ||
            a.poses[i].pose.translation != b.poses[i].pose.translation) {
            return false;
        }
    }
    if (a.dynamics) {
        const OdeModel& x = *a.dynamics;
        const OdeModel& y = *b.dynamics;
        if (!(x.shape == y.shape) || x.weights != y.weights || x.embedding_dim != y.embedding_dim ||
            x.position_scale != y.position_scale) {
            return false;
        }
    }
    return true;
}

}  // namespace

bool same_scene(const SceneModel& a, const SceneModel& b) {
    if (a.frame_count != b.frame_count || a.cameras.size() != b.cameras.size() ||
        a.dynamic_gaussians.size() != b.dynamic_gaussians.size() || a.tracks.size() != b.tracks.size() ||
        !same_gaussians(a.static_gaussians, b.static_gaussians)) {
        return false;
    }
    for (std::size_t i = 0; i < a.cameras.size(); ++i) {
        if (!same_camera(a.cameras[i], b.cameras[i])) return false;
    }
    for (const auto& [id, gs] : a.dynamic_gaussians) {
        auto it = b.dynamic_gaussians.find(id);
        if (it == b.dynamic_gaussians.end() || !same_gaussians(gs, it->second)) return false;
    }
    for (const auto& [id, tr] : a.tracks) {
        auto it = b.tracks.find(id);
        if (it == b.tracks.end() || !same_track(tr, it->second)) return false;
    }
    return true;
}

}  // namespace splatstream
