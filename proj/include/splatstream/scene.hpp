#pragma once

#include "splatstream/core.hpp"
#include "splatstream/motion.hpp"
#include "splatstream/tvis.hpp"

#include <map>
#include <vector>

namespace splatstream {

struct SceneModel {
    std::vector<Gaussian3D> static_gaussians;
    /// Object-local Gaussians per instance id.
    std::map<int, std::vector<Gaussian3D>> dynamic_gaussians;
    std::map<int, ObjectTrack> tracks;
    /// One camera per timestep.
    std::vector<Camera> cameras;
    int frame_count = 1;

    std::size_t gaussian_count() const;

    /// Flat order used everywhere an index refers to "a Gaussian of the scene":
    /// static Gaussians first, then each instance's Gaussians by ascending id.
    GaussianTable table();

    /// Camera for time t: the one of the nearest frame, carrying time t.
    Camera camera_at(double t) const;

    /// Throws std::invalid_argument on broken invariants.
    void validate() const;
};

bool same_scene(const SceneModel& a, const SceneModel& b);

}  // namespace splatstream
