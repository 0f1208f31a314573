#include "splatstream/render.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>
#include <string>

namespace splatstream {

namespace {

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double lap_ms() {
        const auto now = std::chrono::steady_clock::now();
        const double ms = std::chrono::duration<double, std::milli>(now - start_).count();
        start_ = now;
        return ms;
    }

private:
    std::chrono::steady_clock::time_point start_;
};

/// Per-instance state for one render call, indexed by the instance's slot.
struct InstanceFrame {
    bool active = false;
    Rigid object_to_world;
    Camera camera;
    /// Camera center expressed in the object's frame.
    Vec3 center_local = Vec3::Zero();
    int class_index = 0;
};

}  // namespace

const char* mode_name(PipelineMode mode) {
    return mode == PipelineMode::conventional ? "conventional" : "streamlined";
}

PipelineMode mode_from_name(const std::string& name) {
    if (name == "conventional") return PipelineMode::conventional;
    if (name == "streamlined") return PipelineMode::streamlined;
    throw std::invalid_argument("unknown pipeline mode '" + name + "'");
}

Renderer::Renderer(SceneModel& scene, RenderConfig config)
    : scene_(scene), config_(std::move(config)), table_(scene.table()), schedule_(config_.reset_period) {
    scene_.validate();
    validate_lod_config(config_.lod);
    instance_of_.assign(scene_.static_gaussians.size(), -1);
    instance_of_.reserve(table_.size());
    for (const auto& [id, gs] : scene_.dynamic_gaussians) {
        instance_of_.insert(instance_of_.end(), gs.size(), id);
    }
    refresh_index();
}

void Renderer::refresh_index() { index_ = TemporalIndex(table_, config_.temporal_buckets); }

bool Renderer::commit_visibility() {
    const bool reset = schedule_.commit(table_);
    refresh_index();
    return reset;
}

void Renderer::reset_visibility() {
    splatstream::reset_visibility(table_);
    refresh_index();
}

void Renderer::sweep() {
    const bool update = config_.update_life;
    config_.update_life = true;
    for (const Camera& cam : scene_.cameras) {
        render(cam, PipelineMode::streamlined);
    }
    config_.update_life = update;
    commit_visibility();
}

RenderOutput Renderer::render(double t, PipelineMode mode) { return render(scene_.camera_at(t), mode); }

RenderOutput Renderer::render(const Camera& camera, PipelineMode mode) {
    validate_camera(camera);
    if (camera.time < -1.0 || camera.time > 1.0) {
        throw std::invalid_argument("render: time " + std::to_string(camera.time) + " outside [-1, 1]");
    }
    return mode == PipelineMode::conventional ? render_conventional(camera) : render_streamlined(camera);
}

namespace {

struct Frame {
    const Camera* base = nullptr;
    Vec3 base_center = Vec3::Zero();
    std::map<int, InstanceFrame> instances;
    double time_frame = 0.0;
};

Frame make_frame(const SceneModel& scene, const Camera& camera) {
    Frame f;
    f.base = &camera;
    f.base_center = camera.center_world();
    f.time_frame = std::clamp(time_to_frame(camera.time, scene.frame_count), 0.0, double(scene.frame_count - 1));
    for (const auto& [id, gs] : scene.dynamic_gaussians) {
        auto it = scene.tracks.find(id);
        if (it == scene.tracks.end()) {
            throw std::invalid_argument("render: dynamic instance " + std::to_string(id) + " has no track");
        }
        InstanceFrame inst;
        inst.active = it->second.active_at(camera.time);
        inst.class_index = it->second.class_index;
        if (inst.active) {
            const Pose pose = track_pose(it->second, camera.time);
            inst.object_to_world = pose.to_rigid();
            inst.camera = camera.with_extrinsics(compose_se3(camera.world_to_camera, inst.object_to_world));
            inst.center_local = inst.object_to_world.inverse().apply(f.base_center);
        }
        f.instances.emplace(id, std::move(inst));
    }
    return f;
}

Eigen::Vector3f query_color(const Gaussian3D& g, const Vec3& own_position, double depth, const Frame& frame,
                            const InstanceFrame* inst, const NeuralFields* fields) {
    if (!g.color.from_field) {
        return g.color.rgb;
    }
    const FieldParams* params = nullptr;
    if (fields) {
        params = inst ? (fields->dynamic_field ? &*fields->dynamic_field : nullptr)
                      : (fields->static_field ? &*fields->static_field : nullptr);
    }
    if (!params) {
        return Eigen::Vector3f::Constant(0.5f);
    }
    FieldInput in;
    in.position = own_position;
    in.depth = depth;
    const Vec3 center = inst ? inst->center_local : frame.base_center;
    const Vec3 dir = own_position - center;
    in.direction = dir.norm() > 0.0 ? Vec3(dir.normalized()) : Vec3(Vec3::UnitZ());
    in.frame = std::min(frame.time_frame, double(params->config.frames - 1));
    if (inst) {
        in.class_index = std::min(inst->class_index, std::max(params->config.classes - 1, 0));
    }
    return field_forward(*params, in).cast<float>();
}

struct FinalEntry {
    std::uint32_t task;
    Vec3 offset;
    bool jittered;
};

}  // namespace

// Shared tail of both pipelines: cull, optional LOD, color, blend.
static void finish(const GaussianTable& table, const std::vector<int>& instance_of,
                           const RenderConfig& config, const Frame& frame, const std::vector<ProjectionTask>& tasks,
                           std::vector<ProjectedGaussian>& projected, bool use_lod, Stopwatch& watch,
                           RenderOutput& out) {
    const Camera& camera = *frame.base;
    const double margin = config.margin >= 0.0 ? config.margin : default_margin(camera.width, camera.height);
    const Mask mask = frustum_cull(projected, camera.width, camera.height, margin);
    out.frustum_mask.assign(table.size(), 0);
    std::vector<ProjectedGaussian> passed;
    std::vector<std::uint32_t> passed_task;
    for (std::size_t k = 0; k < tasks.size(); ++k) {
        if (mask[k]) {
            out.frustum_mask[tasks[k].source_index] = 1;
            passed.push_back(projected[k]);
            passed_task.push_back(std::uint32_t(k));
        }
    }
    out.stats.projected = tasks.size();
    out.stats.frustum_passed = passed.size();
    out.stats.time.project_ms += watch.lap_ms();

    std::vector<FinalEntry> finals;
    finals.reserve(passed.size());
    if (use_lod && config.lod.r > 0.0) {
        const LodResult lod = apply_lod(passed, config.lod, lod_stream_seed(config.lod.rng_seed, camera.time));
        out.stats.lod_culled = lod.culled;
        for (std::uint32_t k : lod.large) {
            finals.push_back({passed_task[k], Vec3::Zero(), false});
        }
        for (std::size_t j = 0; j < lod.small_kept.size(); ++j) {
            const std::uint32_t k = lod.small_kept[j];
            const ProjectionTask& task = tasks[passed_task[k]];
            // Re-project the jittered position through the same camera.
            ProjectedGaussian moved =
                project_gaussian(task.position + lod.offsets[j], task.covariance, *task.camera, config.projection);
            if (!moved.in_frustum) {
                ++out.stats.lod_culled;
                continue;
            }
            moved.source_index = task.source_index;
            projected[passed_task[k]] = moved;
            finals.push_back({passed_task[k], lod.offsets[j], true});
        }
    } else {
        for (std::uint32_t k : passed_task) {
            finals.push_back({k, Vec3::Zero(), false});
        }
    }
    out.stats.time.lod_ms = watch.lap_ms();

    std::vector<Splat> splats(finals.size());
    const auto nf = static_cast<std::int64_t>(finals.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t j = 0; j < nf; ++j) {
        const FinalEntry& e = finals[j];
        const ProjectionTask& task = tasks[e.task];
        const ProjectedGaussian& p = projected[e.task];
        const Gaussian3D& g = table[task.source_index];
        const int id = instance_of[task.source_index];
        const InstanceFrame* inst = id >= 0 ? &frame.instances.at(id) : nullptr;
        const Vec3 own = g.position.cast<double>() + e.offset;
        Splat& s = splats[j];
        s.mean = p.mean2d;
        s.cov = p.cov2d;
        s.depth = p.depth;
        s.color = query_color(g, own, p.depth, frame, inst, config.fields);
        s.opacity = g.opacity;
        s.source_index = task.source_index;
    }
    out.stats.time.color_ms = watch.lap_ms();

    BlendResult blended = blend(splats, camera.width, camera.height, config.blend);
    out.image = std::move(blended.image);
    out.depth_map = std::move(blended.depth);
    out.contributed_mask.assign(table.size(), 0);
    for (std::size_t j = 0; j < splats.size(); ++j) {
        if (blended.contributed[j]) {
            out.contributed_mask[splats[j].source_index] = 1;
        }
    }
    out.stats.blended = blended.blended;
    out.stats.singular = blended.singular;
    out.stats.time.blend_ms = watch.lap_ms();
}

RenderOutput Renderer::render_conventional(const Camera& camera) {
    Stopwatch total;
    Stopwatch watch;
    RenderOutput out;
    const Frame frame = make_frame(scene_, camera);

    // Local-to-global transformation of every active Gaussian, then projection of all of them.
    std::vector<std::uint32_t> included;
    included.reserve(table_.size());
    for (std::size_t i = 0; i < table_.size(); ++i) {
        const int id = instance_of_[i];
        if (id < 0 || frame.instances.at(id).active) {
            included.push_back(std::uint32_t(i));
        }
    }
    std::vector<ProjectionTask> tasks(included.size());
    const auto n = static_cast<std::int64_t>(included.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t k = 0; k < n; ++k) {
        const std::uint32_t i = included[k];
        const Gaussian3D& g = table_[i];
        ProjectionTask& task = tasks[k];
        task.source_index = i;
        task.camera = &camera;
        const Mat3 cov = build_covariance(g);
        const int id = instance_of_[i];
        if (id < 0) {
            task.position = g.position.cast<double>();
            task.covariance = cov;
        } else {
            const Rigid& w = frame.instances.at(id).object_to_world;
            task.position = w.apply(g.position.cast<double>());
            task.covariance = w.rotation * cov * w.rotation.transpose();
        }
    }
    out.stats.candidates = included.size();
    out.stats.time.transform_ms = watch.lap_ms();

    std::vector<ProjectedGaussian> projected = project_batch(tasks, config_.projection);
    finish(table_, instance_of_, config_, frame, tasks, projected, false, watch, out);
    out.stats.time.total_ms = total.lap_ms();
    return out;
}

RenderOutput Renderer::render_streamlined(const Camera& camera) {
    Stopwatch total;
    Stopwatch watch;
    RenderOutput out;
    const Frame frame = make_frame(scene_, camera);

    std::vector<std::uint32_t> candidates = index_.query(camera.time);
    std::erase_if(candidates, [&](std::uint32_t i) {
        const int id = instance_of_[i];
        return id >= 0 && !frame.instances.at(id).active;
    });
    out.stats.candidates = candidates.size();
    out.stats.time.filter_ms = watch.lap_ms();

    // Instance-specific projection: object-local geometry through per-object cameras.
    std::vector<ProjectionTask> tasks(candidates.size());
    const auto n = static_cast<std::int64_t>(candidates.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t k = 0; k < n; ++k) {
        const std::uint32_t i = candidates[k];
        const Gaussian3D& g = table_[i];
        const int id = instance_of_[i];
        ProjectionTask& task = tasks[k];
        task.source_index = i;
        task.position = g.position.cast<double>();
        task.covariance = build_covariance(g);
        task.camera = id < 0 ? &camera : &frame.instances.at(id).camera;
    }
    std::vector<ProjectedGaussian> projected = project_batch(tasks, config_.projection);
    finish(table_, instance_of_, config_, frame, tasks, projected, true, watch, out);

    if (config_.update_life) {
        Mask presented_mask(candidates.size(), 0);
        const Mask& source = config_.life_from_contribution ? out.contributed_mask : out.frustum_mask;
        for (std::size_t k = 0; k < candidates.size(); ++k) {
            presented_mask[k] = source[candidates[k]];
        }
        update_point_life(table_, candidates, presented_mask, camera.time);
    }
    out.stats.time.total_ms = total.lap_ms();
    return out;
}

RenderOutput render_view(SceneModel& scene, double t, PipelineMode mode, const RenderConfig& config) {
    Renderer renderer(scene, config);
    return renderer.render(t, mode);
}

}  // namespace splatstream
