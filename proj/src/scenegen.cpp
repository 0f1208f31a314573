#include "splatstream/scenegen.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

namespace splatstream {

using nlohmann::json;

namespace {

constexpr std::array<std::array<float, 3>, 8> kPalette = {{
    {0.85f, 0.30f, 0.25f},
    {0.25f, 0.55f, 0.85f},
    {0.90f, 0.80f, 0.30f},
    {0.35f, 0.75f, 0.40f},
    {0.60f, 0.40f, 0.75f},
    {0.95f, 0.60f, 0.20f},
    {0.50f, 0.50f, 0.50f},
    {0.80f, 0.85f, 0.90f},
}};

Eigen::Vector3f palette_color(const Eigen::Vector3f& p, std::uint64_t salt) {
    std::uint64_t h = salt * 0x9E3779B97F4A7C15ull;
    for (int k = 0; k < 3; ++k) {
        h ^= std::uint64_t(std::int64_t(std::floor(p[k]))) + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    }
    h ^= h >> 31;
    h *= 0xBF58476D1CE4E5B9ull;
    h ^= h >> 29;
    const auto& c = kPalette[h % kPalette.size()];
    return {c[0], c[1], c[2]};
}

json vec_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Vec3 vec3_from(const json& j) {
    if (!j.is_array() || j.size() != 3) throw std::runtime_error("expected a 3-vector");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Eigen::VectorXd vecx_from(const json& j) {
    Eigen::VectorXd v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v[Eigen::Index(i)] = j[i].get<double>();
    return v;
}

const char* trajectory_name(Trajectory t) {
    return t == Trajectory::circular ? "circular" : "constant_velocity";
}

Trajectory trajectory_from(const std::string& s) {
    if (s == "constant_velocity") return Trajectory::constant_velocity;
    if (s == "circular") return Trajectory::circular;
    throw std::invalid_argument("unknown trajectory '" + s + "'");
}

}  // namespace

void validate_spec(const SceneSpec& spec) {
    if (spec.segment_count < 1 || spec.frames_per_segment < 1) {
        throw std::invalid_argument("scene spec needs at least one segment and one frame per segment");
    }
    if (!(spec.segment_length > 0.0) || !(spec.static_density > 0.0) || !(spec.building_height > 0.0)) {
        throw std::invalid_argument("scene spec lengths and densities must be positive");
    }
    if (!(spec.facade_fraction >= 0.0 && spec.facade_fraction <= 1.0)) {
        throw std::invalid_argument("facade_fraction must lie in [0, 1]");
    }
    if (!(spec.facade_distance > spec.ground_near) || !(spec.ground_near > 0.0)) {
        throw std::invalid_argument("need 0 < ground_near < facade_distance");
    }
    if (!(spec.splat_scale > 0.0) || !(0.0 < spec.opacity_min && spec.opacity_min <= spec.opacity_max &&
                                      spec.opacity_max < 1.0)) {
        throw std::invalid_argument("need splat_scale > 0 and 0 < opacity_min <= opacity_max < 1");
    }
    if (spec.camera.width < 1 || spec.camera.height < 1 || !(spec.camera.tan_half_fov > 0.0)) {
        throw std::invalid_argument("camera spec invalid");
    }
    for (const ObjectSpec& o : spec.objects) {
        if (!(0 <= o.spawn_frame && o.spawn_frame < o.despawn_frame && o.despawn_frame <= spec.frame_count())) {
            throw std::invalid_argument("object '" + o.label + "' needs 0 <= spawn < despawn <= frame_count");
        }
        if (o.gaussian_count < 1 || !(o.size.minCoeff() > 0.0)) {
            throw std::invalid_argument("object '" + o.label + "' needs a positive size and Gaussian count");
        }
        if (o.class_index < 0) {
            throw std::invalid_argument("object class index must be nonnegative");
        }
    }
}

SceneSpec default_street_spec(std::uint64_t seed) {
    SceneSpec spec;
    spec.seed = seed;
    ObjectSpec car;
    car.label = "car";
    car.class_index = 0;
    car.spawn_frame = 2;
    car.despawn_frame = 22;
    car.start = Vec3(1.0, 5.0, 0.0);
    car.velocity = Vec3(0.8, 0.0, 0.0);
    car.gaussian_count = 400;
    ObjectSpec cyclist;
    cyclist.label = "cyclist";
    cyclist.class_index = 1;
    cyclist.spawn_frame = 0;
    cyclist.despawn_frame = 24;
    cyclist.trajectory = Trajectory::circular;
    cyclist.center = Vec3(14.0, 4.5, 0.0);
    cyclist.radius = 1.0;
    cyclist.angular_speed = 0.3;
    cyclist.size = Vec3(1.8, 0.6, 1.6);
    cyclist.gaussian_count = 150;
    spec.objects = {car, cyclist};
    return spec;
}

SceneSpec replicate_segments(const SceneSpec& base, int segments) {
    if (segments < 1) {
        throw std::invalid_argument("replicate_segments: need at least one segment");
    }
    SceneSpec out = base;
    out.segment_count = segments;
    out.objects.clear();
    for (int s = 0; s < segments; ++s) {
        for (ObjectSpec o : base.objects) {
            const int df = s * base.frames_per_segment;
            const Vec3 dx(s * base.segment_length, 0.0, 0.0);
            o.spawn_frame += df;
            o.despawn_frame += df;
            o.start += dx;
            o.center += dx;
            out.objects.push_back(o);
        }
    }
    return out;
}

void to_json(json& j, const SceneSpec& spec) {
    j = json{{"seed", spec.seed},
             {"segment_count", spec.segment_count},
             {"frames_per_segment", spec.frames_per_segment},
             {"segment_length", spec.segment_length},
             {"static_density", spec.static_density},
             {"facade_fraction", spec.facade_fraction},
             {"splat_scale", spec.splat_scale},
             {"opacity_min", spec.opacity_min},
             {"opacity_max", spec.opacity_max},
             {"building_height", spec.building_height},
             {"facade_distance", spec.facade_distance},
             {"ground_near", spec.ground_near},
             {"camera",
              {{"width", spec.camera.width},
               {"height", spec.camera.height},
               {"tan_half_fov", spec.camera.tan_half_fov},
               {"mount_height", spec.camera.mount_height}}}};
    json objects = json::array();
    for (const ObjectSpec& o : spec.objects) {
        objects.push_back({{"label", o.label},
                           {"class_index", o.class_index},
                           {"spawn_frame", o.spawn_frame},
                           {"despawn_frame", o.despawn_frame},
                           {"trajectory", trajectory_name(o.trajectory)},
                           {"start", vec_json(o.start)},
                           {"velocity", vec_json(o.velocity)},
                           {"center", vec_json(o.center)},
                           {"radius", o.radius},
                           {"angular_speed", o.angular_speed},
                           {"phase", o.phase},
                           {"size", vec_json(o.size)},
                           {"gaussian_count", o.gaussian_count}});
    }
    j["objects"] = objects;
}

void from_json(const json& j, SceneSpec& spec) {
    // Missing keys keep their defaults so hand-written specs can be short.
    spec = SceneSpec{};
    auto opt = [&j](const char* key, auto& field) {
        if (j.contains(key)) j.at(key).get_to(field);
    };
    opt("seed", spec.seed);
    opt("segment_count", spec.segment_count);
    opt("frames_per_segment", spec.frames_per_segment);
    opt("segment_length", spec.segment_length);
    opt("static_density", spec.static_density);
    opt("facade_fraction", spec.facade_fraction);
    opt("splat_scale", spec.splat_scale);
    opt("opacity_min", spec.opacity_min);
    opt("opacity_max", spec.opacity_max);
    opt("building_height", spec.building_height);
    opt("facade_distance", spec.facade_distance);
    opt("ground_near", spec.ground_near);
    if (j.contains("camera")) {
        const json& c = j.at("camera");
        if (c.contains("width")) c.at("width").get_to(spec.camera.width);
        if (c.contains("height")) c.at("height").get_to(spec.camera.height);
        if (c.contains("tan_half_fov")) c.at("tan_half_fov").get_to(spec.camera.tan_half_fov);
        if (c.contains("mount_height")) c.at("mount_height").get_to(spec.camera.mount_height);
    }
    if (j.contains("objects")) {
        for (const json& jo : j.at("objects")) {
            ObjectSpec o;
            if (jo.contains("label")) jo.at("label").get_to(o.label);
            if (jo.contains("class_index")) jo.at("class_index").get_to(o.class_index);
            jo.at("spawn_frame").get_to(o.spawn_frame);
            jo.at("despawn_frame").get_to(o.despawn_frame);
            if (jo.contains("trajectory")) o.trajectory = trajectory_from(jo.at("trajectory").get<std::string>());
            if (jo.contains("start")) o.start = vec3_from(jo.at("start"));
            if (jo.contains("velocity")) o.velocity = vec3_from(jo.at("velocity"));
            if (jo.contains("center")) o.center = vec3_from(jo.at("center"));
            if (jo.contains("radius")) jo.at("radius").get_to(o.radius);
            if (jo.contains("angular_speed")) jo.at("angular_speed").get_to(o.angular_speed);
            if (jo.contains("phase")) jo.at("phase").get_to(o.phase);
            if (jo.contains("size")) o.size = vec3_from(jo.at("size"));
            if (jo.contains("gaussian_count")) jo.at("gaussian_count").get_to(o.gaussian_count);
            spec.objects.push_back(o);
        }
    }
}

Pose object_pose(const ObjectSpec& o, int frame) {
    const double k = double(frame - o.spawn_frame);
    Pose p;
    if (o.trajectory == Trajectory::constant_velocity) {
        p.translation = o.start + k * o.velocity;
        if (o.velocity.head<2>().norm() > 0.0) {
            p.rotation[0] = std::atan2(o.velocity.y(), o.velocity.x());
        }
    } else {
        const double phi = o.phase + o.angular_speed * k;
        p.translation = o.center + o.radius * Vec3(std::cos(phi), std::sin(phi), 0.0);
        const double turn = o.angular_speed >= 0.0 ? 0.5 : -0.5;
        p.rotation[0] = std::remainder(phi + turn * std::numbers::pi, 2.0 * std::numbers::pi);
    }
    return p;
}

GeneratedScene generate_scene(const SceneSpec& spec) {
    validate_spec(spec);
    GeneratedScene out;
    out.spec = spec;
    SceneModel& scene = out.scene;
    const int frames = spec.frame_count();
    scene.frame_count = frames;

    const CameraSpec& cs = spec.camera;
    const double fx = 0.5 * cs.width / cs.tan_half_fov;
    const double step = spec.segment_length / spec.frames_per_segment;
    for (int f = 0; f < frames; ++f) {
        const Vec3 eye((f + 0.5) * step, 0.0, cs.mount_height);
        scene.cameras.push_back(look_at_camera(eye, Vec3::UnitY(), Vec3::UnitZ(), fx, fx, cs.width, cs.height,
                                               normalize_time(f, frames)));
    }

    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> jitter(0.0, 1.0);
    std::uniform_real_distribution<float> opacity(float(spec.opacity_min), float(spec.opacity_max));

    const double L = spec.segment_length;
    const double H = spec.building_height;
    const double D = spec.facade_distance;
    const double depth = D - spec.ground_near;
    const long per_segment = std::lround(spec.static_density * L);
    const long facade = std::lround(spec.facade_fraction * double(per_segment));
    const long ground = per_segment - facade;
    const double facade_spacing = std::sqrt(L * H / double(std::max(facade, 1L)));
    const double ground_spacing = std::sqrt(L * depth / double(std::max(ground, 1L)));
    for (int s = 0; s < spec.segment_count; ++s) {
        const double x0 = s * L;
        for (long i = 0; i < facade; ++i) {
            const Vec3 p(x0 + unit(rng) * L, D + 0.02 * jitter(rng), unit(rng) * H);
            const double angle = unit(rng) * std::numbers::pi;
            const float ls = float(std::log(spec.splat_scale * facade_spacing));
            const Eigen::Quaternionf q(Eigen::AngleAxisf(float(angle), Eigen::Vector3f::UnitY()));
            const Eigen::Vector3f pf = p.cast<float>();
            scene.static_gaussians.push_back(make_gaussian(pf, Eigen::Vector3f(ls + 0.3f, ls - 2.0f, ls - 0.3f), q,
                                                           opacity(rng),
                                                           GaussianColor::constant(palette_color(pf, 1))));
            out.truth.static_segment.push_back(s);
        }
        for (long i = 0; i < ground; ++i) {
            const Vec3 p(x0 + unit(rng) * L, spec.ground_near + unit(rng) * depth, 0.0);
            const double angle = unit(rng) * std::numbers::pi;
            const float ls = float(std::log(spec.splat_scale * ground_spacing));
            const Eigen::Quaternionf q(Eigen::AngleAxisf(float(angle), Eigen::Vector3f::UnitZ()));
            const Eigen::Vector3f pf = p.cast<float>();
            scene.static_gaussians.push_back(make_gaussian(pf, Eigen::Vector3f(ls + 0.3f, ls - 0.3f, ls - 2.0f), q,
                                                           opacity(rng),
                                                           GaussianColor::constant(palette_color(pf, 2))));
            out.truth.static_segment.push_back(s);
        }
    }

    for (std::size_t k = 0; k < spec.objects.size(); ++k) {
        const ObjectSpec& o = spec.objects[k];
        const int id = int(k) + 1;
        std::vector<Gaussian3D>& gs = scene.dynamic_gaussians[id];
        const Vec3 half = 0.5 * o.size;
        const double area = 2.0 * (o.size.x() * o.size.y() + o.size.y() * o.size.z() + o.size.x() * o.size.z());
        const float ls = float(std::log(0.5 * std::sqrt(area / o.gaussian_count)));
        const std::array<double, 3> face_area = {o.size.y() * o.size.z(), o.size.x() * o.size.z(),
                                                 o.size.x() * o.size.y()};
        for (int i = 0; i < o.gaussian_count; ++i) {
            // Uniform over the box surface: pick a face by area, then a point on it.
            double r = unit(rng) * 0.5 * area;
            int axis = 0;
            while (axis < 2 && r > face_area[axis]) r -= face_area[axis++];
            Vec3 p(unit(rng) * 2.0 - 1.0, unit(rng) * 2.0 - 1.0, unit(rng) * 2.0 - 1.0);
            p[axis] = unit(rng) < 0.5 ? -1.0 : 1.0;
            p = p.cwiseProduct(half) + Vec3(0.0, 0.0, half.z());
            Eigen::Vector3f scale = Eigen::Vector3f::Constant(ls);
            scale[axis] = ls - 2.0f;
            const Eigen::Vector3f pf = p.cast<float>();
            gs.push_back(make_gaussian(pf, scale, Eigen::Quaternionf::Identity(), opacity(rng),
                                       GaussianColor::constant(palette_color(pf, 3 + std::uint64_t(o.class_index))),
                                       id));
        }

        ObjectTrack track;
        track.instance_id = id;
        track.label = o.label;
        track.class_index = o.class_index;
        std::vector<std::optional<Pose>>& truth = out.truth.object_poses[id];
        truth.assign(std::size_t(frames), std::nullopt);
        for (int f = o.spawn_frame; f < o.despawn_frame; ++f) {
            const Pose pose = object_pose(o, f);
            const double t = normalize_time(f, frames);
            track.poses.push_back({t, pose});
            track.coarse.push_back({t, pose.translation});
            truth[std::size_t(f)] = pose;
        }
        track.active_start = normalize_time(o.spawn_frame, frames);
        track.active_end = normalize_time(o.despawn_frame - 1, frames);
        prepare_track(track, 16, spec.seed);
        scene.tracks[id] = std::move(track);
    }

    for (const Gaussian3D& g : scene.static_gaussians) out.truth.colors.push_back(g.color.rgb);
    for (const auto& [id, gs] : scene.dynamic_gaussians) {
        for (const Gaussian3D& g : gs) out.truth.colors.push_back(g.color.rgb);
    }
    scene.validate();
    return out;
}

std::vector<std::uint32_t> visible_set(const GeneratedScene& generated, int frame, double margin) {
    const SceneModel& scene = generated.scene;
    const Camera& cam = scene.cameras.at(std::size_t(frame));
    auto in_view = [&](const Vec3& world) {
        const Vec3 pc = cam.world_to_camera.apply(world);
        if (!(pc.z() > 0.01)) return false;
        const double u = cam.fx * pc.x() / pc.z() + cam.cx;
        const double v = cam.fy * pc.y() / pc.z() + cam.cy;
        return u >= -margin && u <= cam.width + margin && v >= -margin && v <= cam.height + margin;
    };
    std::vector<std::uint32_t> out;
    std::uint32_t index = 0;
    for (const Gaussian3D& g : scene.static_gaussians) {
        if (in_view(g.position.cast<double>())) out.push_back(index);
        ++index;
    }
    for (const auto& [id, gs] : scene.dynamic_gaussians) {
        const std::optional<Pose>& pose = generated.truth.object_poses.at(id)[std::size_t(frame)];
        for (const Gaussian3D& g : gs) {
            if (pose && in_view(pose->to_rigid().apply(g.position.cast<double>()))) out.push_back(index);
            ++index;
        }
    }
    return out;
}

json camera_to_json(const Camera& c) {
    json r = json::array();
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) r.push_back(c.world_to_camera.rotation(i, k));
    return {{"fx", c.fx},     {"fy", c.fy},         {"cx", c.cx},          {"cy", c.cy},
            {"width", c.width}, {"height", c.height}, {"time", c.time},     {"rotation", r},
            {"translation", vec_json(c.world_to_camera.translation)}};
}

Camera camera_from_json(const json& j) {
    Camera c;
    j.at("fx").get_to(c.fx);
    j.at("fy").get_to(c.fy);
    j.at("cx").get_to(c.cx);
    j.at("cy").get_to(c.cy);
    j.at("width").get_to(c.width);
    j.at("height").get_to(c.height);
    j.at("time").get_to(c.time);
    const json& r = j.at("rotation");
    if (r.size() != 9) throw std::runtime_error("camera rotation needs 9 entries");
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) c.world_to_camera.rotation(i, k) = r[std::size_t(3 * i + k)].get<double>();
    c.world_to_camera.translation = vec3_from(j.at("translation"));
    return c;
}

std::filesystem::path scene_manifest_path(const std::filesystem::path& path) {
    std::string s = path.string();
    for (const char* suffix : {".scene.json", ".scene.bin"}) {
        if (s.ends_with(suffix)) {
            s.resize(s.size() - std::strlen(suffix));
            break;
        }
    }
    return s + ".scene.json";
}

std::filesystem::path scene_blob_path(const std::filesystem::path& path) {
    std::string s = scene_manifest_path(path).string();
    s.resize(s.size() - 5);
    return s + ".bin";
}

namespace {

void put_f32(std::vector<char>& buf, float v) {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
    for (int k = 0; k < 4; ++k) buf.push_back(char((bits >> (8 * k)) & 0xFF));
}

void put_i32(std::vector<char>& buf, std::int32_t v) {
    const std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
    for (int k = 0; k < 4; ++k) buf.push_back(char((bits >> (8 * k)) & 0xFF));
}

std::uint32_t get_u32(const char* p) {
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= std::uint32_t(static_cast<unsigned char>(p[k])) << (8 * k);
    return v;
}

float get_f32(const char* p) { return std::bit_cast<float>(get_u32(p)); }

// Record layout: position 3, log_scale 3, quaternion (x, y, z, w) 4, opacity 1, rgb 3,
// visibility 2, life 2 as float32, then int32 instance id (-1 = static).
// Field-colored Gaussians store rgb = (-1, -1, -1).
void put_record(std::vector<char>& buf, const Gaussian3D& g) {
    for (int k = 0; k < 3; ++k) put_f32(buf, g.position[k]);
    for (int k = 0; k < 3; ++k) put_f32(buf, g.log_scale[k]);
    put_f32(buf, g.rotation.x());
    put_f32(buf, g.rotation.y());
    put_f32(buf, g.rotation.z());
    put_f32(buf, g.rotation.w());
    put_f32(buf, g.opacity);
    for (int k = 0; k < 3; ++k) put_f32(buf, g.color.from_field ? -1.0f : g.color.rgb[k]);
    put_f32(buf, g.visibility.start);
    put_f32(buf, g.visibility.end);
    put_f32(buf, g.life.start);
    put_f32(buf, g.life.end);
    put_i32(buf, g.instance_id.value_or(-1));
}

Gaussian3D get_record(const char* p) {
    Gaussian3D g;
    for (int k = 0; k < 3; ++k) g.position[k] = get_f32(p + 4 * k);
    for (int k = 0; k < 3; ++k) g.log_scale[k] = get_f32(p + 12 + 4 * k);
    g.rotation = Eigen::Quaternionf(get_f32(p + 36), get_f32(p + 24), get_f32(p + 28), get_f32(p + 32));
    g.opacity = get_f32(p + 40);
    Eigen::Vector3f rgb(get_f32(p + 44), get_f32(p + 48), get_f32(p + 52));
    g.color = rgb[0] < 0.0f ? GaussianColor::field() : GaussianColor::constant(rgb);
    g.visibility = {get_f32(p + 56), get_f32(p + 60)};
    g.life = {get_f32(p + 64), get_f32(p + 68)};
    const std::int32_t id = std::bit_cast<std::int32_t>(get_u32(p + 72));
    if (id >= 0) g.instance_id = id;
    if (!g.position.allFinite() || !g.log_scale.allFinite() || !g.rotation.coeffs().allFinite()) {
        throw std::runtime_error("scene blob holds a non-finite Gaussian");
    }
    return g;
}

json track_json(const ObjectTrack& t) {
    json coarse = json::array();
    for (const TrackSample& s : t.coarse) coarse.push_back({{"t", s.t}, {"xyz", vec_json(s.xyz)}});
    json poses = json::array();
    for (const TimedPose& p : t.poses) {
        poses.push_back({{"t", p.t}, {"rotation", vec_json(p.pose.rotation)}, {"translation", vec_json(p.pose.translation)}});
    }
    json j = {{"instance_id", t.instance_id},
              {"label", t.label},
              {"class_index", t.class_index},
              {"coarse", coarse},
              {"poses", poses},
              {"embedding", vec_json(t.embedding)},
              {"initial_state", vec_json(t.initial_state)},
              {"t0", t.t0},
              {"active_start", t.active_start},
              {"active_end", t.active_end}};
    if (t.dynamics) {
        const OdeModel& m = *t.dynamics;
        j["dynamics"] = {{"layer_sizes", m.shape.layer_sizes()},
                         {"hidden_activation", activation_name(m.shape.hidden_activation())},
                         {"output_activation", activation_name(m.shape.output_activation())},
                         {"weights", m.weights},
                         {"embedding_dim", m.embedding_dim},
                         {"position_scale", m.position_scale}};
    }
    return j;
}

ObjectTrack track_from(const json& j) {
    ObjectTrack t;
    j.at("instance_id").get_to(t.instance_id);
    j.at("label").get_to(t.label);
    j.at("class_index").get_to(t.class_index);
    for (const json& s : j.at("coarse")) t.coarse.push_back({s.at("t").get<double>(), vec3_from(s.at("xyz"))});
    for (const json& p : j.at("poses")) {
        t.poses.push_back({p.at("t").get<double>(), {vec3_from(p.at("rotation")), vec3_from(p.at("translation"))}});
    }
    t.embedding = vecx_from(j.at("embedding"));
    const Eigen::VectorXd z0 = vecx_from(j.at("initial_state"));
    if (z0.size() != 6) throw std::runtime_error("track initial_state needs 6 entries");
    t.initial_state = z0;
    j.at("t0").get_to(t.t0);
    j.at("active_start").get_to(t.active_start);
    j.at("active_end").get_to(t.active_end);
    if (j.contains("dynamics")) {
        const json& d = j.at("dynamics");
        OdeModel m;
        m.shape = MlpShape(d.at("layer_sizes").get<std::vector<int>>(),
                           activation_from_name(d.at("hidden_activation").get<std::string>()),
                           activation_from_name(d.at("output_activation").get<std::string>()));
        d.at("weights").get_to(m.weights);
        d.at("embedding_dim").get_to(m.embedding_dim);
        d.at("position_scale").get_to(m.position_scale);
        if (m.weights.size() != m.shape.parameter_count()) {
            throw std::runtime_error("track dynamics weight count does not match its layout");
        }
        t.dynamics = std::move(m);
    }
    return t;
}

}  // namespace

void save_scene(const SceneModel& scene, const std::filesystem::path& path, const SceneSpec* spec) {
    json j;
    j["format"] = "splatstream-scene";
    j["version"] = kSceneFormatVersion;
    j["frame_count"] = scene.frame_count;
    j["record_bytes"] = kGaussianRecordBytes;
    j["static_count"] = scene.static_gaussians.size();
    json dyn = json::array();
    for (const auto& [id, gs] : scene.dynamic_gaussians) dyn.push_back({{"instance_id", id}, {"count", gs.size()}});
    j["dynamic_counts"] = dyn;
    json cams = json::array();
    for (const Camera& c : scene.cameras) cams.push_back(camera_to_json(c));
    j["cameras"] = cams;
    json tracks = json::array();
    for (const auto& [id, t] : scene.tracks) tracks.push_back(track_json(t));
    j["tracks"] = tracks;
    if (spec) j["spec"] = *spec;

    std::vector<char> blob;
    blob.reserve(scene.gaussian_count() * kGaussianRecordBytes);
    for (const Gaussian3D& g : scene.static_gaussians) put_record(blob, g);
    for (const auto& [id, gs] : scene.dynamic_gaussians) {
        for (const Gaussian3D& g : gs) put_record(blob, g);
    }

    std::ofstream mf(scene_manifest_path(path));
    std::ofstream bf(scene_blob_path(path), std::ios::binary);
    if (!mf || !bf) {
        throw std::runtime_error("cannot write scene files for " + path.string());
    }
    mf << j.dump(1) << "\n";
    bf.write(blob.data(), std::streamsize(blob.size()));
    if (!mf || !bf) {
        throw std::runtime_error("failed writing scene files for " + path.string());
    }
}

SceneModel load_scene(const std::filesystem::path& path, SceneSpec* spec) {
    const auto mpath = scene_manifest_path(path);
    std::ifstream mf(mpath);
    if (!mf) {
        throw std::runtime_error("cannot open " + mpath.string());
    }
    json j;
    try {
        j = json::parse(mf);
    } catch (const json::parse_error& e) {
        throw std::runtime_error("malformed scene manifest " + mpath.string() + ": " + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != "splatstream-scene") {
            throw std::runtime_error(mpath.string() + " is not a scene manifest");
        }
        const int version = j.at("version").get<int>();
        if (version != kSceneFormatVersion) {
            throw std::runtime_error("scene format version " + std::to_string(version) + " is not supported (expected " +
                                     std::to_string(kSceneFormatVersion) + ")");
        }
        if (j.at("record_bytes").get<std::size_t>() != kGaussianRecordBytes) {
            throw std::runtime_error("unexpected Gaussian record size");
        }
        SceneModel scene;
        j.at("frame_count").get_to(scene.frame_count);
        for (const json& c : j.at("cameras")) scene.cameras.push_back(camera_from_json(c));
        for (const json& t : j.at("tracks")) {
            ObjectTrack track = track_from(t);
            const int id = track.instance_id;
            scene.tracks[id] = std::move(track);
        }
        const std::size_t static_count = j.at("static_count").get<std::size_t>();
        std::vector<std::pair<int, std::size_t>> dyn;
        std::size_t total = static_count;
        for (const json& d : j.at("dynamic_counts")) {
            dyn.emplace_back(d.at("instance_id").get<int>(), d.at("count").get<std::size_t>());
            total += dyn.back().second;
        }

        const auto bpath = scene_blob_path(path);
        std::ifstream bf(bpath, std::ios::binary | std::ios::ate);
        if (!bf) {
            throw std::runtime_error("cannot open " + bpath.string());
        }
        const std::size_t size = std::size_t(bf.tellg());
        if (size != total * kGaussianRecordBytes) {
            throw std::runtime_error(bpath.string() + " holds " + std::to_string(size) + " bytes, expected " +
                                     std::to_string(total * kGaussianRecordBytes));
        }
        bf.seekg(0);
        std::vector<char> blob(size);
        bf.read(blob.data(), std::streamsize(size));
        if (!bf) {
            throw std::runtime_error("failed reading " + bpath.string());
        }
        const char* p = blob.data();
        scene.static_gaussians.reserve(static_count);
        for (std::size_t i = 0; i < static_count; ++i, p += kGaussianRecordBytes) {
            scene.static_gaussians.push_back(get_record(p));
        }
        for (const auto& [id, count] : dyn) {
            std::vector<Gaussian3D>& gs = scene.dynamic_gaussians[id];
            gs.reserve(count);
            for (std::size_t i = 0; i < count; ++i, p += kGaussianRecordBytes) gs.push_back(get_record(p));
        }
        scene.validate();
        if (spec && j.contains("spec")) {
            *spec = j.at("spec").get<SceneSpec>();
        }
        return scene;
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed scene manifest " + mpath.string() + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error("inconsistent scene " + mpath.string() + ": " + e.what());
    }
}

PointCloud scene_points(const SceneModel& scene) {
    PointCloud cloud;
    for (const Gaussian3D& g : scene.static_gaussians) cloud.points.push_back(g.position.cast<double>());
    for (const auto& [id, gs] : scene.dynamic_gaussians) {
        const ObjectTrack& track = scene.tracks.at(id);
        const Rigid pose = track_pose(track, track.active_start).to_rigid();
        for (const Gaussian3D& g : gs) cloud.points.push_back(pose.apply(g.position.cast<double>()));
    }
    return cloud;
}

}  // namespace splatstream
