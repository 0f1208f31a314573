// Command-line front end: scene generation, rendering, benchmarking, track fitting,
// initialization augmentation and image metrics.

#include "splatstream/bench.hpp"
#include "splatstream/init.hpp"
#include "splatstream/io.hpp"
#include "splatstream/metrics.hpp"
#include "splatstream/motion.hpp"
#include "splatstream/parallel.hpp"
#include "splatstream/render.hpp"
#include "splatstream/scenegen.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace splatstream;

namespace {

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error("malformed JSON in " + path.string() + ": " + e.what());
    }
}

void write_json(const json& j, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path q(p);
    return q.is_absolute() ? q : base / q;
}

std::string number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream s;
    s.precision(10);
    s << v;
    return s.str();
}

struct LodFlags {
    double r = 4.0;
    double pmax = 0.5;
    double depth = 50.0;
    double offset = 0.05;
};

void add_lod_flags(CLI::App* cmd, LodFlags& f) {
    cmd->add_option("--lod-r", f.r, "LOD size threshold in px; 0 disables LOD")->capture_default_str();
    cmd->add_option("--lod-pmax", f.pmax, "maximum drop probability")->capture_default_str();
    cmd->add_option("--lod-depth", f.depth, "reference depth D, meters")->capture_default_str();
    cmd->add_option("--lod-offset", f.offset, "jitter scale per axis, meters")->capture_default_str();
}

LodConfig lod_from(const LodFlags& f, std::uint64_t seed) {
    LodConfig c;
    c.r = f.r;
    c.p_max = f.pmax;
    c.reference_depth = f.depth;
    c.offset_scale = Vec3::Constant(f.offset);
    c.rng_seed = seed;
    validate_lod_config(c);
    return c;
}

std::vector<PipelineMode> modes_from(const std::string& s) {
    if (s == "both") return {PipelineMode::conventional, PipelineMode::streamlined};
    return {mode_from_name(s)};
}

json stats_json(const RenderStats& s) {
    return {{"candidates", s.candidates},
            {"projected", s.projected},
            {"frustum_passed", s.frustum_passed},
            {"lod_culled", s.lod_culled},
            {"blended", s.blended},
            {"singular", s.singular},
            {"filter_ms", s.time.filter_ms},
            {"transform_ms", s.time.transform_ms},
            {"project_ms", s.time.project_ms},
            {"lod_ms", s.time.lod_ms},
            {"color_ms", s.time.color_ms},
            {"blend_ms", s.time.blend_ms},
            {"total_ms", s.time.total_ms}};
}

std::vector<Camera> cameras_from(const json& j) {
    std::vector<Camera> cams;
    for (const json& c : j) {
        cams.push_back(camera_from_json(c));
        validate_camera(cams.back());
    }
    return cams;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dynamic-scene Gaussian splatting renderer"};
    app.require_subcommand(1);
    // --seed and --workers may also follow the subcommand.
    app.fallthrough();
    int workers_flag = 0;
    std::uint64_t seed = 0;
    bool seed_given = false;
    app.add_option("--workers", workers_flag, "OpenMP threads (default: SPLATSTREAM_WORKERS or all cores)");
    auto* seed_opt = app.add_option("--seed", seed, "seed for every random choice")->capture_default_str();

    // gen-scene
    auto* gen = app.add_subcommand("gen-scene", "generate a synthetic street scene");
    std::string gen_spec, gen_out = "scene", gen_ply;
    int gen_segments = 0;
    gen->add_option("--spec", gen_spec, "scene spec JSON (default: built-in street)");
    gen->add_option("--segments", gen_segments, "override the segment count");
    gen->add_option("--out", gen_out, "output stem; writes <stem>.scene.json and <stem>.scene.bin")->capture_default_str();
    gen->add_option("--ply", gen_ply, "also export Gaussian centers as PLY");

    // render
    auto* ren = app.add_subcommand("render", "render views of a scene");
    std::string ren_scene, ren_mode = "streamlined", ren_out = "render_out";
    double t_start = -1.0, t_end = 1.0;
    int ren_frames = 0;
    bool ren_sweep = false, ren_depth = false;
    LodFlags ren_lod;
    ren->add_option("--scene", ren_scene, "scene path or stem")->required();
    ren->add_option("--mode", ren_mode, "conventional, streamlined or both")
        ->check(CLI::IsMember({"conventional", "streamlined", "both"}))
        ->capture_default_str();
    ren->add_option("--t-start", t_start, "first normalized time")->capture_default_str();
    ren->add_option("--t-end", t_end, "last normalized time")->capture_default_str();
    ren->add_option("--frames", ren_frames, "views between t-start and t-end (default: scene frames in range)");
    ren->add_flag("--sweep", ren_sweep, "run a training sweep and commit visibility before rendering");
    ren->add_flag("--depth", ren_depth, "also write depth maps");
    ren->add_option("--out-dir", ren_out, "output directory")->capture_default_str();
    add_lod_flags(ren, ren_lod);

    // bench
    auto* ben = app.add_subcommand("bench", "scaling benchmark");
    std::string ben_spec, ben_scales = "1,2,4,8", ben_out = "bench_out", ben_mode = "both";
    int ben_repeats = 3;
    LodFlags ben_lod;
    ben_lod.r = 0.0;
    ben->add_option("--spec", ben_spec, "base (one-segment) scene spec JSON");
    ben->add_option("--scales", ben_scales, "comma-separated segment counts")->capture_default_str();
    ben->add_option("--mode", ben_mode, "conventional, streamlined or both")
        ->check(CLI::IsMember({"conventional", "streamlined", "both"}))
        ->capture_default_str();
    ben->add_option("--repeats", ben_repeats, "timed rounds")->capture_default_str();
    ben->add_option("--out-dir", ben_out, "output directory")->capture_default_str();
    add_lod_flags(ben, ben_lod);

    // fit-track
    auto* fit = app.add_subcommand("fit-track", "fit NeuralODE tracks from LiDAR and object masks");
    std::string fit_input, fit_out = "poses.json";
    double fit_lr = 3e-3;
    int fit_iters = 1500, fit_min_points = 5;
    fit->add_option("--input", fit_input,
                    "JSON with \"cameras\", \"lidar\" (PLY per frame) and \"masks\" ({id: [PGM or null per frame]})")
        ->required();
    fit->add_option("--out", fit_out, "poses JSON")->capture_default_str();
    fit->add_option("--lr", fit_lr, "Adam learning rate")->capture_default_str();
    fit->add_option("--iterations", fit_iters, "optimizer iterations")->capture_default_str();
    fit->add_option("--min-points", fit_min_points, "LiDAR hits needed for a coarse sample")->capture_default_str();

    // augment
    auto* aug = app.add_subcommand("augment", "BEV-semantic augmentation of an initialization cloud");
    std::string aug_cloud, aug_sem, aug_labels, aug_out = "augmented.ply";
    std::vector<std::string> aug_targets{"building"};
    BevConfig bev;
    double aug_voxel = 0.15;
    aug->add_option("--cloud", aug_cloud, "input PLY")->required();
    aug->add_option("--semantics", aug_sem, "JSON with \"cameras\" and \"semantic_images\" (16-bit PGM per camera)")
        ->required();
    aug->add_option("--labels", aug_labels, "label map JSON {id: name}")->required();
    aug->add_option("--targets", aug_targets, "label names to augment")->delimiter(',')->capture_default_str();
    aug->add_option("--bev-grid", bev.grid, "BEV cell size, meters")->capture_default_str();
    aug->add_option("--dz", bev.dz, "column spacing, meters")->capture_default_str();
    aug->add_option("--height", bev.height, "column height h, meters")->capture_default_str();
    aug->add_option("--voxel", aug_voxel, "voxel downsampling grid before labeling; 0 disables")->capture_default_str();
    aug->add_option("--out", aug_out, "output PLY")->capture_default_str();

    // metrics
    auto* met = app.add_subcommand("metrics", "PSNR and SSIM between two PPM images");
    std::string met_a, met_b;
    met->add_option("a", met_a, "first image")->required();
    met->add_option("b", met_b, "second image")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    seed_given = seed_opt->count() > 0;

    try {
        set_workers(workers_flag);

        if (*gen) {
            SceneSpec spec = gen_spec.empty() ? default_street_spec() : read_json(gen_spec).get<SceneSpec>();
            if (seed_given) spec.seed = seed;
            if (gen_segments > 0) spec = replicate_segments(spec, gen_segments);
            const GeneratedScene g = generate_scene(spec);
            save_scene(g.scene, gen_out, &g.spec);
            if (!gen_ply.empty()) write_ply(scene_points(g.scene), gen_ply);
            std::cout << "wrote " << scene_manifest_path(gen_out).string() << " (" << g.scene.gaussian_count()
                      << " Gaussians, " << g.scene.frame_count << " frames)\n";
        } else if (*ren) {
            SceneModel scene = load_scene(ren_scene);
            RenderConfig config;
            config.lod = lod_from(ren_lod, seed);
            config.blend.depth = ren_depth;
            std::vector<double> times;
            if (ren_frames > 0) {
                for (int k = 0; k < ren_frames; ++k) {
                    times.push_back(ren_frames == 1 ? t_start : t_start + (t_end - t_start) * k / (ren_frames - 1));
                }
            } else {
                for (const Camera& c : scene.cameras) {
                    if (c.time >= t_start - 1e-12 && c.time <= t_end + 1e-12) times.push_back(c.time);
                }
            }
            if (times.empty()) throw std::runtime_error("no views in the requested time range");
            fs::create_directories(ren_out);
            const std::vector<PipelineMode> modes = modes_from(ren_mode);
            std::vector<std::vector<Image>> images(modes.size());
            json stats = json::array();
            for (std::size_t m = 0; m < modes.size(); ++m) {
                Renderer renderer(scene, config);
                if (ren_sweep && modes[m] == PipelineMode::streamlined) renderer.sweep();
                for (std::size_t k = 0; k < times.size(); ++k) {
                    RenderOutput out = renderer.render(times[k], modes[m]);
                    char name[64];
                    std::snprintf(name, sizeof name, "%s_%04zu", mode_name(modes[m]), k);
                    write_ppm(out.image, fs::path(ren_out) / (std::string(name) + ".ppm"));
                    if (out.depth_map) write_depth(*out.depth_map, fs::path(ren_out) / (std::string(name) + ".depth"));
                    json s = stats_json(out.stats);
                    s["mode"] = mode_name(modes[m]);
                    s["t"] = times[k];
                    stats.push_back(s);
                    images[m].push_back(std::move(out.image));
                }
            }
            write_json(stats, fs::path(ren_out) / "stats.json");
            std::cout << "rendered " << times.size() << " views per mode into " << ren_out << "\n";
            if (modes.size() == 2) {
                double diff = 0.0, worst = std::numeric_limits<double>::infinity();
                for (std::size_t k = 0; k < times.size(); ++k) {
                    diff = std::max(diff, max_abs_difference(images[0][k], images[1][k]));
                    worst = std::min(worst, psnr(images[0][k], images[1][k]));
                }
                std::cout << "max per-pixel diff " << number(diff) << "\nmin psnr " << number(worst) << "\n";
            }
        } else if (*ben) {
            SceneSpec spec = ben_spec.empty() ? default_street_spec() : read_json(ben_spec).get<SceneSpec>();
            if (seed_given) spec.seed = seed;
            BenchOptions opt;
            opt.scales.clear();
            std::stringstream ss(ben_scales);
            for (std::string item; std::getline(ss, item, ',');) {
                try {
                    opt.scales.push_back(std::stoi(item));
                } catch (const std::exception&) {
                    throw std::runtime_error("bad scale '" + item + "'");
                }
            }
            opt.modes = modes_from(ben_mode);
            opt.render = default_bench_config();
            opt.render.lod = lod_from(ben_lod, seed);
            opt.repeats = ben_repeats;
            const BenchReport report = run_scaling_benchmark(spec, opt);
            fs::create_directories(ben_out);
            {
                std::ofstream csv(fs::path(ben_out) / "bench.csv");
                write_bench_csv(report.records, csv);
                std::ofstream dat(fs::path(ben_out) / "bench.dat");
                write_bench_dat(report.records, dat);
            }
            write_bench_csv(report.records, std::cout);
            std::cout << "workers " << workers() << "\n";
            for (const BenchRecord& r : report.records) {
                if (r.below_resolution) {
                    std::cout << "warning: " << mode_name(r.mode) << " scale " << r.scale
                              << " timing is below the clock resolution\n";
                }
            }
            for (std::size_t k = 0; k < report.min_psnr.size(); ++k) {
                std::cout << "scale " << opt.scales[k] << " min psnr " << number(report.min_psnr[k]) << "\n";
            }
        } else if (*fit) {
            const fs::path base = fs::path(fit_input).parent_path();
            const json in = read_json(fit_input);
            const std::vector<Camera> cams = cameras_from(in.at("cameras"));
            std::vector<std::vector<Vec3>> lidar;
            for (const json& p : in.at("lidar")) lidar.push_back(read_ply(resolve(base, p.get<std::string>())).points);
            std::map<int, std::vector<std::optional<BinaryMask>>> masks;
            for (const auto& [key, list] : in.at("masks").items()) {
                auto& seq = masks[std::stoi(key)];
                for (const json& m : list) {
                    if (m.is_null()) seq.push_back(std::nullopt);
                    else seq.push_back(to_mask(read_pgm(resolve(base, m.get<std::string>()))));
                }
            }
            std::vector<std::string> warnings;
            const auto coarse = coarse_track(lidar, masks, cams, fit_min_points, &warnings);
            for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
            std::vector<ObjectTrack> tracks;
            double extent = 1.0;
            for (const auto& [id, samples] : coarse) {
                if (samples.size() < 3) {
                    std::cerr << "warning: object " << id << " has " << samples.size()
                              << " coarse positions; skipped\n";
                    continue;
                }
                ObjectTrack t;
                t.instance_id = id;
                t.coarse = samples;
                prepare_track(t, 16, seed);
                for (const TrackSample& s : t.coarse) extent = std::max(extent, (s.xyz - t.coarse.front().xyz).norm());
                tracks.push_back(std::move(t));
            }
            if (tracks.empty()) throw std::runtime_error("no object has enough coarse positions to fit");
            OdeModel model = OdeModel::create(16, 64, 2, seed, extent);
            std::vector<ObjectTrack*> ptrs;
            for (ObjectTrack& t : tracks) ptrs.push_back(&t);
            const OdeFitResult fr = fit_ode(ptrs, model, fit_lr, fit_iters);
            json out = {{"final_loss", fr.loss_trace.back()}, {"objects", json::array()}};
            for (const ObjectTrack& t : tracks) {
                json poses = json::array();
                for (const Camera& c : cams) {
                    if (c.time < t.coarse.front().t || c.time > t.coarse.back().t) continue;
                    const Pose p = query_pose(t, c.time);
                    poses.push_back({{"t", c.time},
                                     {"rotation", {p.rotation.x(), p.rotation.y(), p.rotation.z()}},
                                     {"translation", {p.translation.x(), p.translation.y(), p.translation.z()}}});
                }
                out["objects"].push_back({{"instance_id", t.instance_id}, {"poses", poses}});
            }
            write_json(out, fit_out);
            std::cout << "fitted " << tracks.size() << " tracks, final loss " << number(fr.loss_trace.back())
                      << "; wrote " << fit_out << "\n";
        } else if (*aug) {
            const fs::path base = fs::path(aug_sem).parent_path();
            const json sem = read_json(aug_sem);
            const std::vector<Camera> cams = cameras_from(sem.at("cameras"));
            const json& imgs = sem.at("semantic_images");
            if (imgs.size() != cams.size()) throw std::runtime_error("need one semantic image per camera");
            const auto label_map = read_label_map(aug_labels);
            const std::set<std::uint16_t> targets = labels_named(label_map, aug_targets);

            const PointCloud input = read_ply(aug_cloud);
            std::vector<Vec3> points = aug_voxel > 0.0 ? voxel_downsample(input.points, aug_voxel) : input.points;
            SemanticPointCloud cloud;
            cloud.points = points;
            cloud.labels.assign(points.size(), kUnknownLabel);
            cloud.label_names = label_map;
            for (std::size_t c = 0; c < cams.size(); ++c) {
                const SemanticPointCloud labeled =
                    label_points(points, read_pgm(resolve(base, imgs[c].get<std::string>())), cams[c]);
                for (std::size_t i = 0; i < points.size(); ++i) {
                    if (cloud.labels[i] == kUnknownLabel) cloud.labels[i] = labeled.labels[i];
                }
            }
            const std::vector<Vec3> extra = bev_augment(cloud, targets, bev, cams);
            PointCloud out;
            out.points = merge(points, extra);
            out.labels = cloud.labels;
            out.labels.resize(out.points.size(), kUnknownLabel);
            write_ply(out, aug_out);
            std::cout << "kept " << points.size() << " points, added " << extra.size() << "; wrote " << aug_out
                      << "\n";
        } else if (*met) {
            const Image a = read_ppm(met_a);
            const Image b = read_ppm(met_b);
            std::cout << "PSNR " << number(psnr(a, b)) << "\nSSIM " << number(ssim(a, b)) << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
