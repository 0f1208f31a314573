// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Optional arguments select criteria by number, e.g. `acceptance 1 4`.

#include "oracles.hpp"
#include "support.hpp"

#include "splatstream/bench.hpp"
#include "splatstream/init.hpp"
#include "splatstream/lod.hpp"
#include "splatstream/metrics.hpp"
#include "splatstream/motion.hpp"
#include "splatstream/render.hpp"
#include "splatstream/scenegen.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

using namespace splatstream;

namespace {

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << "[violated: " << what << "] ";
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

RenderConfig lod_off() {
    RenderConfig c;
    c.lod.r = 0.0;
    return c;
}

void pipeline_equivalence(Verdict& v) {
    const auto t0 = std::chrono::steady_clock::now();
    double worst_diff = 0.0, worst_psnr = std::numeric_limits<double>::infinity();
    std::size_t views = 0, max_gaussians = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        GeneratedScene g = generate_scene(default_street_spec(seed));
        max_gaussians = std::max(max_gaussians, g.scene.gaussian_count());
        v.require(g.scene.cameras.front().width == 128 && g.scene.cameras.front().height == 128, "128x128 views");
        Renderer r(g.scene, lod_off());
        r.config().update_life = false;
        for (const Camera& cam : g.scene.cameras) {
            const RenderOutput a = r.render(cam.time, PipelineMode::conventional);
            const RenderOutput b = r.render(cam.time, PipelineMode::streamlined);
            worst_diff = std::max(worst_diff, max_abs_difference(a.image, b.image));
            worst_psnr = std::min(worst_psnr, psnr(a.image, b.image));
            ++views;
        }
    }
    const double secs = seconds_since(t0);
    v.require(max_gaussians <= 50000, "<= 50k Gaussians per scene");
    v.require(worst_diff < 1e-5, "max abs diff < 1e-5");
    v.require(worst_psnr >= 80.0, "PSNR >= 80 dB");
    v.require(secs < 120.0, "runtime < 2 min");
    v.detail << "5 scenes, " << views << " views, up to " << max_gaussians << " Gaussians; max diff " << worst_diff
             << ", min PSNR " << worst_psnr << " dB; " << secs << " s";
}

void instance_projection(Verdict& v) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    int projected = 0;
    for (int k = 0; k < 10000; ++k) {
        Camera base = fixture::simple_camera(128, 128, 64.0 + 64.0 * (u(rng) + 1.0));
        base.world_to_camera = fixture::random_rigid(rng, 5.0);
        const Pose pose = fixture::random_pose(rng);
        const Vec3 local(2 * u(rng), 2 * u(rng), 2 * u(rng));
        const Eigen::Quaterniond q = fixture::random_quaternion(rng);
        const Mat3 cov_local = build_covariance(Vec3(u(rng) - 1.0, u(rng) - 1.0, u(rng) - 1.0), q);

        // place the object so the Gaussian lands in front of the camera most of the time
        const Rigid cam_to_world = base.world_to_camera.inverse();
        Pose placed = pose;
        const Vec3 target = cam_to_world.apply(Vec3(3 * u(rng), 3 * u(rng), 4.0 + 3.0 * u(rng)));
        placed.translation = target - placed.to_rigid().rotation * local;
        const Rigid obj = placed.to_rigid();

        const Camera inst = build_instance_cameras(base, {{1, placed}}).at(1);
        const ProjectedGaussian a = project_gaussian(local, cov_local, inst);
        const ProjectedGaussian b =
            project_gaussian(obj.apply(local), obj.rotation * cov_local * obj.rotation.transpose(), base);
        if (a.in_frustum != b.in_frustum) {
            worst = std::numeric_limits<double>::infinity();
            continue;
        }
        if (!a.in_frustum) continue;
        ++projected;
        worst = std::max({worst, (a.mean2d - b.mean2d).cwiseAbs().maxCoeff(), std::abs(a.depth - b.depth),
                          (a.cov2d - b.cov2d).cwiseAbs().maxCoeff()});
    }
    v.require(worst <= 1e-9, "agreement within 1e-9 per component");
    v.require(projected > 9000, "most triples in front of the camera");
    v.detail << "10000 triples (" << projected << " in front); max component deviation " << worst;
}

void temporal_conservativeness(Verdict& v) {
    GeneratedScene g = generate_scene(replicate_segments(default_street_spec(11), 4));
    Renderer r(g.scene, lod_off());
    r.sweep();
    r.config().update_life = false;
    int mismatched_sets = 0;
    double worst_diff = 0.0;
    std::size_t conv = 0, stream = 0;
    for (const Camera& cam : g.scene.cameras) {
        const RenderOutput a = r.render(cam.time, PipelineMode::conventional);
        const RenderOutput b = r.render(cam.time, PipelineMode::streamlined);
        mismatched_sets += a.frustum_mask != b.frustum_mask;
        worst_diff = std::max(worst_diff, max_abs_difference(a.image, b.image));
        conv += a.stats.projected;
        stream += b.stats.projected;
    }
    v.require(mismatched_sets == 0, "visible sets equal at every training timestep");
    v.require(worst_diff < 1e-5, "images within 1e-5");
    v.detail << g.scene.cameras.size() << " timesteps, " << mismatched_sets << " set mismatches, max diff "
             << worst_diff << "; projected per view " << conv / g.scene.cameras.size() << " conventional vs "
             << stream / g.scene.cameras.size() << " streamlined";
}

void scalability(Verdict& v) {
    const auto t0 = std::chrono::steady_clock::now();
    BenchOptions opt;
    opt.scales = {1, 2, 4, 8};
    opt.render = default_bench_config();
    opt.repeats = 5;
    const BenchReport report = run_scaling_benchmark(default_street_spec(0), opt);
    const double secs = seconds_since(t0);
    double conv[2] = {0, 0}, stream[2] = {0, 0};
    for (const BenchRecord& r : report.records) {
        double* slot = r.mode == PipelineMode::conventional ? conv : stream;
        if (r.scale == 1) slot[0] = r.per_view_ms;
        if (r.scale == 8) slot[1] = r.per_view_ms;
        v.require(!r.below_resolution, "timings above clock resolution");
    }
    const double conv_ratio = conv[1] / conv[0];
    const double stream_ratio = stream[1] / stream[0];
    double min_psnr = std::numeric_limits<double>::infinity();
    for (double p : report.min_psnr) min_psnr = std::min(min_psnr, p);
    v.require(conv_ratio >= 3.0, "conventional scale-8 / scale-1 >= 3");
    v.require(stream_ratio <= 1.5, "streamlined scale-8 / scale-1 <= 1.5");
    v.require(min_psnr >= 45.0, "modes agree within PSNR 45 dB");
    v.require(secs < 600.0, "runtime < 10 min");
    std::ostringstream csv;
    write_bench_csv(report.records, csv);
    std::cout << csv.str();
    v.detail << "conventional " << conv[0] << " -> " << conv[1] << " ms (x" << conv_ratio << "), streamlined "
             << stream[0] << " -> " << stream[1] << " ms (x" << stream_ratio << "); min PSNR " << min_psnr
             << "; workers " << report.records.front().workers << "; " << secs << " s";
}

void lod_statistics(Verdict& v) {
    LodConfig c;
    c.p_max = 0.5;
    c.reference_depth = 50.0;
    v.require(drop_probability(0.0, c) == 0.01, "p(0) == 0.01");
    v.require(drop_probability(c.reference_depth, c) == c.p_max, "p(D) == p_max");
    v.require(drop_probability(10.0 * c.reference_depth, c) == c.p_max, "p(10D) == p_max");
    const std::size_t n = 10000;
    double worst_sigma = 0.0;
    for (double d : {5.0, 25.0, 50.0}) {
        std::vector<ProjectedGaussian> batch(n);
        for (std::uint32_t i = 0; i < n; ++i) {
            batch[i].cov2d = Mat2::Identity() * 0.25;
            batch[i].depth = d;
            batch[i].source_index = i;
            batch[i].in_frustum = true;
        }
        const LodResult r = apply_lod(batch, c, lod_stream_seed(77, d));
        const double keep = 1.0 - drop_probability(d, c);
        const double sigma = std::sqrt(n * keep * (1.0 - keep));
        const double z = std::abs(double(r.small_kept.size()) - n * keep) / sigma;
        worst_sigma = std::max(worst_sigma, z);
        v.detail << "d=" << d << " keep " << r.small_kept.size() << "/" << n << " (expected " << n * keep << "); ";
    }
    v.require(worst_sigma < 3.0, "keep rates within 3 binomial sigma");
    v.detail << "worst " << worst_sigma << " sigma";
}

void rk4_order(Verdict& v) {
    const auto err = [](int steps) {
        const Vec6 z = integrate_rk4([](const Vec6& z, double) { return z; }, Vec6::Constant(1.0), 0.0, 1.0, steps);
        return std::abs(z[0] - std::exp(1.0));
    };
    const double ratio = err(10) / err(20);
    v.require(ratio >= 12.0 && ratio <= 20.0, "halving ratio in [12, 20]");
    v.require(err(100) < 1e-7, "error at 100 steps < 1e-7");
    v.detail << "error(10)/error(20) = " << ratio << ", error(100) = " << err(100);
}

void ode_recovery(Verdict& v) {
    const Vec3 x0(2, 1, 0), vel(3, 0.5, 0);
    ObjectTrack cv = fixture::linear_track(1, x0, vel, 12);
    fit_ode(cv, 1e-3, 2000);
    const double train = fixture::track_rmse(cv, x0, vel, fixture::sample_times(cv));
    const double held = fixture::track_rmse(cv, x0, vel, fixture::midpoints(cv));

    const Vec3 s0(-1, 4, 0.5);
    ObjectTrack still = fixture::linear_track(2, s0, Vec3::Zero(), 12);
    fit_ode(still, 1e-3, 2000);
    const double still_rmse = fixture::track_rmse(still, s0, Vec3::Zero(), fixture::sample_times(still));

    const Vec3 a0(0, 0, 0), av(4, 0, 0), b0(1, 3, 0), bv(-2, 1, 0);
    ObjectTrack a = fixture::linear_track(1, a0, av, 12);
    ObjectTrack b = fixture::linear_track(2, b0, bv, 12);
    prepare_track(a, 16, 1);
    prepare_track(b, 16, 2);
    OdeModel shared = OdeModel::create(16, 64, 2, 0, 8.0);
    ObjectTrack* both[] = {&a, &b};
    fit_ode(both, shared, 1e-3, 2000);
    const double ra = fixture::track_rmse(a, a0, av, fixture::sample_times(a));
    const double rb = fixture::track_rmse(b, b0, bv, fixture::sample_times(b));

    v.require(train < 0.05, "constant velocity training RMSE < 0.05 m");
    v.require(held < 0.1, "held-out midpoint RMSE < 0.1 m");
    v.require(still_rmse < 0.01, "stationary RMSE < 0.01 m");
    v.require(ra < 0.1 && rb < 0.1, "shared network RMSE < 0.1 m each");
    v.detail << "constant velocity " << train << " m train, " << held << " m held-out; stationary " << still_rmse
             << " m; shared " << ra << " / " << rb << " m";
}

void field_gradients(Verdict& v) {
    std::mt19937_64 rng(808);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    std::size_t checked = 0, kinks = 0;
    for (int draw = 0; draw < 100; ++draw) {
        FieldConfig c;
        c.position_frequencies = 2;
        c.direction_frequencies = 1;
        c.hidden_width = 8;
        c.hidden_layers = 2;
        c.time_embedding_dim = 3;
        c.class_embedding_dim = 2;
        c.frames = 4;
        c.classes = draw % 2 ? 3 : 0;
        c.position_scale = 5.0;
        c.depth_scale = 20.0;
        c.seed = 5000 + draw;
        const FieldParams p = FieldParams::create(c);
        std::vector<FieldSample> batch(4);
        for (auto& s : batch) {
            s.input.position = Vec3(u(rng), u(rng), u(rng)) * 5.0;
            s.input.depth = 10.0 + 9.0 * u(rng);
            s.input.direction = Vec3(u(rng), u(rng), 1.0).normalized();
            s.input.frame = 1.5 + 1.5 * u(rng);
            if (c.classes) s.input.class_index = int(rng() % c.classes);
            s.target = Vec3(0.5 + 0.4 * u(rng), 0.5 + 0.4 * u(rng), 0.5 + 0.4 * u(rng));
        }
        const auto g = field_gradient(p, batch);
        const auto check = oracle::field_gradient_check(p, batch, g.gradient, 1e-4);
        worst = std::max(worst, check.max_relative_error);
        checked += check.checked;
        kinks += check.kinks;
    }
    v.require(worst < 1e-4, "relative error < 1e-4");

    FieldConfig c;
    c.position_frequencies = 2;
    c.direction_frequencies = 1;
    c.hidden_width = 16;
    c.hidden_layers = 2;
    c.time_embedding_dim = 3;
    c.frames = 4;
    c.position_scale = 5.0;
    c.depth_scale = 20.0;
    c.seed = 8;
    std::vector<FieldSample> ramp(32);
    for (auto& s : ramp) {
        s.input.position = Vec3(u(rng), u(rng), u(rng)) * 5.0;
        s.input.depth = 10.0 + 9.0 * u(rng);
        s.input.direction = Vec3(u(rng), u(rng), 1.0).normalized();
        s.input.frame = 1.5 + 1.5 * u(rng);
        const double r = 0.2 + 0.6 * (s.input.depth - 1.0) / 18.0;
        s.target = Vec3(r, 1.0 - r, 0.5);
    }
    const FieldFit fit = fit_field(FieldParams::create(c), ramp, 0.5, 3000);
    v.require(fit.loss_trace.back() < 1e-3, "depth ramp loss < 1e-3");
    v.detail << "100 draws, " << checked << " components checked (" << kinks << " relu kinks skipped), max rel error "
             << worst << "; depth ramp loss " << fit.loss_trace.back();
}

void bev_invariants(Verdict& v) {
    std::mt19937_64 rng(909);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    SemanticPointCloud cloud;
    for (int k = 0; k < 2000; ++k) {
        cloud.points.push_back({u(rng), 10.0 + u(rng), 0.2 * u(rng)});
        cloud.labels.push_back(std::uint16_t(rng() % 4));
    }
    const std::vector<Camera> cams{look_at_camera({0, -5, 1.5}, {0, 1, 0}, {0, 0, 1}, 60, 60, 128, 96),
                                   look_at_camera({-4, 25, 1.5}, {0.3, -1, 0}, {0, 0, 1}, 60, 60, 128, 96)};
    const BevConfig cfg{0.8, 0.5, 6.0};
    const auto aug = bev_augment(cloud, {2, 3}, cfg, cams);
    std::size_t bad_z = 0, unseen = 0;
    for (const Vec3& p : aug) {
        const double k = p.z() / cfg.dz;
        if (std::abs(k - std::round(k)) > 1e-9 || std::round(k) < 1 || p.z() > cfg.height + 1e-9) ++bad_z;
        bool seen = false;
        for (const Camera& c : cams) seen = seen || pixel_of(c, p).has_value();
        unseen += !seen;
    }
    const auto merged = merge(cloud.points, aug);
    const auto down = voxel_downsample(merged, 0.15);
    const std::size_t oracle_count = oracle::voxel_count(merged, 0.15);
    v.require(!aug.empty(), "some columns produced");
    v.require(bad_z == 0, "augmented z = k*dz <= h");
    v.require(unseen == 0, "augmented points seen by a camera");
    v.require(merged.size() == cloud.points.size() + aug.size(), "merge count exact");
    v.require(down.size() == oracle_count, "voxel count equals hash-set oracle");
    v.detail << aug.size() << " augmented points, " << bad_z << " bad heights, " << unseen << " unseen; merged "
             << merged.size() << "; voxels " << down.size() << " vs oracle " << oracle_count;
}

void metric_correctness(Verdict& v) {
    std::mt19937_64 rng(1010);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    double psnr_err = 0.0, ssim_err = 0.0;
    for (int k = 0; k < 10; ++k) {
        Image a(40, 32), b(40, 32);
        for (float& x : a.data) x = u(rng);
        for (std::size_t i = 0; i < b.data.size(); ++i) b.data[i] = std::clamp(a.data[i] + 0.2f * (u(rng) - 0.5f), 0.0f, 1.0f);
        psnr_err = std::max(psnr_err, std::abs(psnr(a, b) - oracle::psnr(a, b)));
        ssim_err = std::max(ssim_err, std::abs(ssim(a, b) - oracle::ssim(a, b)));
    }
    Image same(20, 20);
    for (float& x : same.data) x = u(rng);
    v.require(psnr_err < 1e-9, "PSNR within 1e-9 dB");
    v.require(ssim_err < 1e-6, "SSIM within 1e-6");
    v.require(std::isinf(psnr(same, same)), "identical PSNR inf");
    v.require(std::abs(ssim(same, same) - 1.0) < 1e-12, "identical SSIM 1");
    v.detail << "max PSNR deviation " << psnr_err << " dB, max SSIM deviation " << ssim_err;
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<const char*, std::function<void(Verdict&)>>> criteria{
        {"pipeline equivalence", pipeline_equivalence},
        {"instance-projection correctness", instance_projection},
        {"temporal-visibility conservativeness", temporal_conservativeness},
        {"scalability reproduction", scalability},
        {"LOD statistics", lod_statistics},
        {"RK4 order", rk4_order},
        {"NeuralODE track recovery", ode_recovery},
        {"field gradient check", field_gradients},
        {"BEV augmentation invariants", bev_invariants},
        {"metric correctness", metric_correctness},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const int id = int(k) + 1;
        if (!selected.empty() && !selected.contains(id)) continue;
        Verdict v;
        try {
            criteria[k].second(v);
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail << "exception: " << e.what();
        }
        failed += !v.pass;
        std::cout << "CRITERION " << id << " " << (v.pass ? "PASS" : "FAIL") << " " << criteria[k].first << ": "
                  << v.detail.str() << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
