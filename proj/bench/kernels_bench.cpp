// OpenMP kernels against their serial reference versions.

#include "splatstream/project.hpp"
#include "splatstream/raster.hpp"
#include "splatstream/tvis.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace splatstream;

namespace {

Camera bench_camera() {
    Camera c;
    c.fx = c.fy = 128.0;
    c.cx = c.cy = 64.0;
    c.width = c.height = 128;
    return c;
}

std::vector<ProjectionTask> make_tasks(std::size_t n, const Camera& cam) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<ProjectionTask> tasks(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        const Eigen::Quaterniond q = Eigen::Quaterniond(u(rng), u(rng), u(rng), u(rng)).normalized();
        tasks[i] = {Vec3(6 * u(rng), 6 * u(rng), 8 + 4 * u(rng)), build_covariance(Vec3::Constant(-2.5), q), &cam, i};
    }
    return tasks;
}

std::vector<Splat> make_splats(std::size_t n) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Splat> s(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        s[i].mean = {128 * u(rng), 128 * u(rng)};
        s[i].cov = Mat2::Identity() * (0.5 + 6 * u(rng));
        s[i].depth = 1 + 20 * u(rng);
        s[i].color = Eigen::Vector3f(u(rng), u(rng), u(rng));
        s[i].opacity = float(0.2 + 0.7 * u(rng));
        s[i].source_index = i;
    }
    return s;
}

void BM_ProjectBatch(benchmark::State& state) {
    const Camera cam = bench_camera();
    const auto tasks = make_tasks(std::size_t(state.range(0)), cam);
    for (auto _ : state) benchmark::DoNotOptimize(project_batch(tasks, {}));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ProjectBatchReference(benchmark::State& state) {
    const Camera cam = bench_camera();
    const auto tasks = make_tasks(std::size_t(state.range(0)), cam);
    for (auto _ : state) benchmark::DoNotOptimize(reference::project_batch(tasks, {}));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_FrustumCull(benchmark::State& state) {
    const Camera cam = bench_camera();
    const auto projected = project_batch(make_tasks(std::size_t(state.range(0)), cam), {});
    for (auto _ : state) benchmark::DoNotOptimize(frustum_cull(projected, 128, 128, 19.2));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_FrustumCullReference(benchmark::State& state) {
    const Camera cam = bench_camera();
    const auto projected = project_batch(make_tasks(std::size_t(state.range(0)), cam), {});
    for (auto _ : state) benchmark::DoNotOptimize(reference::frustum_cull(projected, 128, 128, 19.2));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_Blend(benchmark::State& state) {
    const auto splats = make_splats(std::size_t(state.range(0)));
    BlendConfig c;
    c.depth = false;
    for (auto _ : state) benchmark::DoNotOptimize(blend(splats, 128, 128, c));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BlendReference(benchmark::State& state) {
    const auto splats = make_splats(std::size_t(state.range(0)));
    BlendConfig c;
    c.depth = false;
    for (auto _ : state) benchmark::DoNotOptimize(reference::blend(splats, 128, 128, c));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_TemporalFilter(benchmark::State& state) {
    std::vector<Gaussian3D> g(std::size_t(state.range(0)));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    for (auto& x : g) {
        const float s = u(rng);
        x.visibility = {s, std::min(1.0f, s + 0.1f)};
    }
    const GaussianTable table(g);
    const TemporalIndex index(table);
    for (auto _ : state) benchmark::DoNotOptimize(index.query(0.3));
}

void BM_TemporalFilterScan(benchmark::State& state) {
    std::vector<Gaussian3D> g(std::size_t(state.range(0)));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    for (auto& x : g) {
        const float s = u(rng);
        x.visibility = {s, std::min(1.0f, s + 0.1f)};
    }
    const GaussianTable table(g);
    for (auto _ : state) benchmark::DoNotOptimize(filter_visible(table, 0.3));
}

}  // namespace

BENCHMARK(BM_ProjectBatch)->Arg(1 << 14)->Arg(1 << 17);
BENCHMARK(BM_ProjectBatchReference)->Arg(1 << 14)->Arg(1 << 17);
BENCHMARK(BM_FrustumCull)->Arg(1 << 17);
BENCHMARK(BM_FrustumCullReference)->Arg(1 << 17);
BENCHMARK(BM_Blend)->Arg(1 << 12)->Arg(1 << 14);
BENCHMARK(BM_BlendReference)->Arg(1 << 12);
BENCHMARK(BM_TemporalFilter)->Arg(1 << 17);
BENCHMARK(BM_TemporalFilterScan)->Arg(1 << 17);

BENCHMARK_MAIN();
