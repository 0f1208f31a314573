#include "splatstream/bench.hpp"

#include "splatstream/metrics.hpp"
#include "splatstream/parallel.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <stdexcept>

namespace splatstream {

namespace {

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + std::ptrdiff_t(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + std::ptrdiff_t(mid)));
    }
    return m;
}

double clock_resolution_ms() {
    using clock = std::chrono::steady_clock;
    return 1e3 * double(clock::period::num) / double(clock::period::den);
}

}  // namespace

RenderConfig default_bench_config() {
    RenderConfig config;
    config.lod.r = 0.0;
    config.blend.depth = false;
    return config;
}

std::uint64_t image_hash(const Image& image, std::uint64_t h) {
    for (float v : image.data) {
        const std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
        for (int k = 0; k < 4; ++k) {
            h ^= (bits >> (8 * k)) & 0xFF;
            h *= 0x100000001b3ull;
        }
    }
    return h;
}

BenchReport run_scaling_benchmark(const SceneSpec& base_spec, const BenchOptions& options) {
    if (options.scales.empty() || options.modes.empty()) {
        throw std::invalid_argument("benchmark needs at least one scale and one mode");
    }
    if (options.repeats < 1) {
        throw std::invalid_argument("benchmark repeats must be >= 1");
    }
    {
        std::vector<int> sorted = options.scales;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end() || sorted.front() < 1) {
            throw std::invalid_argument("benchmark scales must be distinct positive segment counts");
        }
    }
    if (options.workers > 0) {
        set_workers(options.workers);
    }
    const auto has = [&](PipelineMode m) {
        return std::find(options.modes.begin(), options.modes.end(), m) != options.modes.end();
    };
    const bool both = has(PipelineMode::conventional) && has(PipelineMode::streamlined);

    struct Run {
        int scale;
        PipelineMode mode;
        SceneModel* scene;
        std::unique_ptr<Renderer> renderer;
        /// Per view: fastest round's total and stage times.
        std::vector<double> total, filter, project, lod, blend;
        std::vector<Image> images;
    };
    std::vector<std::unique_ptr<GeneratedScene>> scenes;
    std::vector<Run> runs;
    for (int scale : options.scales) {
        scenes.push_back(std::make_unique<GeneratedScene>(generate_scene(replicate_segments(base_spec, scale))));
        SceneModel& scene = scenes.back()->scene;
        for (PipelineMode mode : options.modes) {
            Run run{scale, mode, &scene, nullptr, {}, {}, {}, {}, {}, {}};
            const std::size_t frames = std::size_t(scene.frame_count);
            for (auto* v : {&run.total, &run.filter, &run.project, &run.lod, &run.blend}) {
                v->assign(frames, std::numeric_limits<double>::infinity());
            }
            run.images.resize(frames);
            runs.push_back(std::move(run));
        }
    }
    // Renderers are built after all scenes exist; conventional mode ignores temporal state,
    // so one scene can back both modes once the streamlined warm-up has run.
    for (Run& run : runs) {
        const GaussianTable table = run.scene->table();
        if (run.mode == PipelineMode::streamlined) {
            reset_visibility(table);
            for (std::size_t i = 0; i < table.size(); ++i) table[i].life = kEmptyLife;
        }
        run.renderer = std::make_unique<Renderer>(*run.scene, options.render);
        if (run.mode == PipelineMode::streamlined) {
            run.renderer->sweep();
        } else {
            run.renderer->render(run.scene->cameras.front().time, run.mode);
        }
    }

    // Each round walks all runs in lockstep, every run advancing through its views at a rate
    // proportional to its view count, so slow periods on a shared machine hit all of them.
    // Each view keeps its fastest round.
    std::size_t steps = 0;
    for (const Run& run : runs) steps = std::max(steps, run.images.size());
    for (int rep = 0; rep < options.repeats; ++rep) {
        for (std::size_t s = 0; s < steps; ++s) {
            for (Run& run : runs) {
                const std::size_t n = run.images.size();
                for (std::size_t f = s * n / steps; f < (s + 1) * n / steps; ++f) {
                    const auto start = std::chrono::steady_clock::now();
                    RenderOutput out = run.renderer->render(run.scene->cameras[f].time, run.mode);
                    const auto stop = std::chrono::steady_clock::now();
                    const double ms = std::chrono::duration<double, std::milli>(stop - start).count();
                    if (ms < run.total[f]) {
                        const StageTimes& st = out.stats.time;
                        run.total[f] = ms;
                        run.filter[f] = st.filter_ms;
                        run.project[f] = st.transform_ms + st.project_ms;
                        run.lod[f] = st.lod_ms;
                        run.blend[f] = st.color_ms + st.blend_ms;
                    }
                    if (rep == 0) run.images[f] = std::move(out.image);
                }
            }
        }
    }

    BenchReport report;
    for (const Run& run : runs) {
        BenchRecord rec;
        rec.mode = run.mode;
        rec.scale = run.scale;
        rec.frames = run.scene->frame_count;
        rec.gaussians = run.scene->gaussian_count();
        rec.per_view_ms = median(run.total);
        rec.filter_ms = median(run.filter);
        rec.project_ms = median(run.project);
        rec.lod_ms = median(run.lod);
        rec.blend_ms = median(run.blend);
        rec.workers = workers();
        rec.below_resolution = rec.per_view_ms <= clock_resolution_ms();
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (const Image& img : run.images) h = image_hash(img, h);
        rec.image_hash = h;
        report.records.push_back(rec);
    }
    if (both) {
        for (int scale : options.scales) {
            const Run* a = nullptr;
            const Run* b = nullptr;
            for (const Run& run : runs) {
                if (run.scale != scale) continue;
                if (run.mode == PipelineMode::conventional) a = &run;
                else b = &run;
            }
            double lowest = std::numeric_limits<double>::infinity();
            for (std::size_t f = 0; f < a->images.size(); ++f) lowest = std::min(lowest, psnr(a->images[f], b->images[f]));
            report.min_psnr.push_back(lowest);
        }
    }
    return report;
}

void write_bench_csv(const std::vector<BenchRecord>& records, std::ostream& out) {
    out << kBenchCsvHeader << "\n";
    for (const BenchRecord& r : records) {
        out << mode_name(r.mode) << "," << r.scale << "," << r.gaussians << "," << r.per_view_ms << "," << r.filter_ms
            << "," << r.project_ms << "," << r.lod_ms << "," << r.blend_ms << "\n";
    }
}

void write_bench_dat(const std::vector<BenchRecord>& records, std::ostream& out) {
    std::map<int, std::map<PipelineMode, double>> by_scale;
    int w = records.empty() ? workers() : records.front().workers;
    for (const BenchRecord& r : records) by_scale[r.scale][r.mode] = r.per_view_ms;
    out << "# workers " << w << "\n# scale conventional_ms streamlined_ms\n";
    for (const auto& [scale, m] : by_scale) {
        out << scale;
        for (PipelineMode mode : {PipelineMode::conventional, PipelineMode::streamlined}) {
            auto it = m.find(mode);
            if (it == m.end()) out << " NaN";
            else out << " " << it->second;
        }
        out << "\n";
    }
}

}  // namespace splatstream
