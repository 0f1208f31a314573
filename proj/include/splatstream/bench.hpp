#pragma once

#include "splatstream/render.hpp"
#include "splatstream/scenegen.hpp"

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace splatstream {

struct BenchRecord {
    PipelineMode mode = PipelineMode::conventional;
    /// Segment count.
    int scale = 1;
    int frames = 0;
    std::size_t gaussians = 0;
    /// Median over views of each view's fastest round.
    double per_view_ms = 0.0;
    double filter_ms = 0.0;
    /// Transform and projection.
    double project_ms = 0.0;
    double lod_ms = 0.0;
    /// Color lookup and blending.
    double blend_ms = 0.0;
    int workers = 1;
    /// FNV-1a over every rendered image, in view order.
    std::uint64_t image_hash = 0;
    /// Median below the clock's resolution.
    bool below_resolution = false;
};

struct BenchOptions {
    std::vector<int> scales{1, 2, 4, 8};
    std::vector<PipelineMode> modes{PipelineMode::conventional, PipelineMode::streamlined};
    RenderConfig render;
    /// Timed rounds over every (scale, mode, view); a view's time is its fastest round,
    /// and records hold the median of those over views.
    int repeats = 3;
    /// Pin the worker count for the run; <= 0 leaves it unchanged.
    int workers = 0;
};

struct BenchReport {
    std::vector<BenchRecord> records;
    /// Lowest per-view PSNR between the two modes at each scale (infinity for identical images);
    /// empty unless both modes ran.
    std::vector<double> min_psnr;
};

/// Disables LOD so the mode comparison is exact; used by the benchmark unless overridden.
RenderConfig default_bench_config();

BenchReport run_scaling_benchmark(const SceneSpec& base_spec, const BenchOptions& options);

inline constexpr const char* kBenchCsvHeader = "mode,scale,gaussians,per_view_ms,filter_ms,project_ms,lod_ms,blend_ms";

void write_bench_csv(const std::vector<BenchRecord>& records, std::ostream& out);
/// Gnuplot table: one row per scale, "scale conventional_ms streamlined_ms"; worker count in a comment.
void write_bench_dat(const std::vector<BenchRecord>& records, std::ostream& out);

/// FNV-1a over the float bytes of an image, chained from `seed`.
std::uint64_t image_hash(const Image& image, std::uint64_t seed = 0xcbf29ce484222325ull);

}  // namespace splatstream
