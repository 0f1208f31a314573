#pragma once

#include "splatstream/core.hpp"
#include "splatstream/motion.hpp"
#include "splatstream/raster.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace splatstream {

/// Binary PPM (P6, 8-bit). Values are clamped to [0, 1] and rounded.
void write_ppm(const Image& image, const std::filesystem::path& path);
Image read_ppm(const std::filesystem::path& path);

/// Raw float32 depth: "SSDEPTH1", uint32 width, uint32 height, then row-major floats, little-endian.
void write_depth(const DepthMap& depth, const std::filesystem::path& path);
DepthMap read_depth(const std::filesystem::path& path);

/// Grayscale PGM (P5) with 8- or 16-bit samples.
struct GrayImage {
    int width = 0;
    int height = 0;
    int max_value = 255;
    std::vector<std::uint16_t> data;

    std::uint16_t at(int x, int y) const { return data[std::size_t(y) * width + x]; }
};

GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const GrayImage& image, const std::filesystem::path& path);
BinaryMask to_mask(const GrayImage& image);

struct PointCloud {
    std::vector<Vec3> points;
    /// Empty, or one label per point.
    std::vector<std::uint16_t> labels;
};

enum class PlyFormat { ascii, binary_little_endian };

/// Vertex element with float x, y, z and an optional ushort label.
void write_ply(const PointCloud& cloud, const std::filesystem::path& path, PlyFormat format = PlyFormat::binary_little_endian);
/// Reads x, y, z (any numeric type) and an optional "label" property; other properties are skipped.
PointCloud read_ply(const std::filesystem::path& path);

}  // namespace splatstream
