#include "splatstream/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace splatstream;

namespace {

std::filesystem::path tmp(const std::string& name) { return std::filesystem::temp_directory_path() / name; }

}  // namespace

TEST(Ppm, RoundTripQuantizes) {
    Image img(5, 3);
    for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = float(i % 7) / 6.0f;
    img.data[0] = 1.5f;
    write_ppm(img, tmp("ss_io.ppm"));
    const Image back = read_ppm(tmp("ss_io.ppm"));
    ASSERT_EQ(back.width, 5);
    ASSERT_EQ(back.height, 3);
    EXPECT_EQ(back.data[0], 1.0f);
    for (std::size_t i = 1; i < img.data.size(); ++i) EXPECT_NEAR(back.data[i], img.data[i], 0.5f / 255.0f + 1e-6f);
}

TEST(Ppm, RejectsGarbage) {
    std::ofstream(tmp("ss_bad.ppm")) << "P3\n1 1\n255\n0 0 0\n";
    EXPECT_THROW(read_ppm(tmp("ss_bad.ppm")), std::runtime_error);
    EXPECT_THROW(read_ppm(tmp("ss_missing.ppm")), std::runtime_error);
}

TEST(Depth, RoundTrip) {
    const DepthMap d{3, 2, {0.0f, 1.5f, 2.25f, -1.0f, 1e6f, 3.0f}};
    write_depth(d, tmp("ss_io.depth"));
    const DepthMap back = read_depth(tmp("ss_io.depth"));
    EXPECT_EQ(back.width, 3);
    EXPECT_EQ(back.data, d.data);
}

TEST(Pgm, SixteenBitRoundTripAndMask) {
    GrayImage g{4, 2, 65535, {0, 1, 300, 65535, 7, 0, 0, 2}};
    write_pgm(g, tmp("ss_io.pgm"));
    const GrayImage back = read_pgm(tmp("ss_io.pgm"));
    EXPECT_EQ(back.data, g.data);
    EXPECT_EQ(back.at(2, 0), 300);
    const BinaryMask m = to_mask(back);
    EXPECT_FALSE(m.inside(0, 0));
    EXPECT_TRUE(m.inside(3, 0));
    EXPECT_FALSE(m.inside(4, 0));
}

TEST(Ply, BinaryAndAsciiRoundTrip) {
    PointCloud c;
    c.points = {{1, 2, 3}, {-0.5, 0.25, 1e3}};
    c.labels = {4, 65535};
    for (PlyFormat f : {PlyFormat::ascii, PlyFormat::binary_little_endian}) {
        write_ply(c, tmp("ss_io.ply"), f);
        const PointCloud back = read_ply(tmp("ss_io.ply"));
        ASSERT_EQ(back.points.size(), 2u);
        EXPECT_EQ(back.points[1], c.points[1]);
        EXPECT_EQ(back.labels, c.labels);
    }
}

TEST(Ply, SkipsForeignPropertiesAndDoubles) {
    {
        std::ofstream out(tmp("ss_foreign.ply"), std::ios::binary);
        out << "ply\nformat binary_little_endian 1.0\ncomment x\nelement vertex 2\nproperty double x\n"
               "property uchar red\nproperty double y\nproperty double z\nend_header\n";
        for (int k = 0; k < 2; ++k) {
            const double x = k + 0.5, y = -k, z = 2.0 * k;
            const unsigned char r = 200;
            out.write(reinterpret_cast<const char*>(&x), 8);
            out.write(reinterpret_cast<const char*>(&r), 1);
            out.write(reinterpret_cast<const char*>(&y), 8);
            out.write(reinterpret_cast<const char*>(&z), 8);
        }
    }
    const PointCloud c = read_ply(tmp("ss_foreign.ply"));
    ASSERT_EQ(c.points.size(), 2u);
    EXPECT_EQ(c.points[1], Vec3(1.5, -1, 2));
    EXPECT_TRUE(c.labels.empty());
}

TEST(Ply, TruncatedFails) {
    std::ofstream(tmp("ss_trunc.ply"), std::ios::binary)
        << "ply\nformat binary_little_endian 1.0\nelement vertex 3\nproperty float x\nproperty float y\n"
           "property float z\nend_header\nabc";
    EXPECT_THROW(read_ply(tmp("ss_trunc.ply")), std::runtime_error);
}
