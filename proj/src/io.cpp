#include "splatstream/io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

namespace splatstream {

namespace {

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    return out;
}

/// Next whitespace-separated header token of a netpbm file, skipping comments.
std::string pnm_token(std::istream& in) {
    std::string tok;
    while (in) {
        int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
    in >> tok;
    return tok;
}

int pnm_int(std::istream& in, const std::filesystem::path& path) {
    const std::string tok = pnm_token(in);
    try {
        return std::stoi(tok);
    } catch (const std::exception&) {
        throw std::runtime_error("malformed header in " + path.string());
    }
}

template <class T>
void put_le(std::ostream& out, T value) {
    if constexpr (std::endian::native == std::endian::big) {
        auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(value);
        std::reverse(bytes.begin(), bytes.end());
        out.write(bytes.data(), sizeof(T));
    } else {
        out.write(reinterpret_cast<const char*>(&value), sizeof(T));
    }
}

template <class T>
T get_le(std::istream& in) {
    std::array<char, sizeof(T)> bytes;
    in.read(bytes.data(), sizeof(T));
    if (!in) {
        throw std::runtime_error("unexpected end of file");
    }
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(bytes.begin(), bytes.end());
    }
    return std::bit_cast<T>(bytes);
}

}  // namespace

void write_ppm(const Image& image, const std::filesystem::path& path) {
    std::ofstream out = open_out(path);
    out << "P6\n" << image.width << " " << image.height << "\n255\n";
    std::vector<unsigned char> bytes(image.data.size());
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        bytes[i] = static_cast<unsigned char>(std::lround(std::clamp(image.data[i], 0.0f, 1.0f) * 255.0f));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

Image read_ppm(const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    if (pnm_token(in) != "P6") {
        throw std::runtime_error(path.string() + " is not a binary PPM (P6)");
    }
    const int w = pnm_int(in, path);
    const int h = pnm_int(in, path);
    const int maxv = pnm_int(in, path);
    if (w < 1 || h < 1 || maxv != 255) {
        throw std::runtime_error("unsupported PPM header in " + path.string());
    }
    in.get();
    Image img(w, h);
    std::vector<unsigned char> bytes(img.data.size());
    in.read(reinterpret_cast<char*>(bytes.data()), std::streamsize(bytes.size()));
    if (in.gcount() != std::streamsize(bytes.size())) {
        throw std::runtime_error(path.string() + " is truncated");
    }
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        img.data[i] = float(bytes[i]) / 255.0f;
    }
    return img;
}

void write_depth(const DepthMap& depth, const std::filesystem::path& path) {
    std::ofstream out = open_out(path);
    out.write("SSDEPTH1", 8);
    put_le<std::uint32_t>(out, std::uint32_t(depth.width));
    put_le<std::uint32_t>(out, std::uint32_t(depth.height));
    for (float v : depth.data) {
        put_le<float>(out, v);
    }
}

DepthMap read_depth(const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, "SSDEPTH1", 8) != 0) {
        throw std::runtime_error(path.string() + " is not a depth map");
    }
    DepthMap d;
    d.width = int(get_le<std::uint32_t>(in));
    d.height = int(get_le<std::uint32_t>(in));
    d.data.resize(std::size_t(d.width) * d.height);
    for (float& v : d.data) {
        v = get_le<float>(in);
    }
    return d;
}

GrayImage read_pgm(const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    if (pnm_token(in) != "P5") {
        throw std::runtime_error(path.string() + " is not a binary PGM (P5)");
    }
    GrayImage img;
    img.width = pnm_int(in, path);
    img.height = pnm_int(in, path);
    img.max_value = pnm_int(in, path);
    if (img.width < 1 || img.height < 1 || img.max_value < 1 || img.max_value > 65535) {
        throw std::runtime_error("unsupported PGM header in " + path.string());
    }
    in.get();
    const std::size_t n = std::size_t(img.width) * img.height;
    img.data.resize(n);
    if (img.max_value < 256) {
        std::vector<unsigned char> bytes(n);
        in.read(reinterpret_cast<char*>(bytes.data()), std::streamsize(n));
        if (in.gcount() != std::streamsize(n)) throw std::runtime_error(path.string() + " is truncated");
        std::copy(bytes.begin(), bytes.end(), img.data.begin());
    } else {
        std::vector<unsigned char> bytes(2 * n);
        in.read(reinterpret_cast<char*>(bytes.data()), std::streamsize(2 * n));
        if (in.gcount() != std::streamsize(2 * n)) throw std::runtime_error(path.string() + " is truncated");
        for (std::size_t i = 0; i < n; ++i) {
            img.data[i] = std::uint16_t((bytes[2 * i] << 8) | bytes[2 * i + 1]);  // big-endian samples
        }
    }
    return img;
}

void write_pgm(const GrayImage& img, const std::filesystem::path& path) {
    std::ofstream out = open_out(path);
    out << "P5\n" << img.width << " " << img.height << "\n" << img.max_value << "\n";
    for (std::uint16_t v : img.data) {
        if (img.max_value < 256) {
            out.put(char(v & 0xFF));
        } else {
            out.put(char(v >> 8));
            out.put(char(v & 0xFF));
        }
    }
}

BinaryMask to_mask(const GrayImage& image) {
    BinaryMask m{image.width, image.height, std::vector<std::uint8_t>(image.data.size())};
    for (std::size_t i = 0; i < image.data.size(); ++i) {
        m.data[i] = image.data[i] != 0 ? 1 : 0;
    }
    return m;
}

void write_ply(const PointCloud& cloud, const std::filesystem::path& path, PlyFormat format) {
    const bool labeled = !cloud.labels.empty();
    if (labeled && cloud.labels.size() != cloud.points.size()) {
        throw std::invalid_argument("write_ply: label count does not match point count");
    }
    std::ofstream out = open_out(path);
    out << "ply\nformat " << (format == PlyFormat::ascii ? "ascii" : "binary_little_endian") << " 1.0\n";
    out << "element vertex " << cloud.points.size() << "\n";
    out << "property float x\nproperty float y\nproperty float z\n";
    if (labeled) out << "property ushort label\n";
    out << "end_header\n";
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        const Vec3& p = cloud.points[i];
        if (format == PlyFormat::ascii) {
            out << float(p.x()) << " " << float(p.y()) << " " << float(p.z());
            if (labeled) out << " " << cloud.labels[i];
            out << "\n";
        } else {
            put_le<float>(out, float(p.x()));
            put_le<float>(out, float(p.y()));
            put_le<float>(out, float(p.z()));
            if (labeled) put_le<std::uint16_t>(out, cloud.labels[i]);
        }
    }
}

namespace {

enum class PlyType { i8, u8, i16, u16, i32, u32, f32, f64 };

PlyType ply_type(const std::string& name) {
    static const std::map<std::string, PlyType> types = {
        {"char", PlyType::i8},    {"int8", PlyType::i8},     {"uchar", PlyType::u8},   {"uint8", PlyType::u8},
        {"short", PlyType::i16},  {"int16", PlyType::i16},   {"ushort", PlyType::u16}, {"uint16", PlyType::u16},
        {"int", PlyType::i32},    {"int32", PlyType::i32},   {"uint", PlyType::u32},   {"uint32", PlyType::u32},
        {"float", PlyType::f32},  {"float32", PlyType::f32}, {"double", PlyType::f64}, {"float64", PlyType::f64},
    };
    auto it = types.find(name);
    if (it == types.end()) {
        throw std::runtime_error("unsupported PLY property type '" + name + "'");
    }
    return it->second;
}

double read_binary(std::istream& in, PlyType t) {
    switch (t) {
    case PlyType::i8: return get_le<std::int8_t>(in);
    case PlyType::u8: return get_le<std::uint8_t>(in);
    case PlyType::i16: return get_le<std::int16_t>(in);
    case PlyType::u16: return get_le<std::uint16_t>(in);
    case PlyType::i32: return get_le<std::int32_t>(in);
    case PlyType::u32: return get_le<std::uint32_t>(in);
    case PlyType::f32: return get_le<float>(in);
    case PlyType::f64: return get_le<double>(in);
    }
    return 0.0;
}

}  // namespace

PointCloud read_ply(const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    std::string line;
    std::getline(in, line);
    if (line != "ply") {
        throw std::runtime_error(path.string() + " is not a PLY file");
    }
    bool ascii = false;
    std::size_t vertices = 0;
    bool in_vertex = false;
    bool seen_vertex = false;
    std::vector<std::pair<std::string, PlyType>> props;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt == "ascii") ascii = true;
            else if (fmt != "binary_little_endian") throw std::runtime_error("unsupported PLY format " + fmt);
        } else if (word == "element") {
            std::string name;
            std::size_t count;
            ls >> name >> count;
            if (seen_vertex && name != "vertex") {
                // Elements after the vertex block are ignored.
                in_vertex = false;
                continue;
            }
            if (name != "vertex") {
                throw std::runtime_error("PLY elements before 'vertex' are not supported");
            }
            vertices = count;
            in_vertex = seen_vertex = true;
        } else if (word == "property" && in_vertex) {
            std::string type, name;
            ls >> type;
            if (type == "list") throw std::runtime_error("PLY list properties on vertices are not supported");
            ls >> name;
            props.emplace_back(name, ply_type(type));
        } else if (word == "end_header") {
            break;
        }
    }
    int ix = -1, iy = -1, iz = -1, il = -1;
    for (std::size_t k = 0; k < props.size(); ++k) {
        if (props[k].first == "x") ix = int(k);
        if (props[k].first == "y") iy = int(k);
        if (props[k].first == "z") iz = int(k);
        if (props[k].first == "label") il = int(k);
    }
    if (ix < 0 || iy < 0 || iz < 0) {
        throw std::runtime_error(path.string() + " lacks x/y/z vertex properties");
    }
    PointCloud cloud;
    cloud.points.reserve(vertices);
    std::vector<double> values(props.size());
    for (std::size_t v = 0; v < vertices; ++v) {
        for (std::size_t k = 0; k < props.size(); ++k) {
            if (ascii) {
                if (!(in >> values[k])) throw std::runtime_error(path.string() + " is truncated");
            } else {
                values[k] = read_binary(in, props[k].second);
            }
        }
        cloud.points.emplace_back(values[ix], values[iy], values[iz]);
        if (il >= 0) cloud.labels.push_back(std::uint16_t(values[il]));
    }
    return cloud;
}

}  // namespace splatstream
