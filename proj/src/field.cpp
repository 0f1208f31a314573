#include "splatstream/field.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace splatstream {

namespace {

int encoded_size(int frequencies) { return 3 + 3 * 2 * frequencies; }

void positional_encoding(const Vec3& v, int frequencies, Eigen::VectorXd& out, int& cursor) {
    for (int k = 0; k < 3; ++k) {
        out[cursor++] = v[k];
    }
    double freq = std::numbers::pi;
    for (int f = 0; f < frequencies; ++f, freq *= 2.0) {
        for (int k = 0; k < 3; ++k) {
            out[cursor++] = std::sin(freq * v[k]);
            out[cursor++] = std::cos(freq * v[k]);
        }
    }
}

struct TimeBlend {
    int lo = 0;
    int hi = 0;
    double w = 0.0;  // weight of hi
};

TimeBlend time_blend(const FieldConfig& c, double frame) {
    if (!std::isfinite(frame) || frame < -1e-9 || frame > double(c.frames - 1) + 1e-9) {
        throw std::out_of_range("field: time index " + std::to_string(frame) + " outside [0, " +
                                std::to_string(c.frames - 1) + "]");
    }
    const double f = std::clamp(frame, 0.0, double(c.frames - 1));
    TimeBlend tb;
    tb.lo = static_cast<int>(std::floor(f));
    tb.hi = std::min(tb.lo + 1, c.frames - 1);
    tb.w = f - tb.lo;
    return tb;
}

void check_class(const FieldConfig& c, const std::optional<int>& cls) {
    if (cls && (*cls < 0 || *cls >= c.classes)) {
        throw std::out_of_range("field: class index " + std::to_string(*cls) + " outside table of " +
                                std::to_string(c.classes));
    }
    if (!cls && c.classes > 0) {
        throw std::invalid_argument("field: class index required by the dynamic field");
    }
}

}  // namespace

int field_input_size(const FieldConfig& c) {
    return encoded_size(c.position_frequencies) + 1 + encoded_size(c.direction_frequencies) + c.time_embedding_dim +
           (c.classes > 0 ? c.class_embedding_dim : 0);
}

FieldParams FieldParams::create(const FieldConfig& config) {
    if (config.frames < 1 || config.classes < 0 || config.hidden_layers < 1 || config.hidden_width < 1 ||
        !(config.position_scale > 0.0) || !(config.depth_scale > 0.0)) {
        throw std::invalid_argument("invalid field config");
    }
    FieldParams p;
    p.config = config;
    std::vector<int> sizes{field_input_size(config)};
    for (int l = 0; l < config.hidden_layers; ++l) {
        sizes.push_back(config.hidden_width);
    }
    sizes.push_back(3);
    p.shape = MlpShape(sizes, Activation::relu, Activation::sigmoid);
    p.values.assign(p.class_table_offset() + std::size_t(config.classes) * config.class_embedding_dim, 0.0);
    p.shape.initialize(p.mlp(), config.seed);
    std::mt19937_64 rng(config.seed ^ 0x5EEDull);
    std::normal_distribution<double> emb(0.0, 0.1);
    for (std::size_t i = p.time_table_offset(); i < p.values.size(); ++i) {
        p.values[i] = emb(rng);
    }
    return p;
}

Eigen::VectorXd encode_field_input(const FieldParams& params, const FieldInput& in) {
    const FieldConfig& c = params.config;
    check_class(c, in.class_index);
    const TimeBlend tb = time_blend(c, in.frame);
    Eigen::VectorXd x(field_input_size(c));
    int cursor = 0;
    positional_encoding(in.position / c.position_scale, c.position_frequencies, x, cursor);
    x[cursor++] = in.depth / c.depth_scale;
    positional_encoding(in.direction, c.direction_frequencies, x, cursor);
    const double* table = params.values.data() + params.time_table_offset();
    for (int k = 0; k < c.time_embedding_dim; ++k) {
        x[cursor++] = (1.0 - tb.w) * table[tb.lo * c.time_embedding_dim + k] + tb.w * table[tb.hi * c.time_embedding_dim + k];
    }
    if (in.class_index) {
        const double* cls = params.values.data() + params.class_table_offset() + *in.class_index * c.class_embedding_dim;
        for (int k = 0; k < c.class_embedding_dim; ++k) {
            x[cursor++] = cls[k];
        }
    }
    return x;
}

Vec3 field_forward(const FieldParams& params, const FieldInput& input) {
    const Eigen::VectorXd y = params.shape.forward(params.mlp(), encode_field_input(params, input));
    return {y[0], y[1], y[2]};
}

FieldLossGradient field_gradient(const FieldParams& params, std::span<const FieldSample> batch) {
    if (batch.empty()) {
        throw std::invalid_argument("field_gradient: empty batch");
    }
    const FieldConfig& c = params.config;
    FieldLossGradient out;
    out.gradient.assign(params.values.size(), 0.0);
    std::span<double> grad_mlp(out.gradient.data(), params.mlp_size());
    const double inv_n = 1.0 / double(batch.size());
    MlpShape::Tape tape;
    const int embed_at = encoded_size(c.position_frequencies) + 1 + encoded_size(c.direction_frequencies);
    for (const FieldSample& s : batch) {
        const Eigen::VectorXd x = encode_field_input(params, s.input);
        const Eigen::VectorXd y = params.shape.forward(params.mlp(), x, &tape);
        const Eigen::Vector3d err = y.head<3>() - s.target;
        out.loss += err.squaredNorm() * inv_n;
        const Eigen::VectorXd gx = params.shape.backward(params.mlp(), tape, 2.0 * inv_n * err, grad_mlp);
        const TimeBlend tb = time_blend(c, s.input.frame);
        double* gt = out.gradient.data() + params.time_table_offset();
        for (int k = 0; k < c.time_embedding_dim; ++k) {
            gt[tb.lo * c.time_embedding_dim + k] += (1.0 - tb.w) * gx[embed_at + k];
            gt[tb.hi * c.time_embedding_dim + k] += tb.w * gx[embed_at + k];
        }
        if (s.input.class_index) {
            double* gc = out.gradient.data() + params.class_table_offset() + *s.input.class_index * c.class_embedding_dim;
            for (int k = 0; k < c.class_embedding_dim; ++k) {
                gc[k] += gx[embed_at + c.time_embedding_dim + k];
            }
        }
    }
    return out;
}

double field_loss(const FieldParams& params, std::span<const FieldSample> batch) {
    double loss = 0.0;
    for (const FieldSample& s : batch) {
        loss += (field_forward(params, s.input) - s.target).squaredNorm();
    }
    return loss / double(batch.size());
}

FieldFit fit_field(FieldParams params, std::span<const FieldSample> samples, double learning_rate, int iterations) {
    if (samples.empty()) {
        throw std::invalid_argument("fit_field: no samples");
    }
    FieldFit fit{std::move(params), {}};
    fit.loss_trace.reserve(std::size_t(std::max(iterations, 0)) + 1);
    for (int it = 0; it < iterations; ++it) {
        const FieldLossGradient lg = field_gradient(fit.params, samples);
        if (!std::isfinite(lg.loss)) {
            throw std::runtime_error("fit_field: loss became non-finite at iteration " + std::to_string(it));
        }
        fit.loss_trace.push_back(lg.loss);
        if (learning_rate == 0.0) {
            continue;
        }
        for (std::size_t i = 0; i < fit.params.values.size(); ++i) {
            fit.params.values[i] -= learning_rate * lg.gradient[i];
        }
    }
    fit.loss_trace.push_back(field_loss(fit.params, samples));
    return fit;
}

void save_field(const FieldParams& params, const std::filesystem::path& path) {
    const FieldConfig& c = params.config;
    nlohmann::json meta = {
        {"format", "splatstream-field"},
        {"version", 1},
        {"dtype", "float32-le"},
        {"count", params.values.size()},
        {"layers", params.shape.layer_sizes()},
        {"hidden_activation", activation_name(params.shape.hidden_activation())},
        {"output_activation", activation_name(params.shape.output_activation())},
        {"time_table", {c.frames, c.time_embedding_dim}},
        {"class_table", {c.classes, c.class_embedding_dim}},
        {"config",
         {{"position_frequencies", c.position_frequencies},
          {"direction_frequencies", c.direction_frequencies},
          {"hidden_width", c.hidden_width},
          {"hidden_layers", c.hidden_layers},
          {"position_scale", c.position_scale},
          {"depth_scale", c.depth_scale},
          {"seed", c.seed}}},
    };
    std::ofstream bin(path, std::ios::binary);
    if (!bin) {
        throw std::runtime_error("cannot write " + path.string());
    }
    for (double v : params.values) {
        std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
        if constexpr (std::endian::native == std::endian::big) {
            bits = __builtin_bswap32(bits);
        }
        bin.write(reinterpret_cast<const char*>(&bits), 4);
    }
    std::ofstream(path.string() + ".json") << meta.dump(2) << "\n";
}

FieldParams load_field(const std::filesystem::path& path) {
    std::ifstream meta_in(path.string() + ".json");
    if (!meta_in) {
        throw std::runtime_error("missing field sidecar " + path.string() + ".json");
    }
    const nlohmann::json meta = nlohmann::json::parse(meta_in);
    if (meta.value("format", "") != "splatstream-field" || meta.value("version", 0) != 1) {
        throw std::runtime_error("unsupported field file " + path.string());
    }
    FieldConfig c;
    const auto& jc = meta.at("config");
    c.position_frequencies = jc.at("position_frequencies");
    c.direction_frequencies = jc.at("direction_frequencies");
    c.hidden_width = jc.at("hidden_width");
    c.hidden_layers = jc.at("hidden_layers");
    c.position_scale = jc.at("position_scale");
    c.depth_scale = jc.at("depth_scale");
    c.seed = jc.at("seed");
    c.frames = meta.at("time_table")[0];
    c.time_embedding_dim = meta.at("time_table")[1];
    c.classes = meta.at("class_table")[0];
    c.class_embedding_dim = meta.at("class_table")[1];
    FieldParams p = FieldParams::create(c);
    const std::size_t count = meta.at("count");
    if (count != p.values.size() || meta.at("layers").get<std::vector<int>>() != p.shape.layer_sizes()) {
        throw std::runtime_error("field sidecar shapes disagree with the architecture");
    }
    std::ifstream bin(path, std::ios::binary);
    std::vector<std::uint32_t> raw(count);
    bin.read(reinterpret_cast<char*>(raw.data()), std::streamsize(count * 4));
    if (!bin || bin.gcount() != std::streamsize(count * 4)) {
        throw std::runtime_error("field file " + path.string() + " is truncated");
    }
    for (std::size_t i = 0; i < count; ++i) {
        std::uint32_t bits = raw[i];
        if constexpr (std::endian::native == std::endian::big) {
            bits = __builtin_bswap32(bits);
        }
        p.values[i] = std::bit_cast<float>(bits);
    }
    return p;
}

}  // namespace splatstream
