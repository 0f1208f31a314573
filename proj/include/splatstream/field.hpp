#pragma once

#include "splatstream/core.hpp"
#include "splatstream/mlp.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace splatstream {

struct FieldConfig {
    int position_frequencies = 6;
    int direction_frequencies = 2;
    int hidden_width = 64;
    int hidden_layers = 2;
    int time_embedding_dim = 8;
    int class_embedding_dim = 8;
    /// Rows of the per-frame time embedding table.
    int frames = 1;
    /// Rows of the class table; zero for the static field.
    int classes = 0;
    /// Positions are divided by this before encoding.
    double position_scale = 1.0;
    /// Depths are divided by this (the scene's maximum depth).
    double depth_scale = 1.0;
    std::uint64_t seed = 0;

    friend bool operator==(const FieldConfig&, const FieldConfig&) = default;
};

/// Distance-aware color field. One flat parameter buffer laid out as
/// [MLP | time table (frames x time_dim) | class table (classes x class_dim)].
struct FieldParams {
    FieldConfig config;
    MlpShape shape;
    std::vector<double> values;

    static FieldParams create(const FieldConfig& config);

    std::size_t mlp_size() const { return shape.parameter_count(); }
    std::size_t time_table_offset() const { return mlp_size(); }
    std::size_t class_table_offset() const {
        return mlp_size() + std::size_t(config.frames) * config.time_embedding_dim;
    }
    std::span<const double> mlp() const { return {values.data(), mlp_size()}; }
    std::span<double> mlp() { return {values.data(), mlp_size()}; }
};

int field_input_size(const FieldConfig& config);

struct FieldInput {
    Vec3 position = Vec3::Zero();
    double depth = 0.0;
    /// Unit viewing direction.
    Vec3 direction = Vec3::UnitZ();
    /// Frame coordinate; fractional values interpolate the time table linearly.
    double frame = 0.0;
    std::optional<int> class_index;
};

struct FieldSample {
    FieldInput input;
    Vec3 target = Vec3::Zero();
};

/// Encoded network input for one query.
Eigen::VectorXd encode_field_input(const FieldParams& params, const FieldInput& input);

Vec3 field_forward(const FieldParams& params, const FieldInput& input);

struct FieldLossGradient {
    double loss = 0.0;
    /// Same layout as FieldParams::values.
    std::vector<double> gradient;
};

/// Loss = mean over samples of |rgb - target|^2, with its exact gradient.
FieldLossGradient field_gradient(const FieldParams& params, std::span<const FieldSample> batch);
double field_loss(const FieldParams& params, std::span<const FieldSample> batch);

struct FieldFit {
    FieldParams params;
    std::vector<double> loss_trace;
};

/// Full-batch gradient descent. Throws std::runtime_error on a non-finite loss.
FieldFit fit_field(FieldParams params, std::span<const FieldSample> samples, double learning_rate, int iterations);

/// Flat little-endian float32 values at `path`, shapes in `path` + ".json".
void save_field(const FieldParams& params, const std::filesystem::path& path);
FieldParams load_field(const std::filesystem::path& path);

/// Static and dynamic fields used by the renderer for Gaussians whose color is a field marker.
struct NeuralFields {
    std::optional<FieldParams> static_field;
    std::optional<FieldParams> dynamic_field;
};

}  // namespace splatstream
