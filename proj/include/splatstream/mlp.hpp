#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace splatstream {

enum class Activation { identity, relu, tanh, sigmoid };

/// Fully connected network layout. Parameters live outside the shape in one flat
/// buffer: for each layer, the weight matrix (out x in, column-major) then the bias.
class MlpShape {
public:
    MlpShape() = default;
    MlpShape(std::vector<int> layer_sizes, Activation hidden, Activation output);

    int input_size() const { return sizes_.front(); }
    int output_size() const { return sizes_.back(); }
    const std::vector<int>& layer_sizes() const { return sizes_; }
    Activation hidden_activation() const { return hidden_; }
    Activation output_activation() const { return output_; }
    std::size_t parameter_count() const { return parameter_count_; }

    /// Activations kept by forward() for backward().
    struct Tape {
        std::vector<Eigen::VectorXd> inputs;
        std::vector<Eigen::VectorXd> outputs;
    };

    Eigen::VectorXd forward(std::span<const double> params, const Eigen::VectorXd& x, Tape* tape = nullptr) const;

    /// Accumulates dL/dparams into grad_params and returns dL/dx.
    Eigen::VectorXd backward(std::span<const double> params, const Tape& tape, const Eigen::VectorXd& grad_out,
                             std::span<double> grad_params) const;

    /// Glorot-uniform weights scaled by `gain` on the last layer; zero biases.
    void initialize(std::span<double> params, std::uint64_t seed, double last_layer_gain = 1.0) const;

    friend bool operator==(const MlpShape&, const MlpShape&) = default;

private:
    std::size_t layer_offset(std::size_t layer) const { return offsets_[layer]; }

    std::vector<int> sizes_;
    std::vector<std::size_t> offsets_;
    Activation hidden_ = Activation::relu;
    Activation output_ = Activation::identity;
    std::size_t parameter_count_ = 0;
};

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

}  // namespace splatstream
