#include "splatstream/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace splatstream {

namespace {

double activate(Activation a, double v) {
    switch (a) {
    case Activation::identity: return v;
    case Activation::relu: return v > 0.0 ? v : 0.0;
    case Activation::tanh: return std::tanh(v);
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-v));
    }
    return v;
}

/// Derivative expressed through the activation's output y.
double derivative(Activation a, double y) {
    switch (a) {
    case Activation::identity: return 1.0;
    case Activation::relu: return y > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: return 1.0 - y * y;
    case Activation::sigmoid: return y * (1.0 - y);
    }
    return 1.0;
}

}  // namespace

MlpShape::MlpShape(std::vector<int> layer_sizes, Activation hidden, Activation output)
    : sizes_(std::move(layer_sizes)), hidden_(hidden), output_(output) {
    if (sizes_.size() < 2) {
        throw std::invalid_argument("MlpShape needs at least an input and an output size");
    }
    for (int s : sizes_) {
        if (s < 1) {
            throw std::invalid_argument("MlpShape layer sizes must be positive");
        }
    }
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        offsets_.push_back(parameter_count_);
        parameter_count_ += std::size_t(sizes_[l + 1]) * std::size_t(sizes_[l]) + std::size_t(sizes_[l + 1]);
    }
}

Eigen::VectorXd MlpShape::forward(std::span<const double> params, const Eigen::VectorXd& x, Tape* tape) const {
    if (params.size() != parameter_count_ || x.size() != input_size()) {
        throw std::invalid_argument("MlpShape::forward: parameter or input size mismatch");
    }
    if (tape) {
        tape->inputs.clear();
        tape->outputs.clear();
    }
    Eigen::VectorXd h = x;
    const std::size_t layers = sizes_.size() - 1;
    for (std::size_t l = 0; l < layers; ++l) {
        const int in = sizes_[l];
        const int out = sizes_[l + 1];
        Eigen::Map<const Eigen::MatrixXd> w(params.data() + offsets_[l], out, in);
        Eigen::Map<const Eigen::VectorXd> b(params.data() + offsets_[l] + std::size_t(out) * in, out);
        Eigen::VectorXd z = w * h + b;
        const Activation act = (l + 1 == layers) ? output_ : hidden_;
        for (int k = 0; k < out; ++k) {
            z[k] = activate(act, z[k]);
        }
        if (tape) {
            tape->inputs.push_back(std::move(h));
            tape->outputs.push_back(z);
        }
        h = std::move(z);
    }
    return h;
}

Eigen::VectorXd MlpShape::backward(std::span<const double> params, const Tape& tape, const Eigen::VectorXd& grad_out,
                                   std::span<double> grad_params) const {
    const std::size_t layers = sizes_.size() - 1;
    if (tape.outputs.size() != layers || grad_params.size() != parameter_count_) {
        throw std::invalid_argument("MlpShape::backward: tape or gradient buffer does not match the shape");
    }
    Eigen::VectorXd g = grad_out;
    for (std::size_t l = layers; l-- > 0;) {
        const int in = sizes_[l];
        const int out = sizes_[l + 1];
        const Activation act = (l + 1 == layers) ? output_ : hidden_;
        const Eigen::VectorXd& y = tape.outputs[l];
        for (int k = 0; k < out; ++k) {
            g[k] *= derivative(act, y[k]);
        }
        Eigen::Map<const Eigen::MatrixXd> w(params.data() + offsets_[l], out, in);
        Eigen::Map<Eigen::MatrixXd> gw(grad_params.data() + offsets_[l], out, in);
        Eigen::Map<Eigen::VectorXd> gb(grad_params.data() + offsets_[l] + std::size_t(out) * in, out);
        gw.noalias() += g * tape.inputs[l].transpose();
        gb += g;
        g = w.transpose() * g;
    }
    return g;
}

void MlpShape::initialize(std::span<double> params, std::uint64_t seed, double last_layer_gain) const {
    if (params.size() != parameter_count_) {
        throw std::invalid_argument("MlpShape::initialize: buffer size mismatch");
    }
    std::mt19937_64 rng(seed);
    const std::size_t layers = sizes_.size() - 1;
    for (std::size_t l = 0; l < layers; ++l) {
        const int in = sizes_[l];
        const int out = sizes_[l + 1];
        double limit = std::sqrt(6.0 / double(in + out));
        if (l + 1 == layers) {
            limit *= last_layer_gain;
        }
        std::uniform_real_distribution<double> dist(-limit, limit);
        double* w = params.data() + offsets_[l];
        for (std::size_t k = 0; k < std::size_t(out) * in; ++k) {
            w[k] = dist(rng);
        }
        std::fill(w + std::size_t(out) * in, w + std::size_t(out) * in + out, 0.0);
    }
}

const char* activation_name(Activation a) {
    switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    }
    return "identity";
}

Activation activation_from_name(const std::string& name) {
    if (name == "identity") return Activation::identity;
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    if (name == "sigmoid") return Activation::sigmoid;
    throw std::invalid_argument("unknown activation '" + name + "'");
}

}  // namespace splatstream
