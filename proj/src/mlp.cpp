#include "idian/mlp.hpp"

#include <cmath>
#include <string>

namespace idian {

const char* activation_name(Activation a) {
    switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::softmax: return "softmax";
    }
    return "?";
}

Activation activation_from_name(const std::string& name) {
    if (name == "identity") return Activation::identity;
    if (name == "relu") return Activation::relu;
    if (name == "sigmoid") return Activation::sigmoid;
    if (name == "softmax") return Activation::softmax;
    throw ConfigError("unknown activation: " + name);
}

Eigen::Index Mlp::in_dim() const {
    if (layers.empty()) throw ConfigError("empty network");
    return layers.front().in_dim();
}

Eigen::Index Mlp::out_dim() const {
    if (layers.empty()) throw ConfigError("empty network");
    return layers.back().out_dim();
}

std::size_t Mlp::param_count() const {
    std::size_t n = 0;
    for (const DenseLayer& l : layers) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
    return n;
}

void Mlp::validate() const {
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const DenseLayer& l = layers[i];
        if (l.bias.rows() != 1 || l.bias.cols() != l.out_dim())
            throw ConfigError("layer " + std::to_string(i) + ": bias shape inconsistent");
        if (i > 0 && layers[i - 1].out_dim() != l.in_dim())
            throw ConfigError("layer " + std::to_string(i) + ": dims do not chain");
    }
}

Tensor apply_activation(Activation act, const Tensor& pre) {
    switch (act) {
    case Activation::identity:
        return pre;
    case Activation::relu:
        return pre.cwiseMax(0.0);
    case Activation::sigmoid:
        return pre.unaryExpr([](double x) {
            if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
            double e = std::exp(x);
            return e / (1.0 + e);
        });
    case Activation::softmax: {
        Tensor out(pre.rows(), pre.cols());
        for (Eigen::Index i = 0; i < pre.rows(); ++i) {
            auto row = pre.row(i).array();
            Eigen::ArrayXd e = (row - row.maxCoeff()).exp();
            out.row(i) = (e / e.sum()).matrix();
        }
        return out;
    }
    }
    throw ConfigError("bad activation");
}

Tensor Mlp::forward(const Tensor& input) const {
    if (layers.empty()) throw ConfigError("empty network");
    if (input.cols() != in_dim())
        throw ConfigError("forward: input has " + std::to_string(input.cols()) +
                          " features, network expects " + std::to_string(in_dim()));
    Tensor x = input;
    for (const DenseLayer& l : layers) {
        Tensor pre = (x * l.weights).rowwise() + l.bias.row(0);
        x = apply_activation(l.act, pre);
    }
    return x;
}

int Mlp::forward_tape(Tape& tape, int net_id, int input_node) const {
    if (layers.empty()) throw ConfigError("empty network");
    if (tape.value(input_node).cols() != in_dim())
        throw ConfigError("forward_tape: input feature count mismatch");
    int x = input_node;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const DenseLayer& l = layers[i];
        int w = tape.param({net_id, static_cast<int>(i), false}, l.weights);
        int b = tape.param({net_id, static_cast<int>(i), true}, l.bias);
        int pre = tape.add_rowvec(tape.matmul(x, w), b);
        switch (l.act) {
        case Activation::identity: x = pre; break;
        case Activation::relu: x = tape.relu(pre); break;
        case Activation::sigmoid: x = tape.sigmoid(pre); break;
        case Activation::softmax: x = tape.softmax_rows(pre); break;
        }
    }
    return x;
}

void init_params(Mlp& net, std::uint64_t seed) {
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        DenseLayer& l = net.layers[i];
        Rng rng(derive_seed(seed, "layer", i));
        double bound = std::sqrt(6.0 / static_cast<double>(l.in_dim() + l.out_dim()));
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c)
                l.weights(r, c) = rng.uniform(-bound, bound);
        l.bias.setZero();
    }
}

Mlp make_mlp(const std::vector<Eigen::Index>& dims, const std::vector<Activation>& acts,
             std::uint64_t init_seed) {
    if (dims.size() < 2 || acts.size() != dims.size() - 1)
        throw ConfigError("make_mlp: need n+1 dims for n activations");
    Mlp net;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        DenseLayer l;
        l.weights.resize(dims[i], dims[i + 1]);
        l.bias = Tensor::Zero(1, dims[i + 1]);
        l.act = acts[i];
        net.layers.push_back(std::move(l));
    }
    init_params(net, init_seed);
    net.validate();
    return net;
}

} // namespace idian
