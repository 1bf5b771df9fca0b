#pragma once

#include <cstdint>
#include <vector>

#include "idian/common.hpp"
#include "idian/rng.hpp"
#include "idian/tape.hpp"
#include "idian/tensor.hpp"

namespace idian {

enum class Activation { identity, relu, sigmoid, softmax };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

/// One fully connected layer: weights (in x out), bias (1 x out).
struct DenseLayer {
    Tensor weights;
    Tensor bias;
    Activation act = Activation::identity;

    Eigen::Index in_dim() const { return weights.rows(); }
    Eigen::Index out_dim() const { return weights.cols(); }
};

struct Mlp {
    std::vector<DenseLayer> layers;

    Eigen::Index in_dim() const;
    Eigen::Index out_dim() const;
    std::size_t param_count() const;

    /// Pure function of (params, input); rows are batch items.
    Tensor forward(const Tensor& input) const;

    /// Same computation recorded on the tape; parameters are registered
    /// under (net_id, layer, weights|bias) and may be reused by later calls.
    int forward_tape(Tape& tape, int net_id, int input_node) const;

    /// Adjacent layer dims must chain.
    void validate() const;
};

/// Layer i maps dims[i] -> dims[i+1] with acts[i].
Mlp make_mlp(const std::vector<Eigen::Index>& dims, const std::vector<Activation>& acts,
             std::uint64_t init_seed);

/// Glorot-uniform weights, zero bias, one derived stream per layer so the
/// result does not depend on construction order.
void init_params(Mlp& net, std::uint64_t seed);

Tensor apply_activation(Activation act, const Tensor& pre);

} // namespace idian
