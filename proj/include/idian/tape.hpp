#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "idian/common.hpp"
#include "idian/tensor.hpp"

namespace idian {

/// Identifies one parameter array: (network id, layer index, weights|bias).
struct ParamKey {
    int net = 0;
    int layer = 0;
    bool bias = false;

    std::uint32_t encoded() const {
        return (static_cast<std::uint32_t>(net) << 16) |
               (static_cast<std::uint32_t>(layer) << 1) | (bias ? 1u : 0u);
    }
    bool operator==(const ParamKey&) const = default;
};

/// Per-parameter gradient arrays, shapes mirroring the parameter set.
struct GradientSet {
    std::unordered_map<std::uint32_t, Tensor> grads;

    const Tensor* find(ParamKey key) const {
        auto it = grads.find(key.encoded());
        return it == grads.end() ? nullptr : &it->second;
    }
    bool empty() const { return grads.empty(); }
};

/// Reverse-mode differentiation over a recorded computation graph, rebuilt
/// per batch. Nodes hold matrix values; backward() can be run from any
/// scalar node, which is what the per-component gradient routing needs.
class Tape {
public:
    enum class Op {
        kConstant,
        kParam,
        kMatMul,    // A * B
        kMatMulABt, // A * B^T
        kTranspose,
        kVStack,    // rows of A above rows of B
        kSliceRows, // rows [i0, i0+len) of A
        kAdd,
        kSub,
        kHadamard,
        kAffine,    // c0 * A + c1, elementwise
        kAddRowVec, // A + broadcast row vector (1 x cols)
        kAddColVec, // A + broadcast column vector (rows x 1)
        kRelu,
        kSigmoid,
        kSoftmaxRows,
        kLogClamped, // log(max(x, kLogFloor))
        kSquare,
        kSum,  // 1x1
        kMean, // 1x1, over all entries
        kRowSum, // rows x 1
    };

    static constexpr double kLogFloor = 1e-12;

    int constant(Tensor value);
    int param(ParamKey key, const Tensor& value);

    int matmul(int a, int b);
    int matmul_abt(int a, int b);
    int transpose(int a);
    int vstack(int a, int b);
    int slice_rows(int a, Eigen::Index i0, Eigen::Index len);
    int add(int a, int b);
    int sub(int a, int b);
    int hadamard(int a, int b);
    int affine(int a, double scale, double shift);
    int add_rowvec(int a, int row);
    int add_colvec(int a, int col);
    int relu(int a);
    int sigmoid(int a);
    int softmax_rows(int a);
    int log_clamped(int a);
    int square(int a);
    int sum(int a);
    int mean(int a);
    int row_sum(int a);

    const Tensor& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    double scalar(int id) const;

    /// Reverse sweep from a scalar root. Adjoints from any previous sweep are
    /// discarded; parameters unreachable from the root get zero gradient.
    void backward(int root);

    /// Gradients for every registered parameter, zero-filled where the last
    /// backward() did not reach. Requires a prior backward().
    GradientSet gradients() const;

    const Tensor* gradient(ParamKey key) const;

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Op op;
        int a = -1;
        int b = -1;
        double c0 = 0.0;
        double c1 = 0.0;
        Eigen::Index i0 = 0; // slice start
        Tensor value;
        Tensor adjoint;
        bool needs_grad = false;
        bool has_adjoint = false;
    };

    int push(Node n);
    void accumulate(int id, const Tensor& delta);
    bool needs(int id) const { return id >= 0 && nodes_[static_cast<std::size_t>(id)].needs_grad; }

    std::vector<Node> nodes_;
    std::unordered_map<std::uint32_t, int> params_;
    bool swept_ = false;
};

} // namespace idian
