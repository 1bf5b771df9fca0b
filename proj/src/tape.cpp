#include "idian/tape.hpp"

#include <cmath>
#include <string>

namespace idian {

namespace {

std::string shape_of(const Tensor& t) {
    return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

} // namespace

int Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

int Tape::constant(Tensor value) {
    Node n;
    n.op = Op::kConstant;
    n.value = std::move(value);
    return push(std::move(n));
}

int Tape::param(ParamKey key, const Tensor& value) {
    auto it = params_.find(key.encoded());
    if (it != params_.end()) {
        const Tensor& existing = nodes_[static_cast<std::size_t>(it->second)].value;
        if (existing.rows() != value.rows() || existing.cols() != value.cols())
            throw ConfigError("parameter re-registered with different shape");
        return it->second;
    }
    Node n;
    n.op = Op::kParam;
    n.value = value;
    n.needs_grad = true;
    int id = push(std::move(n));
    params_.emplace(key.encoded(), id);
    return id;
}

int Tape::matmul(int a, int b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (av.cols() != bv.rows())
        throw ConfigError("matmul shape mismatch: " + shape_of(av) + " * " + shape_of(bv));
    Node n;
    n.op = Op::kMatMul;
    n.a = a;
    n.b = b;
    n.value.noalias() = av * bv;
    n.needs_grad = needs(a) || needs(b);
    return push(std::move(n));
}

int Tape::matmul_abt(int a, int b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (av.cols() != bv.cols())
        throw ConfigError("matmul_abt shape mismatch: " + shape_of(av) + " * " + shape_of(bv) + "^T");
    Node n;
    n.op = Op::kMatMulABt;
    n.a = a;
    n.b = b;
    n.value.noalias() = av * bv.transpose();
    n.needs_grad = needs(a) || needs(b);
    return push(std::move(n));
}

int Tape::transpose(int a) {
    Node n;
    n.op = Op::kTranspose;
    n.a = a;
    n.value = value(a).transpose();
    n.needs_grad = needs(a);
    return push(std::move(n));
}

int Tape::vstack(int a, int b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (av.cols() != bv.cols())
        throw ConfigError("vstack column mismatch: " + shape_of(av) + " over " + shape_of(bv));
    Node n;
    n.op = Op::kVStack;
    n.a = a;
    n.b = b;
    n.value.resize(av.rows() + bv.rows(), av.cols());
    n.value.topRows(av.rows()) = av;
    n.value.bottomRows(bv.rows()) = bv;
    n.needs_grad = needs(a) || needs(b);
    return push(std::move(n));
}

int Tape::slice_rows(int a, Eigen::Index i0, Eigen::Index len) {
    const Tensor& av = value(a);
    if (i0 < 0 || len < 0 || i0 + len > av.rows())
        throw ConfigError("slice_rows out of range");
    Node n;
    n.op = Op::kSliceRows;
    n.a = a;
    n.i0 = i0;
    n.value = av.middleRows(i0, len);
    n.needs_grad = needs(a);
    return push(std::move(n));
}

int Tape::add(int a, int b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (av.rows() != bv.rows() || av.cols() != bv.cols())
        throw ConfigError("add shape mismatch: " + shape_of(av) + " + " + shape_of(bv));
    Node n;
    n.op = Op::kAdd;
    n.a = a;
    n.b = b;
    n.value = av + bv;
    n.needs_grad = needs(a) || needs(b);
    return push(std::move(n));
}

int Tape::sub(int a, int b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (av.rows() != bv.rows() || av.cols() != bv.cols())
        throw ConfigError("sub shape mismatch: " + shape_of(av) + " - " + shape_of(bv));
    Node n;
    n.op = Op::kSub;
    n.a = a;
    n.b = b;
    n.value = av - bv;
    n.needs_grad = needs(a) || needs(b);
    return push(std::move(n));
}

int Tape::hadamard(int a, int b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (av.rows() != bv.rows() || av.cols() != bv.cols())
        throw ConfigError("hadamard shape mismatch: " + shape_of(av) + " . " + shape_of(bv));
    Node n;
    n.op = Op::kHadamard;
    n.a = a;
    n.b = b;
    n.value = av.cwiseProduct(bv);
    n.needs_grad = needs(a) || needs(b);
    return push(std::move(n));
}

int Tape::affine(int a, double scale, double shift) {
    Node n;
    n.op = Op::kAffine;
    n.a = a;
    n.c0 = scale;
    n.c1 = shift;
    n.value = (value(a).array() * scale + shift).matrix();
    n.needs_grad = needs(a);
    return push(std::move(n));
}

int Tape::add_rowvec(int a, int row) {
    const Tensor& av = value(a);
    const Tensor& rv = value(row);
    if (rv.rows() != 1 || rv.cols() != av.cols())
        throw ConfigError("add_rowvec expects 1x" + std::to_string(av.cols()) + ", got " + shape_of(rv));
    Node n;
    n.op = Op::kAddRowVec;
    n.a = a;
    n.b = row;
    n.value = av.rowwise() + rv.row(0);
    n.needs_grad = needs(a) || needs(row);
    return push(std::move(n));
}

int Tape::add_colvec(int a, int col) {
    const Tensor& av = value(a);
    const Tensor& cv = value(col);
    if (cv.cols() != 1 || cv.rows() != av.rows())
        throw ConfigError("add_colvec expects " + std::to_string(av.rows()) + "x1, got " + shape_of(cv));
    Node n;
    n.op = Op::kAddColVec;
    n.a = a;
    n.b = col;
    n.value = av.colwise() + cv.col(0);
    n.needs_grad = needs(a) || needs(col);
    return push(std::move(n));
}

int Tape::relu(int a) {
    Node n;
    n.op = Op::kRelu;
    n.a = a;
    n.value = value(a).cwiseMax(0.0);
    n.needs_grad = needs(a);
    return push(std::move(n));
}

int Tape::sigmoid(int a) {
    Node n;
    n.op = Op::kSigmoid;
    n.a = a;
    n.value = value(a).unaryExpr([](double x) { return stable_sigmoid(x); });
    n.needs_grad = needs(a);
    return push(std::move(n));
}

int Tape::softmax_rows(int a) {
    const Tensor& av = value(a);
    Node n;
    n.op = Op::kSoftmaxRows;
    n.a = a;
    n.value.resize(av.rows(), av.cols());
    for (Eigen::Index i = 0; i < av.rows(); ++i) {
        auto row = av.row(i).array();
        Eigen::ArrayXd e = (row - row.maxCoeff()).exp();
        n.value.row(i) = (e / e.sum()).matrix();
    }
    n.needs_grad = needs(a);
    return push(std::move(n));
}

int Tape::log_clamped(int a) {
    Node n;
    n.op = Op::kLogClamped;
    n.a = a;
    n.value = value(a).unaryExpr([](double x) { return std::log(x < kLogFloor ? kLogFloor : x); });
    n.needs_grad = needs(a);
    return push(std::move(n));
}

int Tape::square(int a) {
    const Tensor& av = value(a);
    Node n;
    n.op = Op::kSquare;
    n.a = a;
    n.value = av.cwiseProduct(av);
    n.needs_grad = needs(a);
    return push(std::move(n));
}

int Tape::sum(int a) {
    Node n;
    n.op = Op::kSum;
    n.a = a;
    n.value = Tensor::Constant(1, 1, value(a).sum());
    n.needs_grad = needs(a);
    return push(std::move(n));
}

int Tape::mean(int a) {
    Node n;
    n.op = Op::kMean;
    n.a = a;
    n.value = Tensor::Constant(1, 1, value(a).mean());
    n.needs_grad = needs(a);
    return push(std::move(n));
}

int Tape::row_sum(int a) {
    Node n;
    n.op = Op::kRowSum;
    n.a = a;
    n.value = value(a).rowwise().sum();
    n.needs_grad = needs(a);
    return push(std::move(n));
}

double Tape::scalar(int id) const {
    const Tensor& v = value(id);
    if (v.rows() != 1 || v.cols() != 1) throw UsageError("scalar() on non-1x1 node");
    return v(0, 0);
}

void Tape::accumulate(int id, const Tensor& delta) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.needs_grad) return;
    if (!n.has_adjoint) {
        n.adjoint = delta;
        n.has_adjoint = true;
    } else {
        n.adjoint += delta;
    }
}

void Tape::backward(int root) {
    if (nodes_.empty()) throw UsageError("backward() before any forward operation");
    if (root < 0 || root >= static_cast<int>(nodes_.size()))
        throw UsageError("backward() on unknown node");
    if (value(root).rows() != 1 || value(root).cols() != 1)
        throw UsageError("backward() root must be scalar");

    for (Node& n : nodes_) {
        n.has_adjoint = false;
        n.adjoint.resize(0, 0);
    }
    accumulate(root, Tensor::Constant(1, 1, 1.0));
    swept_ = true;

    for (int i = root; i >= 0; --i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        if (!n.has_adjoint || !n.needs_grad) continue;
        const Tensor& d = n.adjoint;
        switch (n.op) {
        case Op::kConstant:
        case Op::kParam:
            break;
        case Op::kMatMul:
            if (needs(n.a)) accumulate(n.a, d * value(n.b).transpose());
            if (needs(n.b)) accumulate(n.b, value(n.a).transpose() * d);
            break;
        case Op::kMatMulABt:
            if (needs(n.a)) accumulate(n.a, d * value(n.b));
            if (needs(n.b)) accumulate(n.b, d.transpose() * value(n.a));
            break;
        case Op::kTranspose:
            accumulate(n.a, d.transpose());
            break;
        case Op::kVStack: {
            Eigen::Index ra = value(n.a).rows();
            if (needs(n.a)) accumulate(n.a, d.topRows(ra));
            if (needs(n.b)) accumulate(n.b, d.bottomRows(d.rows() - ra));
            break;
        }
        case Op::kSliceRows: {
            Tensor full = Tensor::Zero(value(n.a).rows(), value(n.a).cols());
            full.middleRows(n.i0, d.rows()) = d;
            accumulate(n.a, full);
            break;
        }
        case Op::kAdd:
            if (needs(n.a)) accumulate(n.a, d);
            if (needs(n.b)) accumulate(n.b, d);
            break;
        case Op::kSub:
            if (needs(n.a)) accumulate(n.a, d);
            if (needs(n.b)) accumulate(n.b, -d);
            break;
        case Op::kHadamard:
            if (needs(n.a)) accumulate(n.a, d.cwiseProduct(value(n.b)));
            if (needs(n.b)) accumulate(n.b, d.cwiseProduct(value(n.a)));
            break;
        case Op::kAffine:
            accumulate(n.a, (d.array() * n.c0).matrix());
            break;
        case Op::kAddRowVec:
            if (needs(n.a)) accumulate(n.a, d);
            if (needs(n.b)) accumulate(n.b, d.colwise().sum());
            break;
        case Op::kAddColVec:
            if (needs(n.a)) accumulate(n.a, d);
            if (needs(n.b)) accumulate(n.b, d.rowwise().sum());
            break;
        case Op::kRelu: {
            const Tensor& x = value(n.a);
            accumulate(n.a, (x.array() > 0.0).select(d, Tensor::Zero(d.rows(), d.cols())));
            break;
        }
        case Op::kSigmoid: {
            const Tensor& y = n.value;
            accumulate(n.a, d.cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix())));
            break;
        }
        case Op::kSoftmaxRows: {
            const Tensor& p = n.value;
            Tensor dx(p.rows(), p.cols());
            for (Eigen::Index r = 0; r < p.rows(); ++r) {
                double dot = d.row(r).dot(p.row(r));
                dx.row(r) = p.row(r).cwiseProduct((d.row(r).array() - dot).matrix());
            }
            accumulate(n.a, dx);
            break;
        }
        case Op::kLogClamped: {
            const Tensor& x = value(n.a);
            // clamped entries sit on a flat piece, derivative zero there
            Tensor dx = (x.array() >= kLogFloor)
                            .select(d.cwiseQuotient(x.cwiseMax(kLogFloor)),
                                    Tensor::Zero(d.rows(), d.cols()));
            accumulate(n.a, dx);
            break;
        }
        case Op::kSquare:
            accumulate(n.a, (2.0 * d.cwiseProduct(value(n.a))));
            break;
        case Op::kSum:
            accumulate(n.a, Tensor::Constant(value(n.a).rows(), value(n.a).cols(), d(0, 0)));
            break;
        case Op::kMean: {
            const Tensor& x = value(n.a);
            double scale = d(0, 0) / static_cast<double>(x.size());
            accumulate(n.a, Tensor::Constant(x.rows(), x.cols(), scale));
            break;
        }
        case Op::kRowSum: {
            const Tensor& x = value(n.a);
            Tensor dx(x.rows(), x.cols());
            for (Eigen::Index r = 0; r < x.rows(); ++r) dx.row(r).setConstant(d(r, 0));
            accumulate(n.a, dx);
            break;
        }
        }
    }
}

GradientSet Tape::gradients() const {
    if (!swept_) throw UsageError("gradients() before backward()");
    GradientSet out;
    for (const auto& [key, id] : params_) {
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        if (n.has_adjoint)
            out.grads.emplace(key, n.adjoint);
        else
            out.grads.emplace(key, Tensor::Zero(n.value.rows(), n.value.cols()));
    }
    return out;
}

const Tensor* Tape::gradient(ParamKey key) const {
    if (!swept_) throw UsageError("gradient() before backward()");
    auto it = params_.find(key.encoded());
    if (it == params_.end()) return nullptr;
    const Node& n = nodes_[static_cast<std::size_t>(it->second)];
    return n.has_adjoint ? &n.adjoint : nullptr;
}

} // namespace idian
