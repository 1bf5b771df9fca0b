#include "idian/optim.hpp"

#include <cmath>

namespace idian {

const char* direction_name(Direction d) {
    return d == Direction::descend ? "descend" : "ascend";
}

Direction direction_from_name(const std::string& name) {
    if (name == "descend") return Direction::descend;
    if (name == "ascend") return Direction::ascend;
    throw ConfigError("unknown direction '" + name + "' (descend, ascend)");
}

void sgd_step(Tensor& param, const Tensor& grad, double rate, Direction dir) {
    if (rate <= 0.0) throw ConfigError("sgd_step: rate must be positive");
    if (param.rows() != grad.rows() || param.cols() != grad.cols())
        throw ConfigError("sgd_step: parameter/gradient shape mismatch");
    if (dir == Direction::descend)
        param -= rate * grad;
    else
        param += rate * grad;
}

void sgd_step(Mlp& net, int net_id, const GradientSet& grads, double rate, Direction dir) {
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        DenseLayer& l = net.layers[i];
        if (const Tensor* gw = grads.find({net_id, static_cast<int>(i), false}))
            sgd_step(l.weights, *gw, rate, dir);
        if (const Tensor* gb = grads.find({net_id, static_cast<int>(i), true}))
            sgd_step(l.bias, *gb, rate, dir);
    }
}

std::vector<ParamRef> param_refs(Mlp& net, int net_id) {
    std::vector<ParamRef> refs;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        refs.push_back({{net_id, static_cast<int>(i), false}, &net.layers[i].weights});
        refs.push_back({{net_id, static_cast<int>(i), true}, &net.layers[i].bias});
    }
    return refs;
}

double grad_check(const std::function<double()>& loss_fn, std::span<const ParamRef> params,
                  const GradientSet& analytic, double epsilon) {
    if (epsilon < 1e-6 || epsilon > 1e-3)
        throw ConfigError("grad_check: epsilon outside [1e-6, 1e-3]");
    double max_rel = 0.0;
    for (const ParamRef& p : params) {
        const Tensor* g = analytic.find(p.key);
        for (Eigen::Index r = 0; r < p.value->rows(); ++r) {
            for (Eigen::Index c = 0; c < p.value->cols(); ++c) {
                double saved = (*p.value)(r, c);
                (*p.value)(r, c) = saved + epsilon;
                double lp = loss_fn();
                (*p.value)(r, c) = saved - epsilon;
                double lm = loss_fn();
                (*p.value)(r, c) = saved;
                if (!std::isfinite(lp) || !std::isfinite(lm))
                    throw NumericError("grad_check: non-finite loss");
                double numeric = (lp - lm) / (2.0 * epsilon);
                double analytic_v = g ? (*g)(r, c) : 0.0;
                double denom = std::max(std::abs(numeric) + std::abs(analytic_v), 1e-2);
                double rel = std::abs(numeric - analytic_v) / denom;
                if (rel > max_rel) max_rel = rel;
            }
        }
    }
    return max_rel;
}

} // namespace idian
