#pragma once

#include <functional>
#include <span>

#include "idian/mlp.hpp"
#include "idian/tape.hpp"

namespace idian {

enum class Direction { descend, ascend };

const char* direction_name(Direction d);
Direction direction_from_name(const std::string& name);

/// p <- p -/+ rate * g, in place.
void sgd_step(Tensor& param, const Tensor& grad, double rate, Direction dir);

/// Applies the update to every layer of a network. Parameters without an
/// entry in the gradient set are left untouched (zero gradient).
void sgd_step(Mlp& net, int net_id, const GradientSet& grads, double rate, Direction dir);

/// Mutable view of one parameter array for perturbation.
struct ParamRef {
    ParamKey key;
    Tensor* value = nullptr;
};

std::vector<ParamRef> param_refs(Mlp& net, int net_id);

/// Central-difference check of analytic gradients: perturbs each parameter
/// entry by +/- epsilon, re-evaluates loss_fn, and returns the maximum
/// relative error over all entries. loss_fn must be deterministic for fixed
/// parameters.
double grad_check(const std::function<double()>& loss_fn, std::span<const ParamRef> params,
                  const GradientSet& analytic, double epsilon);

} // namespace idian
