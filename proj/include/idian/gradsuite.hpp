#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "idian/data.hpp"
#include "idian/networks.hpp"

namespace idian {

struct GradCheckResult {
    std::string name;
    double max_rel_err = 0.0;
};

/// Model with the production wiring but every width at most 8, small enough
/// for finite differences over all parameters.
Model make_tiny_model(int d_s, int d_t, int n_c, std::uint64_t seed);

/// Random batch for that model: uniform features, Bernoulli masks on the
/// target blocks (placeholder zeros kept consistent), random labels.
Batch make_random_batch(const Model& model, Eigen::Index n, double missing_rate,
                        std::uint64_t seed);

/// Central-difference verification of every recorded gradient: each loss
/// term and the combined objective, plus the objective under zero-fill and
/// under cross-domain-only pairing. Values are max relative errors.
std::vector<GradCheckResult> run_gradient_suite(std::uint64_t seed);

} // namespace idian
