#include "idian/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "idian/common.hpp"
#include "idian/rng.hpp"
#include "idian/tensor.hpp"

namespace idian {

namespace {

Tensor gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double stddev) {
    Tensor out(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            out(i, j) = stddev * rng.normal();
    return out;
}

// Chain of plane rotations over coordinate pairs (0,1), (2,3), ...
Tensor rotation_chain(Eigen::Index k, double angle_rad) {
    Tensor rot = Tensor::Identity(k, k);
    const double c = std::cos(angle_rad);
    const double s = std::sin(angle_rad);
    for (Eigen::Index i = 0; i + 1 < k; i += 2) {
        rot(i, i) = c;
        rot(i, i + 1) = -s;
        rot(i + 1, i) = s;
        rot(i + 1, i + 1) = c;
    }
    return rot;
}

DomainDataset project_domain(Domain domain, int dim, int n_c, const Tensor& latent,
                             const std::vector<int>& labels, const Tensor& map,
                             double squash_scale, Rng& order_rng) {
    const Tensor raw = latent * map;
    DomainDataset ds;
    ds.domain = domain;
    ds.dim = dim;
    ds.n_classes = n_c;
    ds.instances.resize(static_cast<std::size_t>(raw.rows()));
    std::vector<std::size_t> order(ds.instances.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    order_rng.shuffle(order);
    for (std::size_t i = 0; i < order.size(); ++i) {
        const Eigen::Index row = static_cast<Eigen::Index>(order[i]);
        Instance& inst = ds.instances[i];
        inst.features.resize(static_cast<std::size_t>(dim));
        inst.mask.assign(static_cast<std::size_t>(dim), 1);
        for (int j = 0; j < dim; ++j) {
            const double z = raw(row, j) / squash_scale;
            inst.features[static_cast<std::size_t>(j)] = 1.0 / (1.0 + std::exp(-z));
        }
        inst.label = labels[static_cast<std::size_t>(row)];
    }
    ds.labeled_count = ds.instances.size();
    ds.validate();
    return ds;
}

} // namespace

std::pair<DomainDataset, DomainDataset> make_synthetic(const SyntheticSpec& spec,
                                                       std::uint64_t seed) {
    if (spec.n_per_class == 0) throw ConfigError("synthetic: n_per_class must be positive");
    if (spec.n_c < 2) throw ConfigError("synthetic: need at least two classes");
    if (spec.d_s < 1 || spec.d_t < 1) throw ConfigError("synthetic: feature dims must be positive");
    if (spec.separation <= 0.0 || spec.latent_noise <= 0.0)
        throw ConfigError("synthetic: separation and latent_noise must be positive");
    if (!spec.distinct_maps && spec.d_s != spec.d_t)
        throw ConfigError("synthetic: shared projection map requires d_s == d_t");

    const Eigen::Index k = std::max(1, std::min(spec.d_s, spec.d_t) / 2);

    Rng center_rng(derive_seed(seed, "centers"));
    Tensor centers = gaussian_matrix(center_rng, spec.n_c, k, spec.separation);

    // Unit column variance so squashed features stay spread over (0, 1).
    const double map_std = 1.0 / std::sqrt(static_cast<double>(k));
    Rng map_s_rng(derive_seed(seed, "map_s"));
    Tensor map_s = gaussian_matrix(map_s_rng, k, spec.d_s, map_std);
    Tensor map_t;
    if (spec.distinct_maps) {
        Rng map_t_rng(derive_seed(seed, "map_t"));
        map_t = gaussian_matrix(map_t_rng, k, spec.d_t, map_std);
    } else {
        map_t = map_s;
    }

    const double angle = spec.rotation_deg * std::numbers::pi / 180.0;
    const Tensor rot = rotation_chain(k, angle);

    const Eigen::Index n_total = static_cast<Eigen::Index>(spec.n_per_class) * spec.n_c;
    std::vector<int> labels(static_cast<std::size_t>(n_total));
    auto draw_latent = [&](Rng& rng) {
        Tensor z(n_total, k);
        Eigen::Index row = 0;
        for (int c = 0; c < spec.n_c; ++c) {
            for (std::size_t i = 0; i < spec.n_per_class; ++i, ++row) {
                labels[static_cast<std::size_t>(row)] = c;
                for (Eigen::Index j = 0; j < k; ++j)
                    z(row, j) = centers(c, j) + spec.latent_noise * rng.normal();
            }
        }
        return z;
    };

    Rng src_rng(derive_seed(seed, "src_z"));
    Tensor z_src = draw_latent(src_rng);
    Rng tgt_rng(derive_seed(seed, "tgt_z"));
    Tensor z_tgt = draw_latent(tgt_rng) * rot;

    const double squash_scale = spec.separation;
    Rng src_order(derive_seed(seed, "src_order"));
    Rng tgt_order(derive_seed(seed, "tgt_order"));
    DomainDataset source = project_domain(Domain::source, spec.d_s, spec.n_c, z_src, labels,
                                          map_s, squash_scale, src_order);
    DomainDataset target = project_domain(Domain::target, spec.d_t, spec.n_c, z_tgt, labels,
                                          map_t, squash_scale, tgt_order);
    return {std::move(source), std::move(target)};
}

} // namespace idian
