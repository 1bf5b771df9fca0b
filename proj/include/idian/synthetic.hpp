#pragma once

#include <cstdint>
#include <utility>

#include "idian/data.hpp"

namespace idian {

/// Two-domain generator: class-conditional Gaussian clusters in a shared
/// latent space, projected by per-domain linear maps into feature spaces of
/// possibly different width, with the target latent rotated to create a
/// controlled shift. Values are squashed into [0, 1].
struct SyntheticSpec {
    std::size_t n_per_class = 500;
    int n_c = 2;
    int d_s = 24;
    int d_t = 16;
    double separation = 3.0;   // class-center spread, in latent units
    double latent_noise = 1.0; // within-class spread
    double rotation_deg = 30.0; // target latent rotation; 0 disables the shift
    bool distinct_maps = true;  // target projects through its own map
};

std::pair<DomainDataset, DomainDataset> make_synthetic(const SyntheticSpec& spec,
                                                       std::uint64_t seed);

inline std::pair<DomainDataset, DomainDataset> make_synthetic(std::size_t n_per_class, int n_c,
                                                              int d_s, int d_t,
                                                              std::uint64_t shift_seed) {
    SyntheticSpec spec;
    spec.n_per_class = n_per_class;
    spec.n_c = n_c;
    spec.d_s = d_s;
    spec.d_t = d_t;
    return make_synthetic(spec, shift_seed);
}

} // namespace idian
