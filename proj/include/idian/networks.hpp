#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>

#include "idian/mlp.hpp"
#include "idian/rng.hpp"
#include "idian/tensor.hpp"

namespace idian {

enum class NetId : int {
    imputer = 0,       // d_t -> d_t, fills masked entries
    src_encoder = 1,   // d_s -> 1024
    tgt_encoder = 2,   // d_t -> 1024
    src_decoder = 3,   // 1024 -> d_s
    tgt_decoder = 4,   // 1024 -> d_t
    projector = 5,     // 1024 -> 256, shared across domains
    discriminator = 6, // 256 -> 1, domain probability
    classifier = 7,    // 256 -> n_c, softmax
};

inline constexpr int kNetCount = 8;

const char* net_name(NetId id);
NetId net_from_index(int i);

struct Model {
    int d_s = 0;
    int d_t = 0;
    int n_c = 0;

    Mlp imputer;
    Mlp src_encoder;
    Mlp tgt_encoder;
    Mlp src_decoder;
    Mlp tgt_decoder;
    Mlp projector;
    Mlp discriminator;
    Mlp classifier;

    Mlp& net(NetId id);
    const Mlp& net(NetId id) const;

    std::size_t param_count() const;
};

/// Fresh model with the fixed layer plan; each network gets its own derived
/// init stream so adding or removing one never shifts the others.
Model build_model(int d_s, int d_t, int n_c, std::uint64_t init_seed);

/// Sequential standard-normal stream for training-time imputation noise.
class NoiseSource {
public:
    explicit NoiseSource(std::uint64_t seed) : rng_(seed) {}

    Tensor normal_matrix(Eigen::Index rows, Eigen::Index cols);

private:
    Rng rng_;
};

/// Row r drawn from its own stream keyed by (seed, base_index + r), so a
/// held-out instance sees the same noise no matter how evaluation is batched.
Tensor indexed_noise(std::uint64_t seed, std::uint64_t base_index, Eigen::Index rows,
                     Eigen::Index cols);

/// Masked fill-in: observed entries pass through bit-identical, masked ones
/// are replaced by the imputer's output given noise in the holes.
Tensor impute(const Model& model, const Tensor& x, const Tensor& m, const Tensor& eps);

/// Class probabilities for already-imputed target rows.
Tensor target_class_probs(const Model& model, const Tensor& xhat);

struct CheckpointMeta {
    std::uint64_t master_seed = 0;
    std::uint64_t config_hash = 0;
};

/// Binary snapshot; a load restores every parameter bit-exactly.
void save_checkpoint(const Model& model, const CheckpointMeta& meta,
                     const std::filesystem::path& path);
std::pair<Model, CheckpointMeta> load_checkpoint(const std::filesystem::path& path);

} // namespace idian
