#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "idian/common.hpp"
#include "idian/rng.hpp"
#include "idian/tensor.hpp"

namespace idian {

enum class Domain { source, target };

/// A feature vector with its observation mask. Missing positions hold the
/// canonical 0 placeholder; mask is 1 where observed.
struct Instance {
    std::vector<double> features;
    std::vector<std::uint8_t> mask;
    std::optional<int> label;
};

struct DomainDataset {
    Domain domain = Domain::source;
    int dim = 0;
    int n_classes = 0;
    std::size_t labeled_count = 0; // leading instances that carry labels
    std::vector<Instance> instances;

    std::size_t size() const { return instances.size(); }
    bool fully_observed() const;

    /// Feature matrix / mask matrix for a subset of instances.
    Tensor features_of(const std::vector<std::size_t>& idx) const;
    Tensor masks_of(const std::vector<std::size_t>& idx) const;
    std::vector<int> labels_of(const std::vector<std::size_t>& idx) const;

    /// Checks every dataset invariant; throws ConfigError on violation.
    void validate() const;
};

struct MissingSpec {
    double rate = 0.0; // in [0, 1)
    std::uint64_t seed = 0;
};

/// One composite training batch: a source block, a labeled-target block and
/// an unlabeled-target block, each of exactly the same row count.
struct Batch {
    Tensor src_x;
    std::vector<int> src_y;
    std::vector<std::size_t> src_idx;

    Tensor tl_x;
    Tensor tl_m;
    std::vector<int> tl_y;
    std::vector<std::size_t> tl_idx;

    Tensor tu_x;
    Tensor tu_m;
    std::vector<std::size_t> tu_idx;

    Eigen::Index block_size() const { return src_x.rows(); }
};

/// Masks each entry independently (MCAR) with the given rate; masked
/// features become 0, labels are untouched. The dataset must be fully
/// observed (double masking is forbidden). Deterministic per seed.
DomainDataset simulate_missing(const DomainDataset& ds, const MissingSpec& spec);

/// Applies one global feature permutation to every instance's features and
/// mask. perm[k] names the old index placed at new position k.
DomainDataset apply_channel_permutation(const DomainDataset& ds,
                                        const std::vector<std::size_t>& perm);
std::vector<std::size_t> channel_permutation(int dim, std::uint64_t seed);
DomainDataset shuffle_channels(const DomainDataset& ds, std::uint64_t seed);

/// Per-dimension affine map fitted on observed entries of a training split.
struct MinMaxScaler {
    std::vector<double> mins;
    std::vector<double> maxs;

    DomainDataset apply(const DomainDataset& ds) const;
};

/// Observed entries map to [0, 1]; constant (or never-observed) dimensions
/// map to 0.5; placeholders stay 0.
std::pair<DomainDataset, MinMaxScaler> minmax_normalize(const DomainDataset& train);

/// One epoch of composite batches: the source set reshuffled into
/// floor(n_s/n_b) blocks without replacement, each joined with a labeled and
/// an unlabeled target sample of the same size (with replacement when a pool
/// is smaller than the block). The labeled pool is the leading
/// labeled_count target instances.
std::vector<Batch> compose_batches(const DomainDataset& source, const DomainDataset& target,
                                   std::size_t batch_size, std::uint64_t epoch_seed);

} // namespace idian
