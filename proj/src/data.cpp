#include "idian/data.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace idian {

bool DomainDataset::fully_observed() const {
    for (const Instance& ins : instances)
        for (std::uint8_t m : ins.mask)
            if (!m) return false;
    return true;
}

Tensor DomainDataset::features_of(const std::vector<std::size_t>& idx) const {
    Tensor out(static_cast<Eigen::Index>(idx.size()), dim);
    for (std::size_t r = 0; r < idx.size(); ++r)
        for (int c = 0; c < dim; ++c)
            out(static_cast<Eigen::Index>(r), c) = instances[idx[r]].features[static_cast<std::size_t>(c)];
    return out;
}

Tensor DomainDataset::masks_of(const std::vector<std::size_t>& idx) const {
    Tensor out(static_cast<Eigen::Index>(idx.size()), dim);
    for (std::size_t r = 0; r < idx.size(); ++r)
        for (int c = 0; c < dim; ++c)
            out(static_cast<Eigen::Index>(r), c) = instances[idx[r]].mask[static_cast<std::size_t>(c)] ? 1.0 : 0.0;
    return out;
}

std::vector<int> DomainDataset::labels_of(const std::vector<std::size_t>& idx) const {
    std::vector<int> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) {
        if (!instances[i].label)
            throw UsageError("labels_of: instance " + std::to_string(i) + " is unlabeled");
        out.push_back(*instances[i].label);
    }
    return out;
}

void DomainDataset::validate() const {
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const Instance& ins = instances[i];
        if (ins.features.size() != static_cast<std::size_t>(dim) ||
            ins.mask.size() != static_cast<std::size_t>(dim))
            throw ConfigError("instance " + std::to_string(i) + ": length != dim");
        for (int c = 0; c < dim; ++c)
            if (!ins.mask[static_cast<std::size_t>(c)] && ins.features[static_cast<std::size_t>(c)] != 0.0)
                throw ConfigError("instance " + std::to_string(i) + ": nonzero value at masked entry");
        if (ins.label && (*ins.label < 0 || *ins.label >= n_classes))
            throw ConfigError("instance " + std::to_string(i) + ": label out of range");
        if (domain == Domain::source) {
            if (!ins.label) throw ConfigError("source instance " + std::to_string(i) + " unlabeled");
            for (std::uint8_t m : ins.mask)
                if (!m) throw ConfigError("source instance " + std::to_string(i) + " has missing entries");
        }
        if (i < labeled_count && !ins.label)
            throw ConfigError("instance " + std::to_string(i) + " inside the labeled prefix is unlabeled");
    }
    if (labeled_count > instances.size()) throw ConfigError("labeled_count exceeds dataset size");
}

DomainDataset simulate_missing(const DomainDataset& ds, const MissingSpec& spec) {
    if (spec.rate < 0.0 || spec.rate >= 1.0)
        throw ConfigError("missing rate must be in [0, 1)");
    if (!ds.fully_observed())
        throw UsageError("simulate_missing on an already-masked dataset");
    DomainDataset out = ds;
    Rng rng(spec.seed);
    for (Instance& ins : out.instances) {
        for (std::size_t k = 0; k < ins.features.size(); ++k) {
            if (rng.bernoulli(spec.rate)) {
                ins.mask[k] = 0;
                ins.features[k] = 0.0;
            }
        }
    }
    return out;
}

std::vector<std::size_t> channel_permutation(int dim, std::uint64_t seed) {
    Rng rng(seed);
    return rng.permutation(static_cast<std::size_t>(dim));
}

DomainDataset apply_channel_permutation(const DomainDataset& ds,
                                        const std::vector<std::size_t>& perm) {
    if (perm.size() != static_cast<std::size_t>(ds.dim))
        throw ConfigError("permutation length != dim");
    DomainDataset out = ds;
    for (std::size_t i = 0; i < ds.instances.size(); ++i) {
        for (std::size_t k = 0; k < perm.size(); ++k) {
            out.instances[i].features[k] = ds.instances[i].features[perm[k]];
            out.instances[i].mask[k] = ds.instances[i].mask[perm[k]];
        }
    }
    return out;
}

DomainDataset shuffle_channels(const DomainDataset& ds, std::uint64_t seed) {
    return apply_channel_permutation(ds, channel_permutation(ds.dim, seed));
}

std::pair<DomainDataset, MinMaxScaler> minmax_normalize(const DomainDataset& train) {
    if (train.instances.empty()) throw UsageError("minmax_normalize on empty dataset");
    MinMaxScaler scaler;
    scaler.mins.assign(static_cast<std::size_t>(train.dim), std::numeric_limits<double>::infinity());
    scaler.maxs.assign(static_cast<std::size_t>(train.dim), -std::numeric_limits<double>::infinity());
    for (const Instance& ins : train.instances) {
        for (std::size_t k = 0; k < ins.features.size(); ++k) {
            if (!ins.mask[k]) continue;
            scaler.mins[k] = std::min(scaler.mins[k], ins.features[k]);
            scaler.maxs[k] = std::max(scaler.maxs[k], ins.features[k]);
        }
    }
    return {scaler.apply(train), std::move(scaler)};
}

DomainDataset MinMaxScaler::apply(const DomainDataset& ds) const {
    if (mins.size() != static_cast<std::size_t>(ds.dim))
        throw ConfigError("scaler dimension mismatch");
    DomainDataset out = ds;
    for (Instance& ins : out.instances) {
        for (std::size_t k = 0; k < ins.features.size(); ++k) {
            if (!ins.mask[k]) continue;
            double lo = mins[k], hi = maxs[k];
            if (!std::isfinite(lo) || !std::isfinite(hi) || lo == hi)
                ins.features[k] = 0.5; // constant or never-observed dimension
            else
                ins.features[k] = (ins.features[k] - lo) / (hi - lo);
        }
    }
    return out;
}

namespace {

std::vector<std::size_t> sample_block(const std::vector<std::size_t>& pool, std::size_t n,
                                      Rng& rng) {
    std::vector<std::size_t> out;
    out.reserve(n);
    if (pool.size() >= n) {
        std::vector<std::size_t> copy = pool;
        rng.shuffle(copy);
        out.assign(copy.begin(), copy.begin() + static_cast<std::ptrdiff_t>(n));
    } else {
        for (std::size_t i = 0; i < n; ++i) out.push_back(pool[rng.below(pool.size())]);
    }
    return out;
}

} // namespace

std::vector<Batch> compose_batches(const DomainDataset& source, const DomainDataset& target,
                                   std::size_t batch_size, std::uint64_t epoch_seed) {
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
    if (source.size() < batch_size)
        throw ConfigError("source smaller than one batch (" + std::to_string(source.size()) +
                          " < " + std::to_string(batch_size) + ")");
    if (target.labeled_count == 0)
        throw ConfigError("no labeled target instances; the semi-supervised setting needs at least one");
    if (target.labeled_count >= target.size())
        throw ConfigError("no unlabeled target instances to sample from");

    Rng rng(epoch_seed);
    std::vector<std::size_t> src_order = rng.permutation(source.size());
    std::vector<std::size_t> labeled_pool(target.labeled_count);
    for (std::size_t i = 0; i < target.labeled_count; ++i) labeled_pool[i] = i;
    std::vector<std::size_t> unlabeled_pool;
    for (std::size_t i = target.labeled_count; i < target.size(); ++i) unlabeled_pool.push_back(i);

    std::size_t n_batches = source.size() / batch_size;
    std::vector<Batch> batches;
    batches.reserve(n_batches);
    for (std::size_t j = 0; j < n_batches; ++j) {
        Batch b;
        b.src_idx.assign(src_order.begin() + static_cast<std::ptrdiff_t>(j * batch_size),
                         src_order.begin() + static_cast<std::ptrdiff_t>((j + 1) * batch_size));
        b.tl_idx = sample_block(labeled_pool, batch_size, rng);
        b.tu_idx = sample_block(unlabeled_pool, batch_size, rng);

        b.src_x = source.features_of(b.src_idx);
        b.src_y = source.labels_of(b.src_idx);
        b.tl_x = target.features_of(b.tl_idx);
        b.tl_m = target.masks_of(b.tl_idx);
        b.tl_y = target.labels_of(b.tl_idx);
        b.tu_x = target.features_of(b.tu_idx);
        b.tu_m = target.masks_of(b.tu_idx);
        batches.push_back(std::move(b));
    }
    return batches;
}

} // namespace idian
