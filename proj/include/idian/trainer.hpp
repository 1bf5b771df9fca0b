#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "idian/data.hpp"
#include "idian/losses.hpp"
#include "idian/networks.hpp"
#include "idian/optim.hpp"

namespace idian {

struct TrainSwitches {
    bool imputation = true;
    bool ae_loss = true;
    bool contrastive_loss = true;
    bool adversarial_loss = true;
};

struct TrainConfig {
    double alpha = 1.0;
    double beta = 10.0;
    double gamma = 10.0;
    double lambda = 10.0;
    double rho = 1.0;
    double eta = 0.01;
    std::size_t batch_size = 128;
    std::size_t epochs = 20;
    std::uint64_t master_seed = 0;
    TrainSwitches switches;
    bool use_source = true;
    PairMode pair_mode = PairMode::union_all;

    /// Direction the discriminator takes on the adversarial term. descend
    /// (default) trains it to tell the domains apart; ascend reproduces the
    /// published update rule verbatim, which degrades it instead.
    Direction discriminator_direction = Direction::descend;

    void validate(bool require_epochs = true) const;
    LossWeights weights() const;
    GraphSwitches graph_switches() const;
};

enum class Variant { full, target_only, dann, no_imputation, no_ae, no_contrastive };

inline constexpr Variant kAllVariants[] = {Variant::full,          Variant::target_only,
                                           Variant::dann,          Variant::no_imputation,
                                           Variant::no_ae,         Variant::no_contrastive};

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

/// Derives the baseline / ablation configs: target_only drops every transfer
/// mechanism and the source term; dann keeps only adversarial alignment over
/// zero-filled inputs; the no_* variants each disable one mechanism.
TrainConfig build_variant(const TrainConfig& base, Variant v);

struct StepRecord {
    std::size_t step = 0;
    LossReport losses;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double wall_seconds = 0.0;
    double mean_l_cls = 0.0; // over the epoch's applied steps
    std::optional<double> eval_acc;
};

struct TrainHistory {
    std::vector<StepRecord> steps;
    std::vector<EpochRecord> epochs;
    std::size_t skipped_steps = 0; // aborted on non-finite loss
};

struct StepResult {
    LossReport losses;
    bool applied = true; // false: non-finite loss, parameters untouched
};

/// One simultaneous update. Every gradient is taken from a single recorded
/// forward pass before any parameter moves: the encoders and imputer descend
/// the full objective, decoders see only the reconstruction term, the
/// projector everything but reconstruction, the classifier only the
/// classification term, and the discriminator moves on the adversarial term
/// per discriminator_direction (its lambda scaling included).
StepResult update_step(Model& model, const Batch& batch, const TrainConfig& cfg,
                       NoiseSource& noise);

/// Full training loop: epochs of composite batches over the source set, the
/// labeled-target prefix and the unlabeled-target pool. epoch_eval, when
/// given, runs on the frozen model after each epoch and its value is stored
/// in the history.
TrainHistory train(Model& model, const DomainDataset& source, const DomainDataset& target,
                   const TrainConfig& cfg,
                   const std::function<double(const Model&)>& epoch_eval = {});

} // namespace idian
