#include "idian/trainer.hpp"

#include <chrono>
#include <cmath>

#include "idian/common.hpp"
#include "idian/tape.hpp"

namespace idian {

void TrainConfig::validate(bool require_epochs) const {
    if (eta <= 0.0) throw ConfigError("train config: learning rate must be positive");
    if (batch_size < 1) throw ConfigError("train config: batch size must be at least 1");
    if (require_epochs && epochs < 1) throw ConfigError("train config: need at least one epoch");
    if (alpha < 0.0 || beta < 0.0 || gamma < 0.0 || lambda < 0.0)
        throw ConfigError("train config: trade-off weights must be nonnegative");
    if (rho <= 0.0) throw ConfigError("train config: margin must be positive");
    if (switches.adversarial_loss && !use_source)
        throw ConfigError("train config: adversarial loss needs source data");
}

LossWeights TrainConfig::weights() const {
    LossWeights w;
    w.alpha = alpha;
    w.beta = beta;
    w.gamma = gamma;
    w.lambda = lambda;
    w.rho = rho;
    return w;
}

GraphSwitches TrainConfig::graph_switches() const {
    GraphSwitches sw;
    sw.imputation = switches.imputation;
    sw.ae_loss = switches.ae_loss;
    sw.contrastive_loss = switches.contrastive_loss;
    sw.adversarial_loss = switches.adversarial_loss;
    sw.use_source = use_source;
    sw.pair_mode = pair_mode;
    return sw;
}

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::full: return "full";
        case Variant::target_only: return "target_only";
        case Variant::dann: return "dann";
        case Variant::no_imputation: return "no_imputation";
        case Variant::no_ae: return "no_ae";
        case Variant::no_contrastive: return "no_contrastive";
    }
    throw ConfigError("unknown variant");
}

Variant variant_from_name(const std::string& name) {
    for (Variant v : kAllVariants)
        if (name == variant_name(v)) return v;
    throw UsageError("unknown variant '" + name +
                     "' (full, target_only, dann, no_imputation, no_ae, no_contrastive)");
}

TrainConfig build_variant(const TrainConfig& base, Variant v) {
    base.validate(false);
    TrainConfig cfg = base;
    switch (v) {
        case Variant::full:
            break;
        case Variant::target_only:
            cfg.use_source = false;
            cfg.alpha = 0.0;
            cfg.beta = 0.0;
            cfg.gamma = 0.0;
            cfg.lambda = 0.0;
            cfg.switches = {false, false, false, false};
            break;
        case Variant::dann:
            cfg.beta = 0.0;
            cfg.gamma = 0.0;
            cfg.switches.imputation = false;
            cfg.switches.ae_loss = false;
            cfg.switches.contrastive_loss = false;
            break;
        case Variant::no_imputation:
            cfg.switches.imputation = false;
            break;
        case Variant::no_ae:
            cfg.beta = 0.0;
            cfg.switches.ae_loss = false;
            break;
        case Variant::no_contrastive:
            cfg.gamma = 0.0;
            cfg.switches.contrastive_loss = false;
            break;
    }
    return cfg;
}

namespace {

bool report_finite(const LossReport& r) {
    return std::isfinite(r.l_cls) && std::isfinite(r.l_ae) && std::isfinite(r.l_cont) &&
           std::isfinite(r.l_adv) && std::isfinite(r.l_total);
}

} // namespace

StepResult update_step(Model& model, const Batch& batch, const TrainConfig& cfg,
                       NoiseSource& noise) {
    cfg.validate(false);
    const Eigen::Index n = batch.tl_x.rows();

    Tensor eps_tl, eps_tu;
    if (cfg.switches.imputation) {
        eps_tl = noise.normal_matrix(n, model.d_t);
        eps_tu = noise.normal_matrix(n, model.d_t);
    }

    Tape tape;
    const LossGraph graph =
        build_loss_graph(tape, model, batch, eps_tl, eps_tu, cfg.weights(), cfg.graph_switches());
    const LossReport report = graph.report(tape);
    if (!report_finite(report)) return {report, false};

    tape.backward(graph.total);
    const GradientSet grads = tape.gradients();

    // All gradients are materialized above, so the per-network applications
    // commute and the step is a true simultaneous update.
    const NetId descenders[] = {NetId::imputer,     NetId::src_encoder, NetId::tgt_encoder,
                                NetId::src_decoder, NetId::tgt_decoder, NetId::projector,
                                NetId::classifier};
    for (NetId id : descenders)
        sgd_step(model.net(id), static_cast<int>(id), grads, cfg.eta, Direction::descend);

    // The adversarial term enters the objective negated, so moving the
    // discriminator down its own loss means moving up the recorded total.
    const Direction on_total = cfg.discriminator_direction == Direction::descend
                                   ? Direction::ascend
                                   : Direction::descend;
    sgd_step(model.discriminator, static_cast<int>(NetId::discriminator), grads, cfg.eta, on_total);

    return {report, true};
}

TrainHistory train(Model& model, const DomainDataset& source, const DomainDataset& target,
                   const TrainConfig& cfg, const std::function<double(const Model&)>& epoch_eval) {
    cfg.validate(false);
    if (source.dim != model.d_s)
        throw ConfigError("train: source width " + std::to_string(source.dim) +
                          " differs from model d_s " + std::to_string(model.d_s));
    if (target.dim != model.d_t)
        throw ConfigError("train: target width " + std::to_string(target.dim) +
                          " differs from model d_t " + std::to_string(model.d_t));
    if (source.n_classes != model.n_c || target.n_classes != model.n_c)
        throw ConfigError("train: class count differs from model n_c");
    if (target.labeled_count < 1) throw ConfigError("train: no labeled target instances");

    NoiseSource noise(derive_seed(cfg.master_seed, "train_noise"));
    TrainHistory hist;
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const std::uint64_t epoch_seed = derive_seed(cfg.master_seed, "epoch", epoch);
        const std::vector<Batch> batches =
            compose_batches(source, target, cfg.batch_size, epoch_seed);

        double cls_sum = 0.0;
        std::size_t applied = 0;
        for (const Batch& batch : batches) {
            const StepResult res = update_step(model, batch, cfg, noise);
            if (!res.applied) {
                ++hist.skipped_steps;
                continue;
            }
            hist.steps.push_back({step++, res.losses});
            cls_sum += res.losses.l_cls;
            ++applied;
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.mean_l_cls = applied > 0 ? cls_sum / static_cast<double>(applied) : 0.0;
        if (epoch_eval) rec.eval_acc = epoch_eval(model);
        rec.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        hist.epochs.push_back(rec);
    }
    return hist;
}

} // namespace idian
