#include "idian/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "idian/common.hpp"

namespace idian {

namespace {

double clamped_log(double v) { return std::log(std::max(v, Tape::kLogFloor)); }

Tensor onehot(const std::vector<int>& labels, int n_c) {
    Tensor out = Tensor::Zero(static_cast<Eigen::Index>(labels.size()), n_c);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= n_c)
            throw ConfigError("label " + std::to_string(labels[i]) + " out of range for " +
                              std::to_string(n_c) + " classes");
        out(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
    }
    return out;
}

double mean_cross_entropy(const Tensor& probs, const std::vector<int>& labels) {
    if (static_cast<std::size_t>(probs.rows()) != labels.size())
        throw ConfigError("cross entropy: " + std::to_string(probs.rows()) + " rows vs " +
                          std::to_string(labels.size()) + " labels");
    double total = 0.0;
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        if (y < 0 || y >= probs.cols()) throw ConfigError("cross entropy: label out of range");
        total -= clamped_log(probs(i, y));
    }
    return total / static_cast<double>(probs.rows());
}

} // namespace

const char* pair_mode_name(PairMode m) {
    return m == PairMode::union_all ? "union" : "cross_only";
}

PairMode pair_mode_from_name(const std::string& name) {
    if (name == "union") return PairMode::union_all;
    if (name == "cross_only") return PairMode::cross_only;
    throw ConfigError("unknown pair mode '" + name + "' (union, cross_only)");
}

double loss_ae(const Tensor& src_x, const Tensor& src_recon, const Tensor& tgt_xhat,
               const Tensor& tgt_recon) {
    if (src_x.rows() != src_recon.rows() || src_x.cols() != src_recon.cols())
        throw ConfigError("loss_ae: source reconstruction shape mismatch");
    if (tgt_xhat.rows() != tgt_recon.rows() || tgt_xhat.cols() != tgt_recon.cols())
        throw ConfigError("loss_ae: target reconstruction shape mismatch");
    if (tgt_xhat.rows() == 0) throw UsageError("loss_ae: empty target block");
    double total = 0.0;
    if (src_x.rows() > 0)
        total += (src_x - src_recon).array().square().sum() / static_cast<double>(src_x.rows());
    total += (tgt_xhat - tgt_recon).array().square().sum() / static_cast<double>(tgt_xhat.rows());
    return total;
}

double loss_contrastive(const Tensor& f, const std::vector<int>& labels, double rho,
                        bool* degenerate) {
    return loss_contrastive(f, labels, 0, PairMode::union_all, rho, degenerate);
}

double loss_contrastive(const Tensor& f, const std::vector<int>& labels, std::size_t n_src,
                        PairMode mode, double rho, bool* degenerate) {
    if (rho <= 0.0) throw ConfigError("loss_contrastive: margin must be positive");
    if (static_cast<std::size_t>(f.rows()) != labels.size())
        throw ConfigError("loss_contrastive: row/label count mismatch");
    if (n_src > labels.size()) throw ConfigError("loss_contrastive: n_src exceeds row count");
    if (degenerate) *degenerate = false;

    const std::size_t n = labels.size();
    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (mode == PairMode::cross_only && !(i < n_src && j >= n_src)) continue;
            const double d2 = (f.row(static_cast<Eigen::Index>(i)) -
                               f.row(static_cast<Eigen::Index>(j)))
                                  .squaredNorm();
            total += labels[i] == labels[j] ? d2 : std::max(0.0, rho - d2);
            ++pairs;
        }
    }
    if (pairs == 0) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    return total / static_cast<double>(pairs);
}

double loss_adv(const Tensor& d_src, const Tensor& d_tgt) {
    if (d_src.size() == 0 || d_tgt.size() == 0)
        throw UsageError("loss_adv: empty discriminator output");
    double s = 0.0;
    for (Eigen::Index i = 0; i < d_src.size(); ++i) s += clamped_log(d_src.reshaped()(i));
    double t = 0.0;
    for (Eigen::Index i = 0; i < d_tgt.size(); ++i) t += clamped_log(1.0 - d_tgt.reshaped()(i));
    return -s / static_cast<double>(d_src.size()) - t / static_cast<double>(d_tgt.size());
}

double loss_cls(const Tensor& p_tgt, const std::vector<int>& y_tgt, const Tensor& p_src,
                const std::vector<int>& y_src, double alpha) {
    if (p_tgt.rows() == 0) throw UsageError("loss_cls: empty target block");
    double total = mean_cross_entropy(p_tgt, y_tgt);
    if (p_src.rows() > 0) total += alpha * mean_cross_entropy(p_src, y_src);
    return total;
}

double loss_total(double l_cls, double l_ae, double l_cont, double l_adv, double beta,
                  double gamma, double lambda) {
    return l_cls + beta * l_ae + gamma * l_cont - lambda * l_adv;
}

LossReport LossGraph::report(const Tape& tape) const {
    LossReport r;
    if (cls >= 0) r.l_cls = tape.scalar(cls);
    if (ae >= 0) r.l_ae = tape.scalar(ae);
    if (cont >= 0) r.l_cont = tape.scalar(cont);
    if (adv >= 0) r.l_adv = tape.scalar(adv);
    r.l_total = tape.scalar(total);
    r.cont_degenerate = cont_degenerate;
    return r;
}

LossGraph build_loss_graph(Tape& tape, const Model& model, const Batch& batch,
                           const Tensor& eps_tl, const Tensor& eps_tu, const LossWeights& w,
                           const GraphSwitches& sw) {
    const Eigen::Index n = batch.tl_x.rows();
    if (n < 1) throw UsageError("build_loss_graph: empty batch");
    if (batch.tu_x.rows() != n || (sw.use_source && batch.src_x.rows() != n))
        throw ConfigError("build_loss_graph: block sizes differ");
    if (batch.tl_x.cols() != model.d_t || batch.tu_x.cols() != model.d_t)
        throw ConfigError("build_loss_graph: target width differs from model d_t");
    if (sw.use_source && batch.src_x.cols() != model.d_s)
        throw ConfigError("build_loss_graph: source width differs from model d_s");
    if (sw.adversarial_loss && !sw.use_source)
        throw ConfigError("build_loss_graph: adversarial loss needs source rows");
    if (sw.imputation) {
        if (eps_tl.rows() != n || eps_tl.cols() != model.d_t || eps_tu.rows() != n ||
            eps_tu.cols() != model.d_t)
            throw ConfigError("build_loss_graph: noise shape differs from target blocks");
    }
    if (w.alpha < 0.0 || w.beta < 0.0 || w.gamma < 0.0 || w.lambda < 0.0)
        throw ConfigError("build_loss_graph: trade-off weights must be nonnegative");
    if (sw.contrastive_loss && w.rho <= 0.0)
        throw ConfigError("build_loss_graph: margin must be positive");
    if (batch.tl_y.size() != static_cast<std::size_t>(n) ||
        (sw.use_source && batch.src_y.size() != static_cast<std::size_t>(n)))
        throw ConfigError("build_loss_graph: label count differs from block size");

    // Stacked target block: labeled rows [0, n), unlabeled rows [n, 2n).
    Tensor x_t(2 * n, model.d_t);
    x_t << batch.tl_x, batch.tu_x;
    Tensor m_t(2 * n, model.d_t);
    m_t << batch.tl_m, batch.tu_m;
    const int x_t_node = tape.constant(x_t);

    int xhat = x_t_node;
    if (sw.imputation) {
        Tensor eps(2 * n, model.d_t);
        eps << eps_tl, eps_tu;
        const Tensor mbar = Tensor::Ones(2 * n, model.d_t) - m_t;
        const int mbar_node = tape.constant(mbar);
        // Placeholders are 0, so x stands for x*m bit for bit.
        const int fill_in = tape.add(x_t_node, tape.hadamard(tape.constant(eps), mbar_node));
        const int ghat = model.imputer.forward_tape(tape, static_cast<int>(NetId::imputer), fill_in);
        xhat = tape.add(x_t_node, tape.hadamard(ghat, mbar_node));
    }

    const int h_t = model.tgt_encoder.forward_tape(tape, static_cast<int>(NetId::tgt_encoder), xhat);
    const int f_t = model.projector.forward_tape(tape, static_cast<int>(NetId::projector), h_t);
    const int f_tl = tape.slice_rows(f_t, 0, n);

    int src_node = -1;
    int h_s = -1;
    int f_s = -1;
    if (sw.use_source) {
        src_node = tape.constant(batch.src_x);
        h_s = model.src_encoder.forward_tape(tape, static_cast<int>(NetId::src_encoder), src_node);
        f_s = model.projector.forward_tape(tape, static_cast<int>(NetId::projector), h_s);
    }

    LossGraph g;

    {
        const int p_tl = model.classifier.forward_tape(tape, static_cast<int>(NetId::classifier), f_tl);
        const int picked_tl =
            tape.hadamard(tape.constant(onehot(batch.tl_y, model.n_c)), tape.log_clamped(p_tl));
        int cls = tape.affine(tape.sum(picked_tl), -1.0 / static_cast<double>(n), 0.0);
        if (sw.use_source) {
            const int p_s = model.classifier.forward_tape(tape, static_cast<int>(NetId::classifier), f_s);
            const int picked_s =
                tape.hadamard(tape.constant(onehot(batch.src_y, model.n_c)), tape.log_clamped(p_s));
            const int ce_s = tape.affine(tape.sum(picked_s), -1.0 / static_cast<double>(n), 0.0);
            cls = tape.add(cls, tape.affine(ce_s, w.alpha, 0.0));
        }
        g.cls = cls;
    }

    if (sw.ae_loss) {
        const int recon_t =
            model.tgt_decoder.forward_tape(tape, static_cast<int>(NetId::tgt_decoder), h_t);
        const int res_t = tape.sub(xhat, recon_t);
        const int ae_t =
            tape.affine(tape.sum(tape.square(res_t)), 1.0 / static_cast<double>(2 * n), 0.0);
        g.ae = ae_t;
        if (sw.use_source) {
            const int recon_s =
                model.src_decoder.forward_tape(tape, static_cast<int>(NetId::src_decoder), h_s);
            const int res_s = tape.sub(src_node, recon_s);
            const int ae_s =
                tape.affine(tape.sum(tape.square(res_s)), 1.0 / static_cast<double>(n), 0.0);
            g.ae = tape.add(ae_s, ae_t);
        }
    }

    if (sw.contrastive_loss) {
        int pool;
        std::vector<int> pool_labels;
        std::size_t pool_src = 0;
        if (sw.use_source) {
            pool = tape.vstack(f_s, f_tl);
            pool_labels = batch.src_y;
            pool_labels.insert(pool_labels.end(), batch.tl_y.begin(), batch.tl_y.end());
            pool_src = static_cast<std::size_t>(n);
        } else {
            pool = f_tl;
            pool_labels = batch.tl_y;
        }
        const std::size_t pool_n = pool_labels.size();

        Tensor same = Tensor::Zero(static_cast<Eigen::Index>(pool_n), static_cast<Eigen::Index>(pool_n));
        Tensor diff = same;
        std::size_t pairs = 0;
        for (std::size_t i = 0; i + 1 < pool_n; ++i) {
            for (std::size_t j = i + 1; j < pool_n; ++j) {
                if (sw.pair_mode == PairMode::cross_only && !(i < pool_src && j >= pool_src))
                    continue;
                (pool_labels[i] == pool_labels[j] ? same : diff)(static_cast<Eigen::Index>(i),
                                                                static_cast<Eigen::Index>(j)) = 1.0;
                ++pairs;
            }
        }
        if (pairs == 0) {
            g.cont_degenerate = true;
        } else {
            // Squared pairwise distances via the Gram matrix; the constant
            // pair masks select the upper triangle, so the diagonal and the
            // mirrored half never contribute.
            const int r = tape.row_sum(tape.square(pool));
            int d2 = tape.affine(tape.matmul_abt(pool, pool), -2.0, 0.0);
            d2 = tape.add_colvec(d2, r);
            d2 = tape.add_rowvec(d2, tape.transpose(r));
            const int pull = tape.sum(tape.hadamard(tape.constant(same), d2));
            const int hinge = tape.relu(tape.affine(d2, -1.0, w.rho));
            const int push = tape.sum(tape.hadamard(tape.constant(diff), hinge));
            g.cont = tape.affine(tape.add(pull, push), 1.0 / static_cast<double>(pairs), 0.0);
        }
    }

    if (sw.adversarial_loss) {
        const int d_s_out =
            model.discriminator.forward_tape(tape, static_cast<int>(NetId::discriminator), f_s);
        const int d_t_out =
            model.discriminator.forward_tape(tape, static_cast<int>(NetId::discriminator), f_t);
        const int term_s = tape.affine(tape.mean(tape.log_clamped(d_s_out)), -1.0, 0.0);
        const int term_t =
            tape.affine(tape.mean(tape.log_clamped(tape.affine(d_t_out, -1.0, 1.0))), -1.0, 0.0);
        g.adv = tape.add(term_s, term_t);
    }

    int total = g.cls;
    if (g.ae >= 0) total = tape.add(total, tape.affine(g.ae, w.beta, 0.0));
    if (g.cont >= 0) total = tape.add(total, tape.affine(g.cont, w.gamma, 0.0));
    if (g.adv >= 0) total = tape.add(total, tape.affine(g.adv, -w.lambda, 0.0));
    g.total = total;
    return g;
}

} // namespace idian
