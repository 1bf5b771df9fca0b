#pragma once

#include <vector>

#include "idian/data.hpp"
#include "idian/networks.hpp"
#include "idian/tape.hpp"
#include "idian/tensor.hpp"

namespace idian {

struct LossReport {
    double l_cls = 0.0;
    double l_ae = 0.0;
    double l_cont = 0.0;
    double l_adv = 0.0;
    double l_total = 0.0;
    bool cont_degenerate = false; // pair pool had fewer than 2 usable rows
};

/// Which contrastive pairs count: every unordered pair in the pooled rows,
/// or only pairs with one row from each domain.
enum class PairMode { union_all, cross_only };

const char* pair_mode_name(PairMode m);
PairMode pair_mode_from_name(const std::string& name);

/// Reference implementations on plain matrices. These never touch a tape and
/// back the differentiated versions as an independent value oracle.

/// Mean squared reconstruction error per domain, summed: rows are instances,
/// the squared residual norm is averaged over rows within each domain. An
/// empty source pair contributes 0.
double loss_ae(const Tensor& src_x, const Tensor& src_recon, const Tensor& tgt_xhat,
               const Tensor& tgt_recon);

/// Mean over all unordered pairs of rows: same label pulls (squared
/// distance), different label pushes (hinge at margin rho). Fewer than two
/// rows: returns 0 and sets *degenerate.
double loss_contrastive(const Tensor& f, const std::vector<int>& labels, double rho,
                        bool* degenerate = nullptr);

/// Same loss restricted by pair mode; the first n_src rows are the source
/// block. An empty pair set returns 0 and sets *degenerate.
double loss_contrastive(const Tensor& f, const std::vector<int>& labels, std::size_t n_src,
                        PairMode mode, double rho, bool* degenerate = nullptr);

/// -mean(log d_src) - mean(log(1 - d_tgt)), logs clamped at Tape::kLogFloor.
double loss_adv(const Tensor& d_src, const Tensor& d_tgt);

/// Mean target cross-entropy plus alpha times mean source cross-entropy.
/// Rows are per-instance class distributions. An empty source block
/// contributes 0.
double loss_cls(const Tensor& p_tgt, const std::vector<int>& y_tgt, const Tensor& p_src,
                const std::vector<int>& y_src, double alpha);

double loss_total(double l_cls, double l_ae, double l_cont, double l_adv, double beta,
                  double gamma, double lambda);

struct LossWeights {
    double alpha = 1.0;
    double beta = 10.0;
    double gamma = 10.0;
    double lambda = 10.0;
    double rho = 1.0;
};

struct GraphSwitches {
    bool imputation = true;       // off: masked entries stay at the 0 placeholder
    bool ae_loss = true;
    bool contrastive_loss = true;
    bool adversarial_loss = true;
    bool use_source = true;       // off: source rows never enter the graph
    PairMode pair_mode = PairMode::union_all;
};

/// Node ids of the loss scalars inside one batch graph; -1 marks a term that
/// was switched off (its reported value is 0).
struct LossGraph {
    int cls = -1;
    int ae = -1;
    int cont = -1;
    int adv = -1;
    int total = -1;
    bool cont_degenerate = false;

    LossReport report(const Tape& tape) const;
};

/// Records the full batch computation on the tape: imputation, both encoder
/// paths, decoders, projector, discriminator and classifier, and the four
/// loss terms combined into total = cls + beta*ae + gamma*cont - lambda*adv.
/// eps_tl / eps_tu supply imputation noise for the two target blocks.
LossGraph build_loss_graph(Tape& tape, const Model& model, const Batch& batch,
                           const Tensor& eps_tl, const Tensor& eps_tu, const LossWeights& w,
                           const GraphSwitches& sw);

} // namespace idian
