#include "idian/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "idian/common.hpp"
#include "idian/rng.hpp"

namespace idian {

namespace {

constexpr std::size_t kPairwiseLimit = 10000;

void check_binary(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
    if (scores.size() != labels.size()) throw ConfigError("auc: score/label count mismatch");
    std::size_t pos = 0;
    for (std::uint8_t l : labels) {
        if (l > 1) throw ConfigError("auc: labels must be 0 or 1");
        pos += l;
    }
    if (pos == 0 || pos == labels.size())
        throw UsageError("auc: undefined when only one class is present");
}

// Ratio of a pair count to the total; both fit a double exactly well past
// any dataset this handles.
double safe_div(double num, double den) { return num / den; }

} // namespace

double auc_pairwise(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
    check_binary(scores, labels);
    double wins = 0.0;
    std::size_t n_pos = 0, n_neg = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) continue;
        ++n_pos;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j]) continue;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    n_neg = labels.size() - n_pos;
    return safe_div(wins, static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double auc_ranksum(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
    check_binary(scores, labels);
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Average ranks over tie groups, 1-based.
    std::vector<double> rank(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
        i = j + 1;
    }

    double rank_pos = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (labels[k]) {
            rank_pos += rank[k];
            ++n_pos;
        }
    }
    const std::size_t n_neg = n - n_pos;
    const double u = rank_pos - static_cast<double>(n_pos) * static_cast<double>(n_pos + 1) / 2.0;
    return safe_div(u, static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
    return scores.size() <= kPairwiseLimit ? auc_pairwise(scores, labels)
                                           : auc_ranksum(scores, labels);
}

EvalReport score_predictions(const std::vector<int>& truth, const std::vector<int>& pred,
                             int n_c) {
    if (truth.size() != pred.size())
        throw ConfigError("score: truth/prediction count mismatch");
    if (n_c < 2) throw ConfigError("score: need at least two classes");
    if (truth.empty()) throw UsageError("score: no predictions to score");
    for (std::size_t i = 0; i < truth.size(); ++i)
        if (truth[i] < 0 || truth[i] >= n_c || pred[i] < 0 || pred[i] >= n_c)
            throw ConfigError("score: class index out of range at row " + std::to_string(i));

    EvalReport rep;
    rep.n_eval = truth.size();
    rep.confusion.assign(static_cast<std::size_t>(n_c),
                         std::vector<std::size_t>(static_cast<std::size_t>(n_c), 0));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        rep.confusion[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(pred[i])] += 1;
        if (truth[i] == pred[i]) ++correct;
    }
    rep.acc = static_cast<double>(correct) / static_cast<double>(rep.n_eval);

    auto prf = [&](std::size_t c, double& p, double& r, double& f) {
        std::size_t tp = rep.confusion[c][c], pred_c = 0, true_c = 0;
        for (std::size_t k = 0; k < rep.confusion.size(); ++k) {
            pred_c += rep.confusion[k][c];
            true_c += rep.confusion[c][k];
        }
        p = pred_c > 0 ? static_cast<double>(tp) / static_cast<double>(pred_c) : 0.0;
        r = true_c > 0 ? static_cast<double>(tp) / static_cast<double>(true_c) : 0.0;
        f = p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
        if (pred_c == 0 || true_c == 0 || p + r == 0.0) rep.degenerate = true;
    };

    if (n_c == 2) {
        prf(1, rep.precision, rep.recall, rep.f1);
    } else {
        double psum = 0.0, rsum = 0.0, fsum = 0.0;
        for (int c = 0; c < n_c; ++c) {
            double p, r, f;
            prf(static_cast<std::size_t>(c), p, r, f);
            psum += p;
            rsum += r;
            fsum += f;
        }
        rep.precision = psum / n_c;
        rep.recall = rsum / n_c;
        rep.f1 = fsum / n_c;
    }
    return rep;
}

EvalReport evaluate(const Model& model, const DomainDataset& test, std::uint64_t eval_seed,
                    bool use_imputer) {
    if (test.dim != model.d_t)
        throw ConfigError("evaluate: test width " + std::to_string(test.dim) +
                          " differs from model d_t " + std::to_string(model.d_t));
    if (test.n_classes != model.n_c)
        throw ConfigError("evaluate: class count differs from model n_c");

    std::vector<std::size_t> idx;
    idx.reserve(test.size());
    for (std::size_t i = 0; i < test.size(); ++i)
        if (test.instances[i].label) idx.push_back(i);
    if (idx.empty()) throw UsageError("evaluate: no labeled test instances");

    const Tensor x = test.features_of(idx);
    const Tensor m = test.masks_of(idx);
    const std::vector<int> y = test.labels_of(idx);

    Tensor xhat;
    if (use_imputer) {
        // Noise keyed by original dataset position, so excluding rows or
        // re-batching never changes another instance's fill-in.
        Tensor eps(x.rows(), x.cols());
        for (Eigen::Index r = 0; r < x.rows(); ++r)
            eps.row(r) = indexed_noise(eval_seed, idx[static_cast<std::size_t>(r)], 1, x.cols());
        xhat = impute(model, x, m, eps);
    } else {
        xhat = x; // masked entries keep the 0 placeholder
    }

    const Tensor probs = target_class_probs(model, xhat);
    std::vector<int> pred(idx.size());
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < probs.cols(); ++c)
            if (probs(r, c) > probs(r, best)) best = c;
        pred[static_cast<std::size_t>(r)] = static_cast<int>(best);
    }

    EvalReport rep = score_predictions(y, pred, model.n_c);
    rep.n_excluded = test.size() - idx.size();

    if (model.n_c == 2) {
        bool has_pos = false, has_neg = false;
        for (int label : y) (label == 1 ? has_pos : has_neg) = true;
        if (has_pos && has_neg) {
            std::vector<double> scores(idx.size());
            std::vector<std::uint8_t> bin(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) {
                scores[i] = probs(static_cast<Eigen::Index>(i), 1);
                bin[i] = y[i] == 1 ? 1 : 0;
            }
            rep.auc = auc(scores, bin);
        } else {
            rep.degenerate = true;
        }
    }
    return rep;
}

} // namespace idian
