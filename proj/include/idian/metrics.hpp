#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "idian/data.hpp"
#include "idian/networks.hpp"

namespace idian {

struct EvalReport {
    double acc = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::optional<double> auc; // binary tasks with both classes present only

    /// confusion[truth is row][prediction is column]; entries sum to n_eval.
    std::vector<std::vector<std::size_t>> confusion;
    std::size_t n_eval = 0;
    std::size_t n_excluded = 0; // unlabeled test rows, skipped

    /// A zero denominator (constant predictor, absent class) reports the
    /// affected metric as 0 and raises the flag instead of failing.
    bool degenerate = false;
};

/// Mann-Whitney statistic: the fraction of (positive, negative) pairs ranked
/// correctly, ties counting one half. Throws UsageError unless both classes
/// are present. Dispatches to pair enumeration at small n and the rank-sum
/// form beyond; the two agree exactly on ties-free scores.
double auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels);

double auc_pairwise(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels);
double auc_ranksum(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels);

/// Confusion counts, accuracy and P/R/F1 for already-made predictions.
/// Binary tasks score class 1 as positive, larger tasks macro-average; AUC
/// is left unset (it needs scores, not classes).
EvalReport score_predictions(const std::vector<int>& truth, const std::vector<int>& pred,
                             int n_c);

/// Runs the target-side model over the test set and scores argmax
/// predictions. Missing entries are filled by the imputer under a noise
/// stream keyed per instance index (batch order never matters), or stay 0
/// when use_imputer is off to match models trained without imputation.
/// Binary tasks score class 1 as positive; multi-class tasks report
/// macro-averaged precision/recall/F1 and no AUC.
EvalReport evaluate(const Model& model, const DomainDataset& test, std::uint64_t eval_seed,
                    bool use_imputer = true);

} // namespace idian
