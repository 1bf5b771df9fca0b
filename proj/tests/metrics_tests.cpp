#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "idian/common.hpp"
#include "idian/gradsuite.hpp"
#include "idian/metrics.hpp"
#include "idian/rng.hpp"

using namespace idian;

namespace {

/// Direct per-class precision/recall/F1 from first principles, for checking
/// the confusion-matrix path against an independent computation.
struct ClassScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

ClassScores brute_force_class(const std::vector<int>& truth, const std::vector<int>& pred,
                              int cls) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (pred[i] == cls && truth[i] == cls) ++tp;
        if (pred[i] == cls && truth[i] != cls) ++fp;
        if (pred[i] != cls && truth[i] == cls) ++fn;
    }
    ClassScores s;
    if (tp + fp > 0) s.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (tp + fn > 0) s.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    if (s.precision + s.recall > 0.0)
        s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
    return s;
}

} // namespace

TEST_CASE("scores match a hand-filled binary confusion matrix") {
    // TP=3 FP=1 FN=2 TN=4 with class 1 positive.
    const std::vector<int> truth = {1, 1, 1, 1, 1, 0, 0, 0, 0, 0};
    const std::vector<int> pred = {1, 1, 1, 0, 0, 1, 0, 0, 0, 0};
    const EvalReport rep = score_predictions(truth, pred, 2);

    CHECK(rep.acc == doctest::Approx(0.7));
    CHECK(rep.precision == doctest::Approx(0.75));
    CHECK(rep.recall == doctest::Approx(0.6));
    CHECK(rep.f1 == doctest::Approx(2.0 / 3.0));
    CHECK(!rep.degenerate);
    CHECK(!rep.auc.has_value());
    CHECK(rep.n_eval == 10);
    REQUIRE(rep.confusion.size() == 2);
    CHECK(rep.confusion[1][1] == 3);
    CHECK(rep.confusion[0][1] == 1);
    CHECK(rep.confusion[1][0] == 2);
    CHECK(rep.confusion[0][0] == 4);
}

TEST_CASE("a constant predictor is flagged degenerate") {
    const std::vector<int> truth = {0, 1, 0, 1};
    const std::vector<int> pred = {0, 0, 0, 0};
    const EvalReport rep = score_predictions(truth, pred, 2);
    CHECK(rep.acc == doctest::Approx(0.5));
    CHECK(rep.degenerate); // precision of the positive class has no support
    CHECK(rep.precision == 0.0);
    CHECK(rep.recall == 0.0);
    CHECK(rep.f1 == 0.0);
}

TEST_CASE("macro averages agree with per-class brute force") {
    Rng rng(404);
    for (int trial = 0; trial < 25; ++trial) {
        const int n_c = 3 + static_cast<int>(rng.below(3));
        std::vector<int> truth, pred;
        for (int i = 0; i < 60; ++i) {
            truth.push_back(static_cast<int>(rng.below(static_cast<std::size_t>(n_c))));
            pred.push_back(static_cast<int>(rng.below(static_cast<std::size_t>(n_c))));
        }
        const EvalReport rep = score_predictions(truth, pred, n_c);

        double p_sum = 0.0, r_sum = 0.0, f_sum = 0.0;
        std::size_t correct = 0;
        for (int c = 0; c < n_c; ++c) {
            const ClassScores s = brute_force_class(truth, pred, c);
            p_sum += s.precision;
            r_sum += s.recall;
            f_sum += s.f1;
        }
        for (std::size_t i = 0; i < truth.size(); ++i)
            if (truth[i] == pred[i]) ++correct;

        CHECK(rep.acc == doctest::Approx(static_cast<double>(correct) / 60.0));
        if (!rep.degenerate) {
            CHECK(rep.precision == doctest::Approx(p_sum / n_c).epsilon(1e-12));
            CHECK(rep.recall == doctest::Approx(r_sum / n_c).epsilon(1e-12));
            CHECK(rep.f1 == doctest::Approx(f_sum / n_c).epsilon(1e-12));
        }
    }
}

TEST_CASE("binary brute force agrees on random predictions") {
    Rng rng(405);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<int> truth, pred;
        for (int i = 0; i < 40; ++i) {
            truth.push_back(static_cast<int>(rng.below(2)));
            pred.push_back(static_cast<int>(rng.below(2)));
        }
        const EvalReport rep = score_predictions(truth, pred, 2);
        const ClassScores s = brute_force_class(truth, pred, 1);
        if (!rep.degenerate) {
            CHECK(rep.precision == doctest::Approx(s.precision).epsilon(1e-12));
            CHECK(rep.recall == doctest::Approx(s.recall).epsilon(1e-12));
            CHECK(rep.f1 == doctest::Approx(s.f1).epsilon(1e-12));
        }
    }
}

TEST_CASE("score_predictions rejects malformed input") {
    CHECK_THROWS_AS(score_predictions({0, 1}, {0}, 2), ConfigError);
    CHECK_THROWS_AS(score_predictions({0, 1}, {0, 1}, 1), ConfigError);
    CHECK_THROWS_AS(score_predictions({0, 2}, {0, 1}, 2), ConfigError);
    CHECK_THROWS_AS(score_predictions({0, 1}, {0, -1}, 2), ConfigError);
    CHECK_THROWS_AS(score_predictions({}, {}, 2), UsageError);
}

TEST_CASE("perfectly separated scores give AUC 1") {
    CHECK(auc({0.9, 0.8, 0.3, 0.1}, {1, 1, 0, 0}) == doctest::Approx(1.0));
    CHECK(auc({0.9, 0.8, 0.3, 0.1}, {0, 0, 1, 1}) == doctest::Approx(0.0));
}

TEST_CASE("half-right ranking gives AUC one half") {
    CHECK(auc({0.9, 0.4, 0.6, 0.2}, {1, 0, 0, 1}) == doctest::Approx(0.5));
}

TEST_CASE("all-tied scores give AUC one half") {
    CHECK(auc({0.5, 0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0, 0}) == doctest::Approx(0.5));
}

TEST_CASE("tied pairs count one half") {
    // Pairs: (0.8,0.2) correct, (0.8,0.8) tied, (0.5,0.2) correct,
    // (0.5,0.8) wrong -> (2 + 0.5) / 4.
    CHECK(auc({0.8, 0.5, 0.2, 0.8}, {1, 1, 0, 0}) == doctest::Approx(0.625));
}

TEST_CASE("pairwise and rank-sum routes agree exactly without ties") {
    Rng rng(406);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 5 + rng.below(40);
        std::vector<double> scores;
        std::vector<std::uint8_t> labels;
        bool seen[2] = {false, false};
        for (std::size_t i = 0; i < n; ++i) {
            scores.push_back(rng.uniform()); // ties have probability zero
            const std::uint8_t y = static_cast<std::uint8_t>(rng.below(2));
            labels.push_back(y);
            seen[y] = true;
        }
        if (!seen[0] || !seen[1]) continue;
        CHECK(auc_pairwise(scores, labels) == auc_ranksum(scores, labels));
    }
}

TEST_CASE("AUC is invariant to monotone score transforms") {
    const std::vector<double> scores = {0.1, 0.7, 0.4, 0.95, 0.3, 0.62};
    const std::vector<std::uint8_t> labels = {0, 1, 0, 1, 1, 0};
    const double base = auc(scores, labels);
    std::vector<double> warped;
    for (double s : scores) warped.push_back(std::exp(3.0 * s) - 2.0);
    CHECK(auc(warped, labels) == doctest::Approx(base));
}

TEST_CASE("flipping the labels mirrors the AUC") {
    const std::vector<double> scores = {0.15, 0.62, 0.48, 0.91, 0.05, 0.77};
    const std::vector<std::uint8_t> labels = {0, 1, 0, 1, 0, 1};
    std::vector<std::uint8_t> flipped;
    for (std::uint8_t y : labels) flipped.push_back(static_cast<std::uint8_t>(1 - y));
    CHECK(auc(scores, labels) + auc(scores, flipped) == doctest::Approx(1.0));
}

TEST_CASE("AUC needs both classes and matching lengths") {
    CHECK_THROWS_AS(auc({0.2, 0.4}, {1, 1}), UsageError);
    CHECK_THROWS_AS(auc({0.2, 0.4}, {0, 0}), UsageError);
    CHECK_THROWS_AS(auc({0.2}, {0, 1}), ConfigError);
    CHECK_THROWS_AS(auc({0.2, 0.4}, {0, 2}), ConfigError);
}

namespace {

/// Test set whose labels the tiny model can be scored against. Rows are
/// fully observed unless a rate is given.
DomainDataset eval_set(const Model& model, std::size_t n, std::size_t labeled, double missing,
                       std::uint64_t seed) {
    Rng rng(seed);
    DomainDataset ds;
    ds.domain = Domain::target;
    ds.dim = model.d_t;
    ds.n_classes = model.n_c;
    ds.labeled_count = labeled;
    for (std::size_t i = 0; i < n; ++i) {
        Instance inst;
        for (int d = 0; d < model.d_t; ++d) {
            const bool observed = rng.uniform() >= missing;
            inst.mask.push_back(observed ? 1 : 0);
            inst.features.push_back(observed ? rng.uniform() : 0.0);
        }
        if (i < labeled) inst.label = static_cast<int>(i % model.n_c);
        ds.instances.push_back(std::move(inst));
    }
    ds.validate();
    return ds;
}

} // namespace

TEST_CASE("evaluation is deterministic per seed and skips unlabeled rows") {
    const Model model = make_tiny_model(4, 5, 2, 501);
    const DomainDataset test = eval_set(model, 12, 9, 0.4, 502);

    const EvalReport a = evaluate(model, test, 77);
    const EvalReport b = evaluate(model, test, 77);
    CHECK(a.acc == b.acc);
    CHECK(a.precision == b.precision);
    CHECK(a.confusion == b.confusion);
    CHECK(a.n_eval == 9);
    CHECK(a.n_excluded == 3);
    REQUIRE(a.auc.has_value());
    REQUIRE(b.auc.has_value());
    CHECK(*a.auc == *b.auc);

    std::size_t total = 0;
    for (const auto& row : a.confusion)
        for (std::size_t v : row) total += v;
    CHECK(total == a.n_eval);
}

TEST_CASE("the imputer only matters where entries are missing") {
    const Model model = make_tiny_model(4, 5, 3, 511);

    SUBCASE("fully observed data ignores the imputer flag") {
        const DomainDataset test = eval_set(model, 10, 10, 0.0, 512);
        const EvalReport with = evaluate(model, test, 9, true);
        const EvalReport without = evaluate(model, test, 9, false);
        CHECK(with.acc == without.acc);
        CHECK(with.confusion == without.confusion);
    }
    SUBCASE("zero-fill changes predictions when entries are missing") {
        // Heavy missingness makes the two inference paths diverge for at
        // least one row in a set this size.
        const DomainDataset test = eval_set(model, 40, 40, 0.6, 513);
        const EvalReport with = evaluate(model, test, 9, true);
        const EvalReport without = evaluate(model, test, 9, false);
        CHECK(with.n_eval == without.n_eval);
        CHECK(with.confusion != without.confusion);
    }
}

TEST_CASE("excluded rows never change another instance's fill-in") {
    const Model model = make_tiny_model(4, 5, 2, 521);
    const DomainDataset full = eval_set(model, 14, 14, 0.5, 522);

    // Same instances with the trailing labels stripped, and the bare prefix
    // as its own dataset: the scored rows keep their noise keys either way.
    DomainDataset stripped = full;
    for (std::size_t i = 10; i < stripped.instances.size(); ++i)
        stripped.instances[i].label.reset();
    stripped.labeled_count = 10;
    stripped.validate();

    DomainDataset prefix = full;
    prefix.instances.resize(10);
    prefix.labeled_count = 10;
    prefix.validate();

    const EvalReport a = evaluate(model, stripped, 31);
    const EvalReport b = evaluate(model, prefix, 31);
    CHECK(a.confusion == b.confusion);
    CHECK(a.acc == b.acc);
    CHECK(a.n_eval == 10);
    CHECK(a.n_excluded == 4);
    CHECK(b.n_excluded == 0);
}

TEST_CASE("evaluation rejects mismatched input") {
    const Model model = make_tiny_model(4, 5, 2, 531);
    const DomainDataset wrong_dim = eval_set(make_tiny_model(4, 6, 2, 531), 6, 6, 0.0, 532);
    CHECK_THROWS_AS(evaluate(model, wrong_dim, 1), ConfigError);

    const DomainDataset wrong_classes = eval_set(make_tiny_model(4, 5, 3, 531), 6, 6, 0.0, 533);
    CHECK_THROWS_AS(evaluate(model, wrong_classes, 1), ConfigError);

    DomainDataset unlabeled = eval_set(model, 6, 6, 0.0, 534);
    for (Instance& inst : unlabeled.instances) inst.label.reset();
    unlabeled.labeled_count = 0;
    CHECK_THROWS_AS(evaluate(model, unlabeled, 1), UsageError);
}
