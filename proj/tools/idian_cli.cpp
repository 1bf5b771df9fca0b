// Command-line front end: dataset preparation, single runs, full experiment
// grids, checkpoint evaluation and the gradient self-check. Exit codes: 0
// success, 2 config error, 3 data error, 4 numeric failure.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "idian/common.hpp"
#include "idian/csv.hpp"
#include "idian/experiment.hpp"
#include "idian/gradsuite.hpp"
#include "idian/metrics.hpp"
#include "idian/networks.hpp"

namespace fs = std::filesystem;
using namespace idian;

namespace {

// Gradients worse than this against central differences mean the recorded
// graph is wrong, not merely imprecise.
constexpr double kGradTolerance = 1e-4;

struct Overrides {
    std::string config_path;
    long long seed = -1;
    double missing_rate = -1.0;
    std::string out;
    std::string variant = "full";
};

ExperimentConfig load_config(const Overrides& ov) {
    if (ov.config_path.empty()) throw ConfigError("--config is required");
    ExperimentConfig cfg = ExperimentConfig::from_file(ov.config_path);
    if (ov.seed >= 0) cfg.train.master_seed = static_cast<std::uint64_t>(ov.seed);
    if (ov.missing_rate >= 0.0) cfg.data.missing_rate = ov.missing_rate;
    cfg.validate();
    return cfg;
}

void add_common(CLI::App* cmd, Overrides& ov, bool with_variant) {
    cmd->add_option("--config", ov.config_path, "experiment config file");
    cmd->add_option("--seed", ov.seed, "master seed override");
    cmd->add_option("--missing-rate", ov.missing_rate, "missing rate override, in [0, 1)");
    cmd->add_option("--out", ov.out, "output location override");
    if (with_variant)
        cmd->add_option("--variant", ov.variant,
                        "full, target_only, dann, no_imputation, no_ae or no_contrastive");
}

nlohmann::json eval_json(const EvalReport& e) {
    nlohmann::json j;
    j["acc"] = e.acc;
    j["auc"] = e.auc ? nlohmann::json(*e.auc) : nlohmann::json(nullptr);
    j["precision"] = e.precision;
    j["recall"] = e.recall;
    j["f1"] = e.f1;
    j["confusion"] = e.confusion;
    j["n_eval"] = e.n_eval;
    j["n_excluded"] = e.n_excluded;
    j["degenerate"] = e.degenerate;
    return j;
}

int cmd_prepare(const Overrides& ov) {
    ExperimentConfig cfg = load_config(ov);
    const PreparedData p = prepare_data(cfg, cfg.train.master_seed);
    const fs::path out = ov.out.empty() ? fs::path("prepared") : fs::path(ov.out);
    fs::create_directories(out);
    save_csv(p.source, out / "source.csv");
    save_csv(p.target_train, out / "target_train.csv");
    save_csv(p.target_test, out / "target_test.csv");
    save_mask_csv(p.target_train, out / "target_train_mask.csv");
    save_mask_csv(p.target_test, out / "target_test_mask.csv");
    std::cout << "prepared " << p.source.size() << " source, " << p.target_train.size()
              << " target train (" << p.target_train.labeled_count << " labeled), "
              << p.target_test.size() << " target test instances under " << out.string() << "\n";
    return 0;
}

int cmd_train(const Overrides& ov) {
    ExperimentConfig cfg = load_config(ov);
    const Variant variant = variant_from_name(ov.variant);
    const std::uint64_t run_seed = cfg.train.master_seed;

    const PreparedData p = prepare_data(cfg, run_seed);
    TrainConfig tc = build_variant(cfg.train, variant);
    tc.master_seed = run_seed;
    Model model = build_model(p.source.dim, p.target_train.dim, p.source.n_classes,
                              derive_seed(run_seed, "init"));

    RunRecord rec;
    rec.variant = variant;
    rec.repeat = 0;
    rec.seed = run_seed;
    rec.config_hash = cfg.config_hash();
    const auto t0 = std::chrono::steady_clock::now();
    rec.history = train(model, p.source, p.target_train, tc);
    rec.eval = evaluate(model, p.target_test, derive_seed(run_seed, "eval"),
                        tc.switches.imputation);
    rec.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!rec.history.steps.empty()) rec.final_losses = rec.history.steps.back().losses;

    const fs::path out = ov.out.empty() ? fs::path("train_out") : fs::path(ov.out);
    fs::create_directories(out);
    atomic_write_text(out / "record.json", run_record_json(rec, cfg));
    save_checkpoint(model, {run_seed, cfg.config_hash()}, out / "checkpoint.bin");
    std::printf("%s seed %llu: acc %.4f", variant_name(variant),
                static_cast<unsigned long long>(run_seed), rec.eval.acc);
    if (rec.eval.auc) std::printf(", auc %.4f", *rec.eval.auc);
    std::printf(" (%zu eval rows, %.1f s); wrote %s\n", rec.eval.n_eval, rec.runtime_seconds,
                out.string().c_str());
    return 0;
}

int cmd_experiment(const Overrides& ov) {
    ExperimentConfig cfg = load_config(ov);
    const ExperimentOutcome outcome = run_experiment(cfg, ov.out.empty() ? fs::path() : fs::path(ov.out));
    std::cout << "completed " << outcome.completed_runs << " runs under "
              << outcome.out_base.string() << "\n";
    std::ifstream summary(outcome.summary_path);
    std::cout << summary.rdbuf();
    return 0;
}

int cmd_evaluate(const std::string& checkpoint, const std::string& test_csv, long long seed,
                 const std::string& out, bool zero_fill) {
    auto [model, meta] = load_checkpoint(checkpoint);
    const DomainDataset test = load_csv(test_csv, Domain::target, model.n_c);
    const std::uint64_t base = seed >= 0 ? static_cast<std::uint64_t>(seed) : meta.master_seed;
    const EvalReport report = evaluate(model, test, derive_seed(base, "eval"), !zero_fill);

    nlohmann::json j;
    j["checkpoint"] = checkpoint;
    j["test_csv"] = test_csv;
    j["eval_seed_base"] = base;
    j["zero_fill"] = zero_fill;
    j["eval"] = eval_json(report);
    const std::string text = j.dump(2) + "\n";
    if (out.empty()) {
        std::cout << text;
    } else {
        atomic_write_text(out, text);
        std::cout << "wrote " << out << "\n";
    }
    return 0;
}

int cmd_gradcheck(long long seed) {
    const std::uint64_t s = seed >= 0 ? static_cast<std::uint64_t>(seed) : 7u;
    const std::vector<GradCheckResult> results = run_gradient_suite(s);
    double worst = 0.0;
    for (const GradCheckResult& r : results) {
        std::printf("%-24s max rel err %.3e\n", r.name.c_str(), r.max_rel_err);
        worst = std::max(worst, r.max_rel_err);
    }
    if (!(worst < kGradTolerance))
        throw NumericError("gradient check failed: worst relative error " +
                           std::to_string(worst));
    std::printf("all %zu checks below %.0e\n", results.size(), kGradTolerance);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adversarial domain adaptation with imputation for incomplete target data"};
    app.require_subcommand(1);

    Overrides prep_ov, train_ov, exp_ov;
    CLI::App* prepare = app.add_subcommand("prepare", "materialize one prepared data draw as CSV");
    add_common(prepare, prep_ov, false);
    CLI::App* train = app.add_subcommand("train", "one training run; writes record and checkpoint");
    add_common(train, train_ov, true);
    CLI::App* experiment = app.add_subcommand("experiment", "full variant-by-repeat grid");
    add_common(experiment, exp_ov, false);

    std::string ev_checkpoint, ev_csv, ev_out;
    long long ev_seed = -1;
    bool ev_zero_fill = false;
    CLI::App* evaluate = app.add_subcommand("evaluate", "score a checkpoint on a test CSV");
    evaluate->add_option("checkpoint", ev_checkpoint, "checkpoint file")->required();
    evaluate->add_option("test_csv", ev_csv, "test set CSV")->required();
    evaluate->add_option("--seed", ev_seed, "evaluation seed base (default: checkpoint's)");
    evaluate->add_option("--out", ev_out, "metrics JSON path (default: stdout)");
    evaluate->add_flag("--zero-fill", ev_zero_fill, "fill missing entries with 0, skip the imputer");

    long long gc_seed = -1;
    CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient audit");
    gradcheck->add_option("--seed", gc_seed, "suite seed");

    try {
        app.parse(argc, argv);
        if (prepare->parsed()) return cmd_prepare(prep_ov);
        if (train->parsed()) return cmd_train(train_ov);
        if (experiment->parsed()) return cmd_experiment(exp_ov);
        if (evaluate->parsed())
            return cmd_evaluate(ev_checkpoint, ev_csv, ev_seed, ev_out, ev_zero_fill);
        if (gradcheck->parsed()) return cmd_gradcheck(gc_seed);
        return 2;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
