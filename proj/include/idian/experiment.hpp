#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "idian/data.hpp"
#include "idian/metrics.hpp"
#include "idian/synthetic.hpp"
#include "idian/toml_lite.hpp"
#include "idian/trainer.hpp"

namespace idian {

struct DataConfig {
    std::string source_csv; // both paths empty: synthesize instead
    std::string target_csv;
    double missing_rate = 0.4;
    bool channel_shuffle = true;
    int n_labeled_per_class = 10;
    double train_fraction = 0.5;
};

struct RunSection {
    std::string name = "experiment";
    std::string out_root = "results";
    std::vector<Variant> variants;
    int repeats = 5;
    bool epoch_eval = false; // evaluate on the frozen model after each epoch
};

struct ExperimentConfig {
    DataConfig data;
    SyntheticSpec synth;
    TrainConfig train;
    RunSection run;

    // Checked against the loaded/synthesized data when nonzero; n_c is
    // required for CSV data, where it cannot be derived.
    int model_d_s = 0;
    int model_d_t = 0;
    int model_n_c = 0;

    static ExperimentConfig from_file(const std::filesystem::path& path);
    static ExperimentConfig from_toml(const TomlTable& toml);

    void validate() const;
    bool synthetic_mode() const { return data.source_csv.empty() && data.target_csv.empty(); }
    int n_classes() const { return synthetic_mode() && model_n_c == 0 ? synth.n_c : model_n_c; }

    /// The resolved config as a parseable config file; hashing it gives the
    /// replay-stable config id.
    std::string canonical_string() const;
    std::uint64_t config_hash() const;
};

struct PreparedData {
    DomainDataset source;
    DomainDataset target_train; // labeled prefix = the selected n_l per class
    DomainDataset target_test;
};

/// Full pipeline for one repeat: load or synthesize, split target, fit
/// normalization on the target train split, mask the whole target domain,
/// shuffle target channels, then select the labeled instances. Every random
/// choice derives from run_seed.
PreparedData prepare_data(const ExperimentConfig& cfg, std::uint64_t run_seed);

struct RunRecord {
    Variant variant = Variant::full;
    int repeat = 0;
    std::uint64_t seed = 0; // run seed: master_seed + repeat
    EvalReport eval;
    LossReport final_losses;
    double runtime_seconds = 0.0;
    std::uint64_t config_hash = 0;
    TrainHistory history;
};

/// Trains and evaluates one (variant, repeat) cell on already-prepared data.
RunRecord run_single(const ExperimentConfig& cfg, const PreparedData& prepared, Variant variant,
                     int repeat);

struct ExperimentOutcome {
    std::filesystem::path out_base;
    std::filesystem::path summary_path;
    std::size_t completed_runs = 0;
};

/// The whole grid: every configured variant times every repeat, one JSON
/// record per run, a per-step loss history CSV, and a summary recomputed
/// from the records on disk. out_override, when nonempty, replaces
/// out_root/name.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg,
                                 const std::filesystem::path& out_override = {});

/// Serialization used by the CLI and the record files.
std::string run_record_json(const RunRecord& rec, const ExperimentConfig& cfg);
std::string summary_csv_from_records(const std::filesystem::path& out_base,
                                     const std::vector<Variant>& variants);
std::string history_csv(const std::vector<RunRecord>& records);

void atomic_write_text(const std::filesystem::path& path, const std::string& content);

} // namespace idian
