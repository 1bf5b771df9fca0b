#include "idian/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "idian/common.hpp"
#include "idian/csv.hpp"

namespace idian {

namespace {

using nlohmann::json;

std::string fmt_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

DomainDataset subset(const DomainDataset& ds, const std::vector<std::size_t>& rows) {
    DomainDataset out;
    out.domain = ds.domain;
    out.dim = ds.dim;
    out.n_classes = ds.n_classes;
    out.instances.reserve(rows.size());
    for (std::size_t r : rows) out.instances.push_back(ds.instances[r]);
    return out;
}

// Stable labeled-first order, so the labeled-prefix invariant holds.
void repartition_labeled(DomainDataset& ds) {
    std::vector<Instance> ordered;
    ordered.reserve(ds.instances.size());
    for (const Instance& ins : ds.instances)
        if (ins.label) ordered.push_back(ins);
    ds.labeled_count = ordered.size();
    for (const Instance& ins : ds.instances)
        if (!ins.label) ordered.push_back(ins);
    ds.instances = std::move(ordered);
}

json eval_to_json(const EvalReport& e) {
    json j;
    j["acc"] = e.acc;
    j["auc"] = e.auc ? json(*e.auc) : json(nullptr);
    j["precision"] = e.precision;
    j["recall"] = e.recall;
    j["f1"] = e.f1;
    j["confusion"] = e.confusion;
    j["n_eval"] = e.n_eval;
    j["n_excluded"] = e.n_excluded;
    j["degenerate"] = e.degenerate;
    return j;
}

json losses_to_json(const LossReport& l) {
    json j;
    j["l_cls"] = l.l_cls;
    j["l_ae"] = l.l_ae;
    j["l_cont"] = l.l_cont;
    j["l_adv"] = l.l_adv;
    j["l_total"] = l.l_total;
    j["cont_degenerate"] = l.cont_degenerate;
    return j;
}

std::string hash_hex(std::uint64_t h) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct Moments {
    double mean = 0.0;
    double stddev = 0.0; // sample standard deviation
    std::size_t n = 0;
};

Moments moments(const std::vector<double>& xs) {
    Moments m;
    m.n = xs.size();
    if (xs.empty()) return m;
    for (double x : xs) m.mean += x;
    m.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - m.mean) * (x - m.mean);
        m.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return m;
}

} // namespace

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
    return from_toml(TomlTable::parse_file(path));
}

ExperimentConfig ExperimentConfig::from_toml(const TomlTable& t) {
    t.check_known_sections({"data", "synthetic", "model", "train", "run"});
    t.check_known("data", {"source_csv", "target_csv", "missing_rate", "channel_shuffle",
                           "n_labeled_per_class", "train_fraction"});
    t.check_known("synthetic", {"n_per_class", "n_c", "d_s", "d_t", "separation", "latent_noise",
                                "rotation_deg", "distinct_maps"});
    t.check_known("model", {"d_s", "d_t", "n_c"});
    t.check_known("train",
                  {"alpha", "beta", "gamma", "lambda", "rho", "eta", "batch_size", "epochs",
                   "master_seed", "imputation", "ae_loss", "contrastive_loss", "adversarial_loss",
                   "use_source", "pair_mode", "discriminator_direction"});
    t.check_known("run", {"name", "out_root", "variants", "repeats", "epoch_eval"});

    ExperimentConfig cfg;
    cfg.data.source_csv = t.get_string("data", "source_csv", cfg.data.source_csv);
    cfg.data.target_csv = t.get_string("data", "target_csv", cfg.data.target_csv);
    cfg.data.missing_rate = t.get_real("data", "missing_rate", cfg.data.missing_rate);
    cfg.data.channel_shuffle = t.get_bool("data", "channel_shuffle", cfg.data.channel_shuffle);
    cfg.data.n_labeled_per_class = static_cast<int>(
        t.get_int("data", "n_labeled_per_class", cfg.data.n_labeled_per_class));
    cfg.data.train_fraction = t.get_real("data", "train_fraction", cfg.data.train_fraction);

    cfg.synth.n_per_class = static_cast<std::size_t>(
        t.get_int("synthetic", "n_per_class", static_cast<long long>(cfg.synth.n_per_class)));
    cfg.synth.n_c = static_cast<int>(t.get_int("synthetic", "n_c", cfg.synth.n_c));
    cfg.synth.d_s = static_cast<int>(t.get_int("synthetic", "d_s", cfg.synth.d_s));
    cfg.synth.d_t = static_cast<int>(t.get_int("synthetic", "d_t", cfg.synth.d_t));
    cfg.synth.separation = t.get_real("synthetic", "separation", cfg.synth.separation);
    cfg.synth.latent_noise = t.get_real("synthetic", "latent_noise", cfg.synth.latent_noise);
    cfg.synth.rotation_deg = t.get_real("synthetic", "rotation_deg", cfg.synth.rotation_deg);
    cfg.synth.distinct_maps = t.get_bool("synthetic", "distinct_maps", cfg.synth.distinct_maps);

    cfg.model_d_s = static_cast<int>(t.get_int("model", "d_s", cfg.model_d_s));
    cfg.model_d_t = static_cast<int>(t.get_int("model", "d_t", cfg.model_d_t));
    cfg.model_n_c = static_cast<int>(t.get_int("model", "n_c", cfg.model_n_c));

    cfg.train.alpha = t.get_real("train", "alpha", cfg.train.alpha);
    cfg.train.beta = t.get_real("train", "beta", cfg.train.beta);
    cfg.train.gamma = t.get_real("train", "gamma", cfg.train.gamma);
    cfg.train.lambda = t.get_real("train", "lambda", cfg.train.lambda);
    cfg.train.rho = t.get_real("train", "rho", cfg.train.rho);
    cfg.train.eta = t.get_real("train", "eta", cfg.train.eta);
    cfg.train.batch_size = static_cast<std::size_t>(
        t.get_int("train", "batch_size", static_cast<long long>(cfg.train.batch_size)));
    cfg.train.epochs = static_cast<std::size_t>(
        t.get_int("train", "epochs", static_cast<long long>(cfg.train.epochs)));
    const long long seed =
        t.get_int("train", "master_seed", static_cast<long long>(cfg.train.master_seed));
    if (seed < 0) throw ConfigError("config train.master_seed: must be nonnegative");
    cfg.train.master_seed = static_cast<std::uint64_t>(seed);
    cfg.train.switches.imputation = t.get_bool("train", "imputation", true);
    cfg.train.switches.ae_loss = t.get_bool("train", "ae_loss", true);
    cfg.train.switches.contrastive_loss = t.get_bool("train", "contrastive_loss", true);
    cfg.train.switches.adversarial_loss = t.get_bool("train", "adversarial_loss", true);
    cfg.train.use_source = t.get_bool("train", "use_source", true);
    cfg.train.pair_mode = pair_mode_from_name(t.get_string("train", "pair_mode", "union"));
    cfg.train.discriminator_direction =
        direction_from_name(t.get_string("train", "discriminator_direction", "descend"));

    cfg.run.name = t.get_string("run", "name", cfg.run.name);
    cfg.run.out_root = t.get_string("run", "out_root", cfg.run.out_root);
    cfg.run.repeats = static_cast<int>(t.get_int("run", "repeats", cfg.run.repeats));
    cfg.run.epoch_eval = t.get_bool("run", "epoch_eval", cfg.run.epoch_eval);
    const std::vector<std::string> default_variants = {"full",          "target_only",
                                                       "dann",          "no_imputation",
                                                       "no_ae",         "no_contrastive"};
    for (const std::string& name : t.get_string_array("run", "variants", default_variants))
        cfg.run.variants.push_back(variant_from_name(name));

    cfg.validate();
    return cfg;
}

void ExperimentConfig::validate() const {
    if (data.missing_rate < 0.0 || data.missing_rate >= 1.0)
        throw ConfigError("config data.missing_rate: must be in [0, 1)");
    if (data.n_labeled_per_class < 1)
        throw ConfigError("config data.n_labeled_per_class: must be at least 1");
    if (data.train_fraction <= 0.0 || data.train_fraction >= 1.0)
        throw ConfigError("config data.train_fraction: must be in (0, 1)");
    if (data.source_csv.empty() != data.target_csv.empty())
        throw ConfigError("config data: source_csv and target_csv must be given together");
    if (!synthetic_mode() && model_n_c < 2)
        throw ConfigError("config model.n_c: required (>= 2) for CSV data");
    if (model_d_s < 0 || model_d_t < 0 || model_n_c < 0)
        throw ConfigError("config model: dimension overrides must be nonnegative");
    if (synthetic_mode() && model_n_c != 0 && model_n_c != synth.n_c)
        throw ConfigError("config model.n_c: contradicts synthetic.n_c");
    train.validate(true);
    if (run.repeats < 1) throw ConfigError("config run.repeats: must be at least 1");
    if (run.variants.empty()) throw ConfigError("config run.variants: must not be empty");
    if (run.name.empty() || run.out_root.empty())
        throw ConfigError("config run: name and out_root must not be empty");
}

std::string ExperimentConfig::canonical_string() const {
    std::ostringstream out;
    out << "[data]\n";
    out << "source_csv = " << quote(data.source_csv) << "\n";
    out << "target_csv = " << quote(data.target_csv) << "\n";
    out << "missing_rate = " << fmt_real(data.missing_rate) << "\n";
    out << "channel_shuffle = " << (data.channel_shuffle ? "true" : "false") << "\n";
    out << "n_labeled_per_class = " << data.n_labeled_per_class << "\n";
    out << "train_fraction = " << fmt_real(data.train_fraction) << "\n";
    out << "\n[synthetic]\n";
    out << "n_per_class = " << synth.n_per_class << "\n";
    out << "n_c = " << synth.n_c << "\n";
    out << "d_s = " << synth.d_s << "\n";
    out << "d_t = " << synth.d_t << "\n";
    out << "separation = " << fmt_real(synth.separation) << "\n";
    out << "latent_noise = " << fmt_real(synth.latent_noise) << "\n";
    out << "rotation_deg = " << fmt_real(synth.rotation_deg) << "\n";
    out << "distinct_maps = " << (synth.distinct_maps ? "true" : "false") << "\n";
    out << "\n[model]\n";
    out << "d_s = " << model_d_s << "\n";
    out << "d_t = " << model_d_t << "\n";
    out << "n_c = " << model_n_c << "\n";
    out << "\n[train]\n";
    out << "alpha = " << fmt_real(train.alpha) << "\n";
    out << "beta = " << fmt_real(train.beta) << "\n";
    out << "gamma = " << fmt_real(train.gamma) << "\n";
    out << "lambda = " << fmt_real(train.lambda) << "\n";
    out << "rho = " << fmt_real(train.rho) << "\n";
    out << "eta = " << fmt_real(train.eta) << "\n";
    out << "batch_size = " << train.batch_size << "\n";
    out << "epochs = " << train.epochs << "\n";
    out << "master_seed = " << train.master_seed << "\n";
    out << "imputation = " << (train.switches.imputation ? "true" : "false") << "\n";
    out << "ae_loss = " << (train.switches.ae_loss ? "true" : "false") << "\n";
    out << "contrastive_loss = " << (train.switches.contrastive_loss ? "true" : "false") << "\n";
    out << "adversarial_loss = " << (train.switches.adversarial_loss ? "true" : "false") << "\n";
    out << "use_source = " << (train.use_source ? "true" : "false") << "\n";
    out << "pair_mode = " << quote(pair_mode_name(train.pair_mode)) << "\n";
    out << "discriminator_direction = " << quote(direction_name(train.discriminator_direction))
        << "\n";
    out << "\n[run]\n";
    out << "name = " << quote(run.name) << "\n";
    out << "out_root = " << quote(run.out_root) << "\n";
    out << "variants = [";
    for (std::size_t i = 0; i < run.variants.size(); ++i)
        out << (i ? ", " : "") << quote(variant_name(run.variants[i]));
    out << "]\n";
    out << "repeats = " << run.repeats << "\n";
    out << "epoch_eval = " << (run.epoch_eval ? "true" : "false") << "\n";
    return out.str();
}

std::uint64_t ExperimentConfig::config_hash() const { return fnv1a64(canonical_string()); }

PreparedData prepare_data(const ExperimentConfig& cfg, std::uint64_t run_seed) {
    cfg.validate();

    DomainDataset source, target_full;
    if (cfg.synthetic_mode()) {
        auto both = make_synthetic(cfg.synth, derive_seed(run_seed, "synthetic"));
        source = std::move(both.first);
        target_full = std::move(both.second);
    } else {
        source = load_csv(cfg.data.source_csv, Domain::source, cfg.n_classes());
        target_full = load_csv(cfg.data.target_csv, Domain::target, cfg.n_classes());
    }
    if (cfg.model_d_s != 0 && source.dim != cfg.model_d_s)
        throw ConfigError("source data has " + std::to_string(source.dim) +
                          " features, config model.d_s says " + std::to_string(cfg.model_d_s));
    if (cfg.model_d_t != 0 && target_full.dim != cfg.model_d_t)
        throw ConfigError("target data has " + std::to_string(target_full.dim) +
                          " features, config model.d_t says " + std::to_string(cfg.model_d_t));

    const std::size_t n_t = target_full.size();
    if (n_t < 2) throw ConfigError("target domain needs at least 2 instances to split");
    const bool pre_masked = !target_full.fully_observed();

    Rng split_rng(derive_seed(run_seed, "split"));
    const std::vector<std::size_t> order = split_rng.permutation(n_t);
    std::size_t train_n =
        static_cast<std::size_t>(std::llround(cfg.data.train_fraction * static_cast<double>(n_t)));
    train_n = std::clamp<std::size_t>(train_n, 1, n_t - 1);
    DomainDataset train_split = subset(
        target_full, std::vector<std::size_t>(order.begin(), order.begin() + static_cast<long>(train_n)));
    DomainDataset test_split = subset(
        target_full, std::vector<std::size_t>(order.begin() + static_cast<long>(train_n), order.end()));

    source = minmax_normalize(source).first;
    auto normalized = minmax_normalize(train_split);
    train_split = std::move(normalized.first);
    test_split = normalized.second.apply(test_split);

    // A target domain that arrives with holes keeps them; simulation only
    // runs on fully observed data.
    if (!pre_masked && cfg.data.missing_rate > 0.0) {
        train_split = simulate_missing(
            train_split, {cfg.data.missing_rate, derive_seed(run_seed, "missing_train")});
        test_split = simulate_missing(
            test_split, {cfg.data.missing_rate, derive_seed(run_seed, "missing_test")});
    }

    if (cfg.data.channel_shuffle) {
        const std::vector<std::size_t> perm =
            channel_permutation(train_split.dim, derive_seed(run_seed, "channels"));
        train_split = apply_channel_permutation(train_split, perm);
        test_split = apply_channel_permutation(test_split, perm);
    }

    // Keep n_l labeled instances per class; the rest of the train split
    // loses its labels and forms the unlabeled pool.
    const int n_c = source.n_classes;
    const int n_l = cfg.data.n_labeled_per_class;
    Rng select_rng(derive_seed(run_seed, "label_select"));
    std::vector<std::size_t> selected;
    std::vector<bool> keep(train_split.size(), false);
    for (int c = 0; c < n_c; ++c) {
        std::vector<std::size_t> pool;
        for (std::size_t i = 0; i < train_split.size(); ++i)
            if (train_split.instances[i].label && *train_split.instances[i].label == c)
                pool.push_back(i);
        if (pool.size() < static_cast<std::size_t>(n_l))
            throw ConfigError("class " + std::to_string(c) + " has " +
                              std::to_string(pool.size()) + " labeled target instances, need " +
                              std::to_string(n_l));
        select_rng.shuffle(pool);
        for (int k = 0; k < n_l; ++k) {
            selected.push_back(pool[static_cast<std::size_t>(k)]);
            keep[pool[static_cast<std::size_t>(k)]] = true;
        }
    }
    std::vector<Instance> reordered;
    reordered.reserve(train_split.size());
    for (std::size_t i : selected) reordered.push_back(train_split.instances[i]);
    for (std::size_t i = 0; i < train_split.size(); ++i) {
        if (keep[i]) continue;
        Instance ins = train_split.instances[i];
        ins.label.reset();
        reordered.push_back(std::move(ins));
    }
    train_split.instances = std::move(reordered);
    train_split.labeled_count = static_cast<std::size_t>(n_l) * static_cast<std::size_t>(n_c);

    repartition_labeled(test_split);

    source.validate();
    train_split.validate();
    test_split.validate();
    return {std::move(source), std::move(train_split), std::move(test_split)};
}

RunRecord run_single(const ExperimentConfig& cfg, const PreparedData& prepared, Variant variant,
                     int repeat) {
    const std::uint64_t run_seed = cfg.train.master_seed + static_cast<std::uint64_t>(repeat);
    TrainConfig tc = build_variant(cfg.train, variant);
    tc.master_seed = run_seed;

    Model model = build_model(prepared.source.dim, prepared.target_train.dim,
                              prepared.source.n_classes, derive_seed(run_seed, "init"));

    const std::uint64_t eval_seed = derive_seed(run_seed, "eval");
    std::function<double(const Model&)> epoch_eval;
    if (cfg.run.epoch_eval)
        epoch_eval = [&](const Model& m) {
            return evaluate(m, prepared.target_test, eval_seed, tc.switches.imputation).acc;
        };

    RunRecord rec;
    rec.variant = variant;
    rec.repeat = repeat;
    rec.seed = run_seed;
    rec.config_hash = cfg.config_hash();
    const auto t0 = std::chrono::steady_clock::now();
    rec.history = train(model, prepared.source, prepared.target_train, tc, epoch_eval);
    rec.eval = evaluate(model, prepared.target_test, eval_seed, tc.switches.imputation);
    rec.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!rec.history.steps.empty()) rec.final_losses = rec.history.steps.back().losses;
    return rec;
}

std::string run_record_json(const RunRecord& rec, const ExperimentConfig& cfg) {
    json j;
    j["variant"] = variant_name(rec.variant);
    j["repeat"] = rec.repeat;
    j["seed"] = rec.seed;
    j["runtime_seconds"] = rec.runtime_seconds;
    j["config_hash"] = hash_hex(rec.config_hash);
    j["eval"] = eval_to_json(rec.eval);
    j["final_losses"] = losses_to_json(rec.final_losses);
    j["skipped_steps"] = rec.history.skipped_steps;
    json epochs = json::array();
    for (const EpochRecord& e : rec.history.epochs) {
        json je;
        je["epoch"] = e.epoch;
        je["wall_seconds"] = e.wall_seconds;
        je["mean_l_cls"] = e.mean_l_cls;
        je["eval_acc"] = e.eval_acc ? json(*e.eval_acc) : json(nullptr);
        epochs.push_back(je);
    }
    j["epochs"] = epochs;
    j["config_toml"] = cfg.canonical_string();
    return j.dump(2) + "\n";
}

std::string history_csv(const std::vector<RunRecord>& records) {
    std::ostringstream out;
    out << "variant,seed,step,l_cls,l_ae,l_cont,l_adv,l_total\n";
    for (const RunRecord& rec : records)
        for (const StepRecord& s : rec.history.steps)
            out << variant_name(rec.variant) << "," << rec.seed << "," << s.step << ","
                << fmt_real(s.losses.l_cls) << "," << fmt_real(s.losses.l_ae) << ","
                << fmt_real(s.losses.l_cont) << "," << fmt_real(s.losses.l_adv) << ","
                << fmt_real(s.losses.l_total) << "\n";
    return out.str();
}

std::string summary_csv_from_records(const std::filesystem::path& out_base,
                                     const std::vector<Variant>& variants) {
    std::ostringstream out;
    out << "variant,n,acc_mean,acc_std,auc_mean,auc_std,precision_mean,precision_std,"
           "recall_mean,recall_std,f1_mean,f1_std\n";
    for (Variant v : variants) {
        const std::filesystem::path dir = out_base / variant_name(v);
        std::vector<std::filesystem::path> files;
        if (std::filesystem::is_directory(dir))
            for (const auto& entry : std::filesystem::directory_iterator(dir))
                if (entry.path().extension() == ".json") files.push_back(entry.path());
        if (files.empty())
            throw IoError("no result records under " + dir.string());
        std::sort(files.begin(), files.end());

        std::vector<double> acc, auc_vals, prec, rec, f1;
        for (const auto& path : files) {
            std::ifstream in(path);
            if (!in) throw IoError("cannot open " + path.string());
            json j;
            try {
                in >> j;
                const json& e = j.at("eval");
                acc.push_back(e.at("acc").get<double>());
                prec.push_back(e.at("precision").get<double>());
                rec.push_back(e.at("recall").get<double>());
                f1.push_back(e.at("f1").get<double>());
                if (!e.at("auc").is_null()) auc_vals.push_back(e.at("auc").get<double>());
            } catch (const json::exception& ex) {
                throw ParseError(path.string() + ": " + ex.what());
            }
        }
        auto cell = [&](const Moments& m) {
            return m.n == 0 ? std::string(",,")
                            : "," + fmt_real(m.mean) + "," + fmt_real(m.stddev);
        };
        out << variant_name(v) << "," << files.size() << cell(moments(acc))
            << cell(moments(auc_vals)) << cell(moments(prec)) << cell(moments(rec))
            << cell(moments(f1)) << "\n";
    }
    return out.str();
}

void atomic_write_text(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out << content;
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

ExperimentOutcome run_experiment(const ExperimentConfig& cfg,
                                 const std::filesystem::path& out_override) {
    cfg.validate();
    const std::filesystem::path base = out_override.empty()
                                           ? std::filesystem::path(cfg.run.out_root) / cfg.run.name
                                           : out_override;
    std::filesystem::create_directories(base);
    atomic_write_text(base / "config_resolved.toml", cfg.canonical_string());

    std::vector<RunRecord> records;
    for (int k = 0; k < cfg.run.repeats; ++k) {
        // One data draw per repeat, shared by every variant: comparisons at
        // a given seed see identical instances, masks and label picks.
        const PreparedData prepared = prepare_data(cfg, cfg.train.master_seed + static_cast<std::uint64_t>(k));
        for (Variant v : cfg.run.variants) {
            RunRecord rec = run_single(cfg, prepared, v, k);
            const std::filesystem::path dir = base / variant_name(v);
            std::filesystem::create_directories(dir);
            atomic_write_text(dir / ("seed" + std::to_string(k) + ".json"),
                              run_record_json(rec, cfg));
            records.push_back(std::move(rec));
        }
    }

    atomic_write_text(base / "history.csv", history_csv(records));
    atomic_write_text(base / "summary.csv", summary_csv_from_records(base, cfg.run.variants));

    ExperimentOutcome outcome;
    outcome.out_base = base;
    outcome.summary_path = base / "summary.csv";
    outcome.completed_runs = records.size();
    return outcome;
}

} // namespace idian
