#include "refpred/cli.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <vector>

#include "refpred/config.hpp"
#include "refpred/harness.hpp"
#include "refpred/ingest.hpp"
#include "refpred/parallel.hpp"
#include "refpred/rng.hpp"
#include "refpred/svg.hpp"

namespace refpred::cli {

namespace fs = std::filesystem;

namespace {

void write_atomic(const fs::path& target, const std::string& content) {
    fs::create_directories(target.parent_path());
    const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << content;
    }
    fs::rename(tmp, target);
}

void print_error(const std::string& command, const std::exception& e) {
    nlohmann::json err;
    err["error"]["command"] = command;
    err["error"]["message"] = e.what();
    if (const auto* ce = dynamic_cast<const ConfigError*>(&e))
        err["error"]["pointer"] = ce->pointer();
    std::cerr << err.dump() << std::endl;
}

RunConfig load_config(const std::string& config_path, const Overrides& ov) {
    RunConfig cfg = load_run_config(config_path);
    if (ov.seed) cfg.seed = *ov.seed;
    if (ov.jobs) cfg.jobs = *ov.jobs;
    if (ov.n_ref) cfg.n_ref = *ov.n_ref;
    set_max_threads(cfg.jobs);
    return cfg;
}

FeatureStore load_features(const RunConfig& cfg, const SplitPlan* split) {
    if (cfg.feature_kind == "one_gram") {
        if (cfg.prompts_jsonl.empty())
            throw ConfigError("/inputs/prompts_jsonl", "required for one_gram features");
        const std::vector<PromptRecord> prompts = load_prompts_jsonl(cfg.prompts_jsonl);
        std::vector<PromptRecord> train_prompts;
        if (split) {
            const std::set<InstanceId> train_ids(split->train_instances.begin(),
                                                 split->train_instances.end());
            for (const PromptRecord& p : prompts)
                if (train_ids.count(p.instance_id)) train_prompts.push_back(p);
        } else {
            train_prompts = prompts;
        }
        return one_gram_features(train_prompts, prompts, cfg.vocab_cap);
    }
    if (cfg.embeddings_jsonl.empty())
        throw ConfigError("/inputs/embeddings_jsonl", "required unless feature_kind is one_gram");
    FeatureStore store = load_embeddings_jsonl(cfg.embeddings_jsonl);
    if (cfg.truncate_dim > 0) store = truncate_embeddings(store, cfg.truncate_dim);
    return store;
}

SuccessMatrix load_matrix(const RunConfig& cfg) {
    if (cfg.success_csv.empty())
        throw ConfigError("/inputs/success_csv", "required field is missing");
    return load_success_csv(cfg.success_csv);
}

SplitPlan obtain_split(const RunConfig& cfg, const SuccessMatrix& matrix,
                       const FeatureStore& store) {
    if (!cfg.split_file.empty()) {
        std::ifstream in(cfg.split_file);
        if (!in) throw std::runtime_error("cannot open split file '" + cfg.split_file + "'");
        return SplitPlan::from_json(nlohmann::json::parse(in));
    }
    if (!cfg.split_mode)
        throw ConfigError("/split", "required unless /inputs/split names a split file");
    std::vector<std::string> labels;
    for (const InstanceId& id : matrix.instance_ids())
        labels.push_back(store.dataset_labels()[store.row_of(id)]);
    return make_split(matrix.instance_ids(), labels, matrix.llm_ids(), *cfg.split_mode, cfg.seed);
}

nlohmann::json stamp(const RunConfig& cfg, nlohmann::json j) {
    j["config_digest"] = cfg.digest();
    j["tool_version"] = kToolVersion;
    return j;
}

ExperimentInputs load_experiment_inputs(const RunConfig& cfg) {
    const SuccessMatrix matrix = load_matrix(cfg);
    SplitPlan split;
    bool have_split = false;
    if (!cfg.split_file.empty()) {
        std::ifstream in(cfg.split_file);
        if (!in) throw std::runtime_error("cannot open split file '" + cfg.split_file + "'");
        split = SplitPlan::from_json(nlohmann::json::parse(in));
        have_split = true;
    }
    // One-gram vocabularies depend on the train split, so resolve it first.
    FeatureStore store = cfg.feature_kind == "one_gram" && have_split
                             ? load_features(cfg, &split)
                             : load_features(cfg, nullptr);
    if (!have_split) {
        split = obtain_split(cfg, matrix, store);
        if (cfg.feature_kind == "one_gram") store = load_features(cfg, &split);
    }
    auto [aligned_matrix, aligned_store] = align(matrix, store);
    return ExperimentInputs{std::move(aligned_matrix), std::move(aligned_store),
                            std::move(split)};
}

std::vector<ChartSeries> test_chart_series(const EvalReport& report,
                                           const std::vector<LlmId>& llms) {
    const auto series_of = [&](const std::string& name,
                               const std::map<LlmId, double>& aucs) {
        ChartSeries s;
        s.name = name;
        for (const LlmId& llm : llms) {
            const auto it = aucs.find(llm);
            s.values.push_back(it == aucs.end() ? 0.0 : it->second);
        }
        return s;
    };
    return {series_of("generic", report.generic_test_auc),
            series_of("specific", report.specific_test_auc),
            series_of("random_selector", report.random_selector_test_auc),
            series_of("reference_only", report.reference_only_test_auc),
            series_of("all_train_data", report.all_train_test_auc)};
}

void write_report(const RunConfig& cfg, const EvalReport& report, const SplitPlan& split,
                  const fs::path& out) {
    write_atomic(out / "report.json", stamp(cfg, report.to_json()).dump(2) + "\n");
    write_atomic(out / "report.csv", report.to_csv());

    const std::string comment =
        "config_digest=" + cfg.digest() + " tool_version=" + std::string(kToolVersion);
    std::vector<std::string> combo_ids;
    ChartSeries val_series{"mean validation AUC", {}};
    for (const ComboOutcome& c : report.combos) {
        combo_ids.push_back(c.combo.combo_id);
        val_series.values.push_back(mean_of(c.val_auc));
    }
    write_atomic(out / "report_val.svg",
                 svg_bar_chart("Validation AUC by combination", combo_ids, {val_series}, comment));
    write_atomic(out / "report_test.svg",
                 svg_bar_chart("Test AUC by method", split.test_llms,
                               test_chart_series(report, split.test_llms), comment));
}

int guarded(const char* command, const std::function<void()>& body) {
    try {
        body();
        return 0;
    } catch (const std::exception& e) {
        print_error(command, e);
        return 1;
    }
}

}  // namespace

int cmd_split(const std::string& config_path, const std::string& out_dir, const Overrides& ov) {
    return guarded("split", [&] {
        const RunConfig cfg = load_config(config_path, ov);
        const SuccessMatrix matrix = load_matrix(cfg);
        const FeatureStore store = load_features(cfg, nullptr);
        const SplitPlan split = obtain_split(cfg, matrix, store);
        write_atomic(fs::path(out_dir) / "split.json",
                     stamp(cfg, split.to_json()).dump(2) + "\n");
    });
}

int cmd_select(const std::string& config_path, const std::string& out_dir, const Overrides& ov) {
    return guarded("select", [&] {
        const RunConfig cfg = load_config(config_path, ov);
        const ExperimentInputs in = load_experiment_inputs(cfg);
        const SuccessMatrix train_matrix =
            in.matrix.submatrix(in.split.train_llms, in.split.train_instances);
        const FeatureStore train_store = in.store.subset(in.split.train_instances);

        std::optional<IrtModel> irt;
        SelectorInputs sel_in;
        sel_in.train_matrix = &train_matrix;
        sel_in.train_store = &train_store;
        for (const std::string& name : cfg.selectors) {
            if (name.find("irt_demands") != std::string::npos && !irt) {
                irt = fit_irt(train_matrix, cfg.irt_k, 1e-2, 500, 1e-5,
                              derive_seed(cfg.seed, 0x147));
                sel_in.irt = &*irt;
            }
            if (name == "random_best_of_20")
                throw std::runtime_error(
                    "select: random_best_of_20 needs the full run pipeline (use the run command)");
            // Same per-selector seed derivation as the run command, so the
            // written reference sets match what a run would use.
            SelectorSpec spec =
                SelectorSpec::parse(name, cfg.n_ref, derive_seed(cfg.seed, fnv64(name)));
            const ReferenceSet ref = run_selector(spec, sel_in);
            std::string fname = "refset_" + name + ".json";
            for (char& c : fname)
                if (c == ':') c = '_';
            write_atomic(fs::path(out_dir) / fname,
                         stamp(cfg, ref.to_json(cfg.n_ref, cfg.seed)).dump(2) + "\n");
        }
    });
}

int cmd_run(const std::string& config_path, const std::string& out_dir, const Overrides& ov) {
    return guarded("run", [&] {
        const RunConfig cfg = load_config(config_path, ov);
        const ExperimentInputs in = load_experiment_inputs(cfg);
        const EvalReport report = run_experiment(in, cfg.to_run_options());
        write_report(cfg, report, in.split, fs::path(out_dir));
    });
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir, const Overrides& ov) {
    return guarded("sweep", [&] {
        const RunConfig cfg = load_config(config_path, ov);
        if (cfg.sweep_n_ref_list.empty())
            throw ConfigError("/sweep_n_ref", "required field is missing");
        const ExperimentInputs in = load_experiment_inputs(cfg);
        const std::vector<SweepRow> rows =
            sweep_n_ref(in, cfg.to_run_options(), cfg.sweep_n_ref_list);
        write_atomic(fs::path(out_dir) / "sweep.csv", sweep_to_csv(rows, cfg.digest()));

        std::vector<double> xs;
        ChartSeries generic{"generic", {}}, specific{"specific", {}}, ref_only{"reference_only", {}};
        for (const SweepRow& r : rows) {
            xs.push_back(static_cast<double>(r.n_ref));
            generic.values.push_back(r.generic_test_auc);
            specific.values.push_back(r.specific_test_auc);
            ref_only.values.push_back(r.reference_only_test_auc);
        }
        const std::string comment =
            "config_digest=" + cfg.digest() + " tool_version=" + std::string(kToolVersion);
        write_atomic(fs::path(out_dir) / "sweep.svg",
                     svg_line_chart("Test AUC vs reference-set size", xs,
                                    {generic, specific, ref_only}, comment));
    });
}

int cmd_synthetic(const std::string& config_path, const std::string& out_dir,
                  const Overrides& ov) {
    return guarded("synthetic", [&] {
        RunConfig cfg = load_config(config_path, ov);
        if (!cfg.has_synthetic) throw ConfigError("/synthetic", "required field is missing");
        if (ov.seed) cfg.synthetic.seed = *ov.seed;
        const SyntheticWorld world = generate_synthetic_world(cfg.synthetic);
        const fs::path out(out_dir);
        fs::create_directories(out);
        save_success_csv(world.matrix, (out / "success.csv.tmp").string());
        fs::rename(out / "success.csv.tmp", out / "success.csv");
        save_embeddings_jsonl(world.store, (out / "embeddings.jsonl.tmp").string());
        fs::rename(out / "embeddings.jsonl.tmp", out / "embeddings.jsonl");
        write_atomic(out / "split.json", stamp(cfg, world.split.to_json()).dump(2) + "\n");
        write_atomic(out / "truth.json", stamp(cfg, world.truth_to_json()).dump(2) + "\n");
    });
}

}  // namespace refpred::cli
