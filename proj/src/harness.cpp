#include "refpred/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

#include "refpred/numerics.hpp"
#include "refpred/parallel.hpp"
#include "refpred/rng.hpp"

namespace refpred {

std::string Combination::make_id(const SelectorSpec& selector, FeatureVariant variant,
                                 const ClassifierSpec& clf) {
    return "selector=" + selector.name() + "|features=" + feature_variant_name(variant) +
           "|classifier=" + clf.id();
}

std::vector<std::vector<double>> win_rate_table(
    const std::vector<std::vector<double>>& auc_table) {
    const std::size_t K = auc_table.size();
    if (K == 0) throw std::invalid_argument("win_rate_select: empty table");
    if (K < 2) throw std::invalid_argument("win_rate_select: need at least 2 combinations");
    const std::size_t M = auc_table[0].size();
    if (M == 0) throw std::invalid_argument("win_rate_select: no validation LLMs");
    for (const auto& row : auc_table)
        if (row.size() != M) throw std::invalid_argument("win_rate_select: ragged table");

    std::vector<std::vector<double>> rates(K, std::vector<double>(M, 0.0));
    for (std::size_t c = 0; c < K; ++c) {
        for (std::size_t m = 0; m < M; ++m) {
            double wins = 0.0;
            for (std::size_t o = 0; o < K; ++o) {
                if (o == c) continue;
                if (auc_table[o][m] < auc_table[c][m])
                    wins += 1.0;
                else if (auc_table[o][m] == auc_table[c][m])
                    wins += 0.5;
            }
            rates[c][m] = wins / static_cast<double>(K - 1);
        }
    }
    return rates;
}

WinRateSelection win_rate_select(const std::vector<std::vector<double>>& auc_table,
                                 const std::vector<std::string>& combo_ids) {
    if (combo_ids.size() != auc_table.size())
        throw std::invalid_argument("win_rate_select: ids do not match table rows");
    const std::vector<std::vector<double>> rates = win_rate_table(auc_table);
    const std::size_t K = rates.size(), M = rates[0].size();

    WinRateSelection sel;
    sel.mean_win_rate.assign(K, 0.0);
    for (std::size_t c = 0; c < K; ++c) {
        double total = 0.0;
        for (std::size_t m = 0; m < M; ++m) total += rates[c][m];
        sel.mean_win_rate[c] = total / static_cast<double>(M);
    }
    sel.winner = 0;
    for (std::size_t c = 1; c < K; ++c) {
        if (sel.mean_win_rate[c] > sel.mean_win_rate[sel.winner] ||
            (sel.mean_win_rate[c] == sel.mean_win_rate[sel.winner] &&
             combo_ids[c] < combo_ids[sel.winner]))
            sel.winner = c;
    }
    return sel;
}

double mean_of(const std::map<LlmId, double>& m) {
    if (m.empty()) return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (const auto& [_, v] : m) s += v;
    return s / static_cast<double>(m.size());
}

namespace {

void check_partition(const std::vector<std::string>& a, const std::vector<std::string>& b,
                     const std::vector<std::string>& c, const std::vector<std::string>& all,
                     const char* axis) {
    std::set<std::string> seen;
    std::size_t total = 0;
    for (const auto* part : {&a, &b, &c}) {
        if (part->empty())
            throw std::invalid_argument(std::string("run_experiment: empty ") + axis + " split");
        for (const auto& id : *part) {
            if (!seen.insert(id).second)
                throw std::invalid_argument(std::string("run_experiment: ") + axis + " id '" + id +
                                            "' appears in two splits");
            ++total;
        }
    }
    if (total != all.size())
        throw std::invalid_argument(std::string("run_experiment: ") + axis +
                                    " splits do not cover the data");
    for (const auto& id : all)
        if (!seen.count(id))
            throw std::invalid_argument(std::string("run_experiment: ") + axis + " id '" + id +
                                        "' missing from the split plan");
}

bool two_class(const std::vector<std::uint8_t>& y) {
    bool any0 = false, any1 = false;
    for (std::uint8_t v : y) (v ? any1 : any0) = true;
    return any0 && any1;
}

struct PreparedSplit {
    SuccessMatrix train_matrix;
    FeatureStore train_store, val_store, test_store;
    Standardizer standardizer;
    Matrix f_train_std, f_val_std, f_test_std;
    std::map<LlmId, std::vector<std::uint8_t>> val_labels;   // defined val LLMs only
    std::vector<LlmId> defined_val_llms;
    std::vector<LlmId> dropped_val_llms;
};

PreparedSplit prepare_split(const ExperimentInputs& in) {
    check_partition(in.split.train_instances, in.split.val_instances, in.split.test_instances,
                    in.matrix.instance_ids(), "instance");
    check_partition(in.split.train_llms, in.split.val_llms, in.split.test_llms,
                    in.matrix.llm_ids(), "llm");
    PreparedSplit ps;
    ps.train_matrix = in.matrix.submatrix(in.split.train_llms, in.split.train_instances);
    ps.train_store = in.store.subset(in.split.train_instances);
    ps.val_store = in.store.subset(in.split.val_instances);
    ps.test_store = in.store.subset(in.split.test_instances);
    ps.standardizer = Standardizer::fit(ps.train_store.vectors());
    ps.f_train_std = ps.standardizer.apply(ps.train_store.vectors());
    ps.f_val_std = ps.standardizer.apply(ps.val_store.vectors());
    ps.f_test_std = ps.standardizer.apply(ps.test_store.vectors());
    for (const LlmId& llm : in.split.val_llms) {
        std::vector<std::uint8_t> y = in.matrix.row_for(llm, in.split.val_instances);
        if (two_class(y)) {
            ps.val_labels.emplace(llm, std::move(y));
            ps.defined_val_llms.push_back(llm);
        } else {
            ps.dropped_val_llms.push_back(llm);
        }
    }
    if (ps.defined_val_llms.empty())
        throw std::runtime_error("run_experiment: every validation LLM has single-class labels");
    return ps;
}

std::string fmt_auc(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace

EvalReport run_experiment(const ExperimentInputs& inputs, const RunOptions& options) {
    EvalReport report;
    report.tool_version = kToolVersion;
    report.config_digest = options.config_digest;
    report.seed = options.seed;

    const PreparedSplit ps = prepare_split(inputs);
    report.dropped_val_llms = ps.dropped_val_llms;
    for (const LlmId& llm : ps.dropped_val_llms)
        report.warnings.push_back("validation LLM '" + llm +
                                  "' has single-class labels; dropped from selection");

    const std::vector<ClassifierSpec> grid =
        options.classifier_grid.empty() ? default_classifier_grid() : options.classifier_grid;

    // Fit IRT only when a selector consumes item demands.
    std::optional<IrtModel> irt;
    for (const std::string& name : options.selector_names) {
        if (name.find("irt_demands") != std::string::npos) {
            irt = fit_irt(ps.train_matrix, options.irt_k, 1e-2, 500, 1e-5,
                          derive_seed(options.seed, 0x147));
            break;
        }
    }

    // The candidate scorer for random-best-of-20: a single fixed assessor
    // judged by mean validation AUC.
    const auto rbo_evaluate = [&](const ReferenceSet& cand) -> double {
        const GenericAssessor a =
            train_generic_assessor(ps.train_matrix, ps.train_store, cand, options.rbo_variant,
                                   options.rbo_classifier, ps.standardizer);
        double sum = 0.0;
        for (const LlmId& llm : ps.defined_val_llms) {
            const std::vector<std::uint8_t> g = inputs.matrix.row_for(llm, cand.instance_ids);
            sum += auc(predict_llm_on_store(a, g, ps.val_store), ps.val_labels.at(llm));
        }
        return sum / static_cast<double>(ps.defined_val_llms.size());
    };

    // One reference set per selector, seeded from the selector name so the
    // result does not depend on list order.
    std::map<std::string, ReferenceSet> refsets;
    std::vector<std::string> selector_names = options.selector_names;
    std::sort(selector_names.begin(), selector_names.end());
    selector_names.erase(std::unique(selector_names.begin(), selector_names.end()),
                         selector_names.end());
    for (const std::string& name : selector_names) {
        SelectorSpec spec =
            SelectorSpec::parse(name, options.n_ref, derive_seed(options.seed, fnv64(name)));
        SelectorInputs sel_in;
        sel_in.train_matrix = &ps.train_matrix;
        sel_in.train_store = &ps.train_store;
        sel_in.irt = irt ? &*irt : nullptr;
        sel_in.evaluate = rbo_evaluate;
        refsets.emplace(name, run_selector(spec, sel_in));
    }

    // The grid, ordered by combo_id.
    std::vector<Combination> combos;
    for (const std::string& name : selector_names) {
        for (FeatureVariant variant : options.variants) {
            for (const ClassifierSpec& clf : grid) {
                Combination c;
                c.selector =
                    SelectorSpec::parse(name, options.n_ref, derive_seed(options.seed, fnv64(name)));
                c.variant = variant;
                c.clf = clf;
                c.combo_id = Combination::make_id(c.selector, variant, clf);
                combos.push_back(std::move(c));
            }
        }
    }
    std::sort(combos.begin(), combos.end(),
              [](const Combination& a, const Combination& b) { return a.combo_id < b.combo_id; });

    // Train and validate every combination; jobs are independent.
    std::vector<std::map<LlmId, double>> combo_val(combos.size());
    std::vector<std::string> combo_errors(combos.size());
    parallel_for(combos.size(), [&](std::size_t c) {
        try {
            const ReferenceSet& ref = refsets.at(combos[c].selector.name());
            const GenericAssessor assessor =
                train_generic_assessor(ps.train_matrix, ps.train_store, ref, combos[c].variant,
                                       combos[c].clf, ps.standardizer);
            for (const LlmId& llm : ps.defined_val_llms) {
                const std::vector<std::uint8_t> g = inputs.matrix.row_for(llm, ref.instance_ids);
                combo_val[c][llm] =
                    auc(predict_llm_on_store(assessor, g, ps.val_store), ps.val_labels.at(llm));
            }
        } catch (const std::exception& e) {
            combo_errors[c] = e.what();
        }
    });
    for (std::size_t c = 0; c < combos.size(); ++c)
        if (!combo_errors[c].empty())
            throw std::runtime_error("combination '" + combos[c].combo_id +
                                     "': " + combo_errors[c]);

    std::vector<std::vector<double>> auc_table(combos.size());
    std::vector<std::string> combo_ids(combos.size());
    for (std::size_t c = 0; c < combos.size(); ++c) {
        combo_ids[c] = combos[c].combo_id;
        for (const LlmId& llm : ps.defined_val_llms) auc_table[c].push_back(combo_val[c].at(llm));
    }
    // A single-cell grid has nothing to select between.
    WinRateSelection selection;
    if (combos.size() == 1)
        selection.mean_win_rate = {0.5};
    else
        selection = win_rate_select(auc_table, combo_ids);

    report.combos.resize(combos.size());
    for (std::size_t c = 0; c < combos.size(); ++c) {
        report.combos[c].combo = combos[c];
        report.combos[c].val_auc = combo_val[c];
        report.combos[c].mean_win_rate = selection.mean_win_rate[c];
    }
    report.winner_index = selection.winner;
    report.winner_combo_id = combos[selection.winner].combo_id;
    report.winner_mean_win_rate = selection.mean_win_rate[selection.winner];

    // Test-split evaluation of one trained generic assessor: the only new
    // inputs per test LLM are its reference results and its test labels.
    const auto test_eval = [&](const Combination& combo,
                               std::vector<LlmId>* dropped) -> std::map<LlmId, double> {
        const ReferenceSet& ref = refsets.at(combo.selector.name());
        const GenericAssessor assessor = train_generic_assessor(
            ps.train_matrix, ps.train_store, ref, combo.variant, combo.clf, ps.standardizer);
        std::map<LlmId, double> out;
        for (const LlmId& llm : inputs.split.test_llms) {
            const std::vector<std::uint8_t> y =
                inputs.matrix.row_for(llm, inputs.split.test_instances);
            if (!two_class(y)) {
                if (dropped) dropped->push_back(llm);
                continue;
            }
            const std::vector<std::uint8_t> g = inputs.matrix.row_for(llm, ref.instance_ids);
            out[llm] = auc(predict_llm_on_store(assessor, g, ps.test_store), y);
        }
        return out;
    };
    report.generic_test_auc = test_eval(combos[selection.winner], &report.dropped_test_llms);
    for (const LlmId& llm : report.dropped_test_llms)
        report.warnings.push_back("test LLM '" + llm +
                                  "' has single-class labels; AUC undefined");

    // Per-test-LLM specific assessors, grid-selected on that LLM's own
    // validation results.
    for (const LlmId& llm : inputs.split.test_llms) {
        const std::vector<std::uint8_t> y_train =
            inputs.matrix.row_for(llm, inputs.split.train_instances);
        const std::vector<std::uint8_t> y_val =
            inputs.matrix.row_for(llm, inputs.split.val_instances);
        const std::vector<std::uint8_t> y_test =
            inputs.matrix.row_for(llm, inputs.split.test_instances);
        if (!two_class(y_test)) continue;
        const SpecificAssessorResult res =
            train_specific_assessor(ps.f_train_std, y_train, ps.f_val_std, y_val, grid);
        if (res.fallback_warning)
            report.warnings.push_back("specific assessor for '" + llm +
                                      "' fell back to the constant prior");
        report.specific_test_auc[llm] = auc(predict(res.model, ps.f_test_std), y_test);
    }

    // Baseline: the generic pipeline restricted to the random selector.
    {
        std::vector<std::size_t> subset;
        for (std::size_t c = 0; c < combos.size(); ++c)
            if (combos[c].selector.method == SelectorMethod::random) subset.push_back(c);
        if (!subset.empty()) {
            std::vector<std::vector<double>> sub_table;
            std::vector<std::string> sub_ids;
            for (std::size_t c : subset) {
                sub_table.push_back(auc_table[c]);
                sub_ids.push_back(combo_ids[c]);
            }
            std::size_t pick;
            if (sub_ids.size() == 1) {
                pick = subset[0];
            } else {
                const WinRateSelection sub_sel = win_rate_select(sub_table, sub_ids);
                pick = subset[sub_sel.winner];
            }
            report.random_selector_combo_id = combos[pick].combo_id;
            report.random_selector_mean_win_rate = selection.mean_win_rate[pick];
            report.random_selector_test_auc = test_eval(combos[pick], nullptr);
        } else {
            report.warnings.push_back(
                "random selector not in the grid; baseline evaluated separately");
            SelectorSpec spec = SelectorSpec::parse("random", options.n_ref,
                                                    derive_seed(options.seed, fnv64("random")));
            SelectorInputs sel_in;
            sel_in.train_matrix = &ps.train_matrix;
            sel_in.train_store = &ps.train_store;
            refsets.emplace("random", run_selector(spec, sel_in));
            std::vector<Combination> side;
            for (FeatureVariant variant : options.variants)
                for (const ClassifierSpec& clf : grid) {
                    Combination c;
                    c.selector = spec;
                    c.variant = variant;
                    c.clf = clf;
                    c.combo_id = Combination::make_id(spec, variant, clf);
                    side.push_back(std::move(c));
                }
            std::sort(side.begin(), side.end(), [](const Combination& a, const Combination& b) {
                return a.combo_id < b.combo_id;
            });
            std::vector<std::vector<double>> side_table(side.size());
            std::vector<std::string> side_ids(side.size());
            for (std::size_t c = 0; c < side.size(); ++c) {
                side_ids[c] = side[c].combo_id;
                const GenericAssessor assessor =
                    train_generic_assessor(ps.train_matrix, ps.train_store, refsets.at("random"),
                                           side[c].variant, side[c].clf, ps.standardizer);
                for (const LlmId& llm : ps.defined_val_llms) {
                    const std::vector<std::uint8_t> g =
                        inputs.matrix.row_for(llm, refsets.at("random").instance_ids);
                    side_table[c].push_back(
                        auc(predict_llm_on_store(assessor, g, ps.val_store), ps.val_labels.at(llm)));
                }
            }
            const std::size_t pick =
                side.size() == 1 ? 0 : win_rate_select(side_table, side_ids).winner;
            report.random_selector_combo_id = side[pick].combo_id;
            report.random_selector_mean_win_rate = std::numeric_limits<double>::quiet_NaN();
            report.random_selector_test_auc = test_eval(side[pick], nullptr);
        }
    }

    // Baseline: reference only. Candidate (reference set, classifier) pairs
    // are scored on the validation LLMs' reference results, then the chosen
    // pair is refit per test LLM on its own reference results.
    {
        struct RefOnlyCand {
            std::string id;
            std::string selector_name;
            ClassifierSpec clf;
        };
        std::vector<RefOnlyCand> cands;
        for (const std::string& name : selector_names)
            for (const ClassifierSpec& clf : grid)
                cands.push_back({"ref=" + name + "|classifier=" + clf.id(), name, clf});
        std::sort(cands.begin(), cands.end(),
                  [](const RefOnlyCand& a, const RefOnlyCand& b) { return a.id < b.id; });

        std::map<std::string, Matrix> ref_features;  // standardized, per selector
        for (const std::string& name : selector_names) {
            const ReferenceSet& ref = refsets.at(name);
            Matrix rows(ref.instance_ids.size(), ps.f_train_std.cols());
            for (std::size_t r = 0; r < ref.instance_ids.size(); ++r) {
                const std::size_t src = ps.train_store.row_of(ref.instance_ids[r]);
                for (std::size_t j = 0; j < rows.cols(); ++j)
                    rows(r, j) = ps.f_train_std(src, j);
            }
            ref_features.emplace(name, std::move(rows));
        }

        std::vector<std::vector<double>> table(cands.size());
        std::vector<std::string> ids(cands.size());
        for (std::size_t c = 0; c < cands.size(); ++c) {
            ids[c] = cands[c].id;
            const ReferenceSet& ref = refsets.at(cands[c].selector_name);
            const Matrix& rows = ref_features.at(cands[c].selector_name);
            for (const LlmId& llm : ps.defined_val_llms) {
                const std::vector<std::uint8_t> y_ref =
                    inputs.matrix.row_for(llm, ref.instance_ids);
                const TrainedClassifier model = train_reference_only(cands[c].clf, rows, y_ref);
                table[c].push_back(auc(predict(model, ps.f_val_std), ps.val_labels.at(llm)));
            }
        }
        const std::size_t pick = cands.size() == 1 ? 0 : win_rate_select(table, ids).winner;
        const ReferenceSet& ref = refsets.at(cands[pick].selector_name);
        const Matrix& rows = ref_features.at(cands[pick].selector_name);
        for (const LlmId& llm : inputs.split.test_llms) {
            const std::vector<std::uint8_t> y_test =
                inputs.matrix.row_for(llm, inputs.split.test_instances);
            if (!two_class(y_test)) continue;
            const std::vector<std::uint8_t> y_ref = inputs.matrix.row_for(llm, ref.instance_ids);
            const TrainedClassifier model = train_reference_only(cands[pick].clf, rows, y_ref);
            if (model.fallback_warning)
                report.warnings.push_back("reference-only baseline for '" + llm +
                                          "' fell back to the constant prior");
            report.reference_only_test_auc[llm] = auc(predict(model, ps.f_test_std), y_test);
        }
    }

    // Baseline: one pooled assessor on all train data, intrinsic features
    // only, classifier chosen by validation win rate.
    // TODO: fold duplicated instance rows into weighted rows so this
    // baseline does not materialize the n_llms * n_instances design matrix.
    {
        std::vector<std::vector<double>> table(grid.size());
        std::vector<std::string> ids(grid.size());
        std::vector<TrainedClassifier> models(grid.size());
        for (std::size_t c = 0; c < grid.size(); ++c) {
            ids[c] = grid[c].id();
            models[c] = train_all_train_baseline(grid[c], ps.train_matrix, ps.f_train_std);
            const std::vector<double> preds = predict(models[c], ps.f_val_std);
            for (const LlmId& llm : ps.defined_val_llms)
                table[c].push_back(auc(preds, ps.val_labels.at(llm)));
        }
        const std::size_t pick = grid.size() == 1 ? 0 : win_rate_select(table, ids).winner;
        const std::vector<double> preds = predict(models[pick], ps.f_test_std);
        for (const LlmId& llm : inputs.split.test_llms) {
            const std::vector<std::uint8_t> y_test =
                inputs.matrix.row_for(llm, inputs.split.test_instances);
            if (!two_class(y_test)) continue;
            report.all_train_test_auc[llm] = auc(preds, y_test);
        }
    }

    return report;
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json j;
    j["tool_version"] = tool_version;
    j["config_digest"] = config_digest;
    j["seed"] = seed;
    nlohmann::json combos_json = nlohmann::json::array();
    for (const ComboOutcome& c : combos) {
        nlohmann::json cj;
        cj["combo_id"] = c.combo.combo_id;
        cj["selector"] = c.combo.selector.name();
        cj["features"] = feature_variant_name(c.combo.variant);
        cj["classifier"] = c.combo.clf.id();
        cj["val_auc"] = c.val_auc;
        cj["mean_win_rate"] = c.mean_win_rate;
        combos_json.push_back(std::move(cj));
    }
    j["combinations"] = std::move(combos_json);
    j["winner"] = winner_combo_id;
    j["winner_mean_win_rate"] = winner_mean_win_rate;
    j["test_auc"] = {
        {"generic", generic_test_auc},
        {"specific", specific_test_auc},
        {"random_selector", random_selector_test_auc},
        {"reference_only", reference_only_test_auc},
        {"all_train_data", all_train_test_auc},
    };
    j["random_selector_combo"] = random_selector_combo_id;
    if (std::isfinite(random_selector_mean_win_rate))
        j["random_selector_mean_win_rate"] = random_selector_mean_win_rate;
    j["dropped_val_llms"] = dropped_val_llms;
    j["dropped_test_llms"] = dropped_test_llms;
    j["warnings"] = warnings;
    return j;
}

std::string EvalReport::to_csv() const {
    std::ostringstream os;
    os << "# config_digest=" << config_digest << " tool_version=" << tool_version << "\n";
    os << "combo_id,llm_id,split,auc\n";
    for (const ComboOutcome& c : combos)
        for (const auto& [llm, v] : c.val_auc)
            os << c.combo.combo_id << ',' << llm << ",val," << fmt_auc(v) << "\n";
    const auto emit = [&](const std::string& id, const std::map<LlmId, double>& m) {
        for (const auto& [llm, v] : m) os << id << ',' << llm << ",test," << fmt_auc(v) << "\n";
    };
    emit(winner_combo_id, generic_test_auc);
    emit("specific", specific_test_auc);
    emit("baseline:random_selector", random_selector_test_auc);
    emit("baseline:reference_only", reference_only_test_auc);
    emit("baseline:all_train_data", all_train_test_auc);
    return os.str();
}

SyntheticWorld generate_synthetic_world(const SyntheticConfig& config) {
    const std::size_t n = config.n_llms(), N = config.n_instances(), k = config.k;
    if (n == 0 || N == 0 || k == 0)
        throw std::invalid_argument("generate_synthetic_world: sizes must be positive");

    SyntheticWorld world;
    Rng rng(config.seed);

    std::vector<LlmId> llm_ids(n);
    for (std::size_t j = 0; j < n; ++j) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "llm%03zu", j);
        llm_ids[j] = buf;
    }
    std::vector<InstanceId> instance_ids(N);
    for (std::size_t i = 0; i < N; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "inst%06zu", i);
        instance_ids[i] = buf;
    }

    world.capabilities = Matrix(n, k);
    for (double& v : world.capabilities.storage()) v = config.latent_scale * rng.normal();
    world.demands = Matrix(N, k);
    for (double& v : world.demands.storage()) v = config.latent_scale * rng.normal();
    world.intercepts.resize(N);
    for (double& v : world.intercepts) v = config.latent_scale * rng.normal();

    world.true_probs = Matrix(n, N);
    std::vector<std::uint8_t> z(n * N);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < N; ++i) {
            double logit = world.intercepts[i];
            for (std::size_t t = 0; t < k; ++t)
                logit += world.capabilities(j, t) * world.demands(i, t);
            const double p = 1.0 / (1.0 + std::exp(-logit));
            world.true_probs(j, i) = p;
            z[j * N + i] = rng.bernoulli(p) ? 1 : 0;
        }
    }
    world.matrix = SuccessMatrix(llm_ids, instance_ids, std::move(z));

    // Instance features: the latent demands and intercept, observed noisily.
    Matrix feats(N, k + 1);
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t t = 0; t < k; ++t)
            feats(i, t) = world.demands(i, t) + config.noise * rng.normal();
        feats(i, k) = world.intercepts[i] + config.noise * rng.normal();
    }
    world.store = FeatureStore(instance_ids, std::move(feats),
                               std::vector<std::string>(N, "synthetic"));

    // Consecutive blocks; every draw above is iid so the cut is unbiased.
    world.split.seed = config.seed;
    world.split.mode = {{"kind", "synthetic_blocks"}};
    world.split.train_instances.assign(instance_ids.begin(),
                                       instance_ids.begin() + config.train_instances);
    world.split.val_instances.assign(
        instance_ids.begin() + config.train_instances,
        instance_ids.begin() + config.train_instances + config.val_instances);
    world.split.test_instances.assign(
        instance_ids.begin() + config.train_instances + config.val_instances,
        instance_ids.end());
    world.split.train_llms.assign(llm_ids.begin(), llm_ids.begin() + config.train_llms);
    world.split.val_llms.assign(llm_ids.begin() + config.train_llms,
                                llm_ids.begin() + config.train_llms + config.val_llms);
    world.split.test_llms.assign(llm_ids.begin() + config.train_llms + config.val_llms,
                                 llm_ids.end());
    return world;
}

nlohmann::json SyntheticWorld::truth_to_json() const {
    nlohmann::json j;
    nlohmann::json caps = nlohmann::json::array();
    for (std::size_t r = 0; r < capabilities.rows(); ++r)
        caps.push_back(std::vector<double>(capabilities.row_ptr(r),
                                           capabilities.row_ptr(r) + capabilities.cols()));
    j["capabilities"] = std::move(caps);
    nlohmann::json dem = nlohmann::json::array();
    for (std::size_t r = 0; r < demands.rows(); ++r)
        dem.push_back(
            std::vector<double>(demands.row_ptr(r), demands.row_ptr(r) + demands.cols()));
    j["demands"] = std::move(dem);
    j["intercepts"] = intercepts;
    nlohmann::json probs = nlohmann::json::array();
    for (std::size_t r = 0; r < true_probs.rows(); ++r)
        probs.push_back(
            std::vector<double>(true_probs.row_ptr(r), true_probs.row_ptr(r) + true_probs.cols()));
    j["true_probs"] = std::move(probs);
    j["llm_ids"] = matrix.llm_ids();
    j["instance_ids"] = matrix.instance_ids();
    return j;
}

double bayes_auc(const SyntheticWorld& world, const LlmId& llm,
                 const std::vector<InstanceId>& instances) {
    const std::size_t row = world.matrix.llm_row(llm);
    std::vector<double> scores(instances.size());
    std::vector<std::uint8_t> labels(instances.size());
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const std::size_t col = world.matrix.instance_col(instances[i]);
        scores[i] = world.true_probs(row, col);
        labels[i] = world.matrix.at(row, col);
    }
    return auc(scores, labels);
}

std::vector<SweepRow> sweep_n_ref(const ExperimentInputs& inputs, const RunOptions& options,
                                  const std::vector<std::size_t>& n_ref_list) {
    if (n_ref_list.empty()) throw std::invalid_argument("sweep_n_ref: empty n_ref list");
    std::vector<SweepRow> rows;
    for (std::size_t n_ref : n_ref_list) {
        RunOptions opt = options;
        opt.n_ref = n_ref;
        const EvalReport report = run_experiment(inputs, opt);
        SweepRow row;
        row.n_ref = n_ref;
        row.winner_combo_id = report.winner_combo_id;
        row.generic_test_auc = mean_of(report.generic_test_auc);
        row.specific_test_auc = mean_of(report.specific_test_auc);
        row.reference_only_test_auc = mean_of(report.reference_only_test_auc);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows, const std::string& config_digest) {
    std::ostringstream os;
    os << "# config_digest=" << config_digest << " tool_version=" << kToolVersion << "\n";
    os << "n_ref,winner,generic_test_auc,specific_test_auc,reference_only_test_auc\n";
    for (const SweepRow& r : rows)
        os << r.n_ref << ',' << r.winner_combo_id << ',' << fmt_auc(r.generic_test_auc) << ','
           << fmt_auc(r.specific_test_auc) << ',' << fmt_auc(r.reference_only_test_auc) << "\n";
    return os.str();
}

}  // namespace refpred
