#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "refpred/assessors.hpp"
#include "refpred/core.hpp"
#include "refpred/irt.hpp"
#include "refpred/selectors.hpp"

namespace refpred {

inline constexpr const char* kToolVersion = "0.1.0";

// One grid cell: a reference-set selector, a pair-feature variant, and a
// classifier configuration. The id is the lexicographic join of the parts.
struct Combination {
    SelectorSpec selector;
    FeatureVariant variant = FeatureVariant::embeddings;
    ClassifierSpec clf;
    std::string combo_id;

    static std::string make_id(const SelectorSpec& selector, FeatureVariant variant,
                               const ClassifierSpec& clf);
};

struct WinRateSelection {
    std::vector<double> mean_win_rate;  // per combination, averaged over LLM columns
    std::size_t winner = 0;             // argmax; ties go to the lowest combo_id
};

// Per-(combination, LLM) win rates: strictly worse competitors count one,
// ties count half, normalized by K-1. The mean across combinations is 0.5
// in every column by pairwise symmetry.
std::vector<std::vector<double>> win_rate_table(
    const std::vector<std::vector<double>>& auc_table);

// auc_table[c][m] is combination c's AUC for validation LLM m.
WinRateSelection win_rate_select(const std::vector<std::vector<double>>& auc_table,
                                 const std::vector<std::string>& combo_ids);

struct RunOptions {
    std::vector<std::string> selector_names = {"random"};
    std::vector<FeatureVariant> variants = {FeatureVariant::embeddings};
    std::vector<ClassifierSpec> classifier_grid;  // empty = default grid
    std::size_t n_ref = 100;
    std::uint64_t seed = 0;
    std::size_t irt_k = 10;
    // Scoring setup for the random-best-of-20 selector's inner assessor.
    ClassifierSpec rbo_classifier;
    FeatureVariant rbo_variant = FeatureVariant::embeddings;
    std::string config_digest;
};

struct ExperimentInputs {
    SuccessMatrix matrix;  // all LLMs x all instances, aligned with the store
    FeatureStore store;
    SplitPlan split;
};

struct ComboOutcome {
    Combination combo;
    std::map<LlmId, double> val_auc;  // defined validation LLMs only
    double mean_win_rate = 0.0;
};

struct EvalReport {
    std::string tool_version;
    std::string config_digest;
    std::uint64_t seed = 0;
    std::vector<ComboOutcome> combos;  // ordered by combo_id
    std::string winner_combo_id;
    std::size_t winner_index = 0;
    double winner_mean_win_rate = 0.0;

    std::map<LlmId, double> generic_test_auc;
    std::map<LlmId, double> specific_test_auc;
    std::map<LlmId, double> random_selector_test_auc;
    std::map<LlmId, double> reference_only_test_auc;
    std::map<LlmId, double> all_train_test_auc;

    std::string random_selector_combo_id;
    // Full-table mean win rate of the random-selector baseline's pick.
    double random_selector_mean_win_rate = 0.0;

    std::vector<LlmId> dropped_val_llms;   // undefined validation AUC
    std::vector<LlmId> dropped_test_llms;  // undefined test AUC
    std::vector<std::string> warnings;

    nlohmann::json to_json() const;
    std::string to_csv() const;  // combo_id,llm_id,split,auc
};

double mean_of(const std::map<LlmId, double>& m);

// Trains every combination on the train split, selects by validation
// win rate, and reports test AUCs for the winner, the per-LLM specific
// assessors, and the three baselines. Deterministic for fixed seeds.
EvalReport run_experiment(const ExperimentInputs& inputs, const RunOptions& options);

struct SyntheticConfig {
    std::size_t train_llms = 20, val_llms = 4, test_llms = 4;
    std::size_t train_instances = 2000, val_instances = 400, test_instances = 400;
    std::size_t k = 5;
    double noise = 0.1;
    double latent_scale = 1.0;  // scales capabilities, demands, and intercepts
    std::uint64_t seed = 0;

    std::size_t n_llms() const { return train_llms + val_llms + test_llms; }
    std::size_t n_instances() const {
        return train_instances + val_instances + test_instances;
    }
};

struct SyntheticWorld {
    SuccessMatrix matrix;
    FeatureStore store;  // instance features: latent demands and intercept plus noise
    SplitPlan split;
    Matrix capabilities;             // ground truth, n x k
    Matrix demands;                  // ground truth, N x k
    std::vector<double> intercepts;  // ground truth, length N
    Matrix true_probs;               // n x N Bernoulli means

    nlohmann::json truth_to_json() const;
};

// Draws capabilities, demands, and intercepts from standard normals,
// success bits from the induced Bernoulli means, and instance features as
// the noisy latent parameters. The split takes consecutive id blocks.
SyntheticWorld generate_synthetic_world(const SyntheticConfig& config);

// AUC of the true success probabilities against the realized outcomes:
// the ranking no feature-based assessor can beat in expectation.
double bayes_auc(const SyntheticWorld& world, const LlmId& llm,
                 const std::vector<InstanceId>& instances);

struct SweepRow {
    std::size_t n_ref = 0;
    std::string winner_combo_id;
    double generic_test_auc = 0.0;   // mean over defined test LLMs
    double specific_test_auc = 0.0;
    double reference_only_test_auc = 0.0;
};

std::vector<SweepRow> sweep_n_ref(const ExperimentInputs& inputs, const RunOptions& options,
                                  const std::vector<std::size_t>& n_ref_list);

std::string sweep_to_csv(const std::vector<SweepRow>& rows, const std::string& config_digest);

}  // namespace refpred
