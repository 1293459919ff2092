#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "refpred/core.hpp"
#include "refpred/irt.hpp"
#include "refpred/matrix.hpp"

namespace refpred {

enum class FeatureSource { intrinsic_features, success_columns, irt_demands };
enum class SelectorMethod { clustering, factor_analysis, random, random_best_of_20 };

std::string feature_source_name(FeatureSource s);
FeatureSource feature_source_from_name(const std::string& name);
std::string selector_method_name(SelectorMethod m);

struct SelectorSpec {
    SelectorMethod method = SelectorMethod::random;
    FeatureSource feature_source = FeatureSource::intrinsic_features;  // ignored by random methods
    std::size_t n_ref = 100;
    std::uint64_t seed = 0;

    // "random", "clustering:success_columns", "factor_analysis:irt_demands", ...
    std::string name() const;
    static SelectorSpec parse(const std::string& name, std::size_t n_ref, std::uint64_t seed);
};

// Feature matrix with one column per train instance: intrinsic features
// (d x N), raw success columns (n_train x N), or fitted item demands (k x N).
Matrix build_feature_matrix(FeatureSource source, const SuccessMatrix& train_matrix,
                            const FeatureStore& train_store, const IrtModel* irt);

// KMeans with k = n_ref on the instance columns; one medoid id per cluster.
// An empty cluster triggers a single re-seed before giving up.
ReferenceSet select_by_clustering(const Matrix& X, const std::vector<InstanceId>& ids,
                                  std::size_t n_ref, std::uint64_t seed);

// Kaiser count l, maximum-likelihood FA, varimax rotation, then per-factor
// top-|score| picks with an even allocation (earlier factors get the extra).
ReferenceSet select_by_factor_analysis(const Matrix& X, const std::vector<InstanceId>& ids,
                                       std::size_t n_ref);

ReferenceSet select_random(const std::vector<InstanceId>& train_ids, std::size_t n_ref,
                           std::uint64_t seed);

// Twenty seeded random draws scored by the callback (higher is better);
// ties return the lowest draw index.
ReferenceSet select_random_best_of_20(
    const std::vector<InstanceId>& train_ids, std::size_t n_ref, std::uint64_t seed,
    const std::function<double(const ReferenceSet&)>& evaluate);

// Per-factor pick counts: sum is n_ref, spread differs by at most one, and
// the first (n_ref mod l) factors take the larger share.
std::vector<std::size_t> allocate_factor_counts(std::size_t n_ref, std::size_t l);

struct SelectorInputs {
    const SuccessMatrix* train_matrix = nullptr;   // L^train x D^train
    const FeatureStore* train_store = nullptr;     // D^train rows
    const IrtModel* irt = nullptr;                 // required for irt_demands
    std::function<double(const ReferenceSet&)> evaluate;  // required for random_best_of_20
};

ReferenceSet run_selector(const SelectorSpec& spec, const SelectorInputs& inputs);

}  // namespace refpred
