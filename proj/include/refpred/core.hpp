#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "refpred/matrix.hpp"

namespace refpred {

using InstanceId = std::string;
using LlmId = std::string;

// Binary success outcomes, one row per LLM, one column per instance.
class SuccessMatrix {
public:
    SuccessMatrix() = default;
    SuccessMatrix(std::vector<LlmId> llm_ids, std::vector<InstanceId> instance_ids,
                  std::vector<std::uint8_t> values);

    std::size_t n_llms() const { return llm_ids_.size(); }
    std::size_t n_instances() const { return instance_ids_.size(); }
    const std::vector<LlmId>& llm_ids() const { return llm_ids_; }
    const std::vector<InstanceId>& instance_ids() const { return instance_ids_; }
    const std::vector<std::uint8_t>& values() const { return values_; }

    std::uint8_t at(std::size_t llm_row, std::size_t instance_col) const {
        return values_[llm_row * instance_ids_.size() + instance_col];
    }

    std::size_t llm_row(const LlmId& id) const;
    std::size_t instance_col(const InstanceId& id) const;
    bool has_llm(const LlmId& id) const { return llm_index_.count(id) > 0; }
    bool has_instance(const InstanceId& id) const { return instance_index_.count(id) > 0; }

    // Row of one LLM restricted to the given instances, in the given order.
    std::vector<std::uint8_t> row_for(const LlmId& id,
                                      const std::vector<InstanceId>& instances) const;

    SuccessMatrix submatrix(const std::vector<LlmId>& llms,
                            const std::vector<InstanceId>& instances) const;

private:
    std::vector<LlmId> llm_ids_;
    std::vector<InstanceId> instance_ids_;
    std::vector<std::uint8_t> values_;
    std::map<LlmId, std::size_t> llm_index_;
    std::map<InstanceId, std::size_t> instance_index_;
};

// Per-instance dense feature vectors plus the source-dataset label.
class FeatureStore {
public:
    FeatureStore() = default;
    FeatureStore(std::vector<InstanceId> instance_ids, Matrix vectors,
                 std::vector<std::string> dataset_labels);

    std::size_t size() const { return instance_ids_.size(); }
    std::size_t dim() const { return vectors_.cols(); }
    const std::vector<InstanceId>& instance_ids() const { return instance_ids_; }
    const Matrix& vectors() const { return vectors_; }
    const std::vector<std::string>& dataset_labels() const { return dataset_labels_; }

    std::size_t row_of(const InstanceId& id) const;
    bool has(const InstanceId& id) const { return index_.count(id) > 0; }
    const double* row_ptr(std::size_t i) const { return vectors_.row_ptr(i); }
    std::vector<double> row_vec(std::size_t i) const;

    // Rows for the given ids, in the given order.
    FeatureStore subset(const std::vector<InstanceId>& ids) const;

private:
    std::vector<InstanceId> instance_ids_;
    Matrix vectors_;
    std::vector<std::string> dataset_labels_;
    std::map<InstanceId, std::size_t> index_;
};

enum class SplitModeKind { random_fraction, ood_by_dataset };

struct SplitMode {
    SplitModeKind kind = SplitModeKind::random_fraction;
    double train_frac = 0.8;   // random mode
    double val_frac = 0.1;
    std::vector<std::string> test_datasets;  // ood mode
    double ood_train_frac = 0.9;  // split of the non-test remainder
    double ood_val_frac = 0.1;
    double llm_train_frac = 0.8;  // LLM axis is always split randomly
    double llm_val_frac = 0.1;
};

struct SplitPlan {
    std::vector<InstanceId> train_instances, val_instances, test_instances;
    std::vector<LlmId> train_llms, val_llms, test_llms;
    std::uint64_t seed = 0;
    nlohmann::json mode;  // serialized SplitMode

    nlohmann::json to_json() const;
    static SplitPlan from_json(const nlohmann::json& j);
};

nlohmann::json split_mode_to_json(const SplitMode& mode);
SplitMode split_mode_from_json(const nlohmann::json& j);

// Disjoint train/val/test partition of instances and LLMs. Random mode
// shuffles and cuts by fraction (train and val get the floor, test the
// remainder); ood mode sends every instance of the named datasets to test
// and splits the remainder randomly.
SplitPlan make_split(const std::vector<InstanceId>& instance_ids,
                     const std::vector<std::string>& dataset_labels,
                     const std::vector<LlmId>& llm_ids, const SplitMode& mode,
                     std::uint64_t seed);

struct ReferenceSet {
    std::vector<InstanceId> instance_ids;
    std::string selector_name;
    std::string selector_config_digest;

    nlohmann::json to_json(std::size_t n_ref, std::uint64_t seed) const;
};

// Reorders both structures to the shared lexicographic instance order and
// restricts the store to the matrix's instances. Throws if the store is
// missing any matrix instance. Idempotent.
std::pair<SuccessMatrix, FeatureStore> align(const SuccessMatrix& matrix,
                                             const FeatureStore& store);

}  // namespace refpred
