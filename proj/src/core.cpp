#include "refpred/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "refpred/rng.hpp"

namespace refpred {

SuccessMatrix::SuccessMatrix(std::vector<LlmId> llm_ids, std::vector<InstanceId> instance_ids,
                             std::vector<std::uint8_t> values)
    : llm_ids_(std::move(llm_ids)),
      instance_ids_(std::move(instance_ids)),
      values_(std::move(values)) {
    if (values_.size() != llm_ids_.size() * instance_ids_.size())
        throw std::invalid_argument("SuccessMatrix: value count does not match id axes");
    for (std::uint8_t v : values_)
        if (v > 1) throw std::invalid_argument("SuccessMatrix: cells must be 0 or 1");
    for (std::size_t j = 0; j < llm_ids_.size(); ++j) {
        if (llm_ids_[j].empty()) throw std::invalid_argument("SuccessMatrix: empty llm id");
        if (!llm_index_.emplace(llm_ids_[j], j).second)
            throw std::invalid_argument("SuccessMatrix: duplicate llm id '" + llm_ids_[j] + "'");
    }
    for (std::size_t i = 0; i < instance_ids_.size(); ++i) {
        if (instance_ids_[i].empty())
            throw std::invalid_argument("SuccessMatrix: empty instance id");
        if (!instance_index_.emplace(instance_ids_[i], i).second)
            throw std::invalid_argument("SuccessMatrix: duplicate instance id '" +
                                        instance_ids_[i] + "'");
    }
}

std::size_t SuccessMatrix::llm_row(const LlmId& id) const {
    const auto it = llm_index_.find(id);
    if (it == llm_index_.end())
        throw std::invalid_argument("SuccessMatrix: unknown llm id '" + id + "'");
    return it->second;
}

std::size_t SuccessMatrix::instance_col(const InstanceId& id) const {
    const auto it = instance_index_.find(id);
    if (it == instance_index_.end())
        throw std::invalid_argument("SuccessMatrix: unknown instance id '" + id + "'");
    return it->second;
}

std::vector<std::uint8_t> SuccessMatrix::row_for(
    const LlmId& id, const std::vector<InstanceId>& instances) const {
    const std::size_t row = llm_row(id);
    std::vector<std::uint8_t> out(instances.size());
    for (std::size_t i = 0; i < instances.size(); ++i)
        out[i] = at(row, instance_col(instances[i]));
    return out;
}

SuccessMatrix SuccessMatrix::submatrix(const std::vector<LlmId>& llms,
                                       const std::vector<InstanceId>& instances) const {
    std::vector<std::uint8_t> vals(llms.size() * instances.size());
    std::vector<std::size_t> cols(instances.size());
    for (std::size_t i = 0; i < instances.size(); ++i) cols[i] = instance_col(instances[i]);
    for (std::size_t j = 0; j < llms.size(); ++j) {
        const std::size_t row = llm_row(llms[j]);
        for (std::size_t i = 0; i < instances.size(); ++i)
            vals[j * instances.size() + i] = at(row, cols[i]);
    }
    return SuccessMatrix(llms, instances, std::move(vals));
}

FeatureStore::FeatureStore(std::vector<InstanceId> instance_ids, Matrix vectors,
                           std::vector<std::string> dataset_labels)
    : instance_ids_(std::move(instance_ids)),
      vectors_(std::move(vectors)),
      dataset_labels_(std::move(dataset_labels)) {
    if (vectors_.rows() != instance_ids_.size() || dataset_labels_.size() != instance_ids_.size())
        throw std::invalid_argument("FeatureStore: row count does not match ids");
    if (!instance_ids_.empty() && vectors_.cols() < 1)
        throw std::invalid_argument("FeatureStore: dimension must be at least 1");
    if (!vectors_.all_finite())
        throw std::invalid_argument("FeatureStore: non-finite feature value");
    for (std::size_t i = 0; i < instance_ids_.size(); ++i) {
        if (instance_ids_[i].empty()) throw std::invalid_argument("FeatureStore: empty id");
        if (!index_.emplace(instance_ids_[i], i).second)
            throw std::invalid_argument("FeatureStore: duplicate instance id '" +
                                        instance_ids_[i] + "'");
    }
}

std::size_t FeatureStore::row_of(const InstanceId& id) const {
    const auto it = index_.find(id);
    if (it == index_.end())
        throw std::invalid_argument("FeatureStore: unknown instance id '" + id + "'");
    return it->second;
}

std::vector<double> FeatureStore::row_vec(std::size_t i) const {
    return std::vector<double>(vectors_.row_ptr(i), vectors_.row_ptr(i) + vectors_.cols());
}

FeatureStore FeatureStore::subset(const std::vector<InstanceId>& ids) const {
    Matrix m(ids.size(), dim());
    std::vector<std::string> labels(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const std::size_t r = row_of(ids[i]);
        for (std::size_t j = 0; j < dim(); ++j) m(i, j) = vectors_(r, j);
        labels[i] = dataset_labels_[r];
    }
    return FeatureStore(ids, std::move(m), std::move(labels));
}

nlohmann::json split_mode_to_json(const SplitMode& mode) {
    nlohmann::json j;
    if (mode.kind == SplitModeKind::random_fraction) {
        j["kind"] = "random_fraction";
        j["train_frac"] = mode.train_frac;
        j["val_frac"] = mode.val_frac;
    } else {
        j["kind"] = "ood_by_dataset";
        j["test_datasets"] = mode.test_datasets;
        j["ood_train_frac"] = mode.ood_train_frac;
        j["ood_val_frac"] = mode.ood_val_frac;
    }
    j["llm_train_frac"] = mode.llm_train_frac;
    j["llm_val_frac"] = mode.llm_val_frac;
    return j;
}

SplitMode split_mode_from_json(const nlohmann::json& j) {
    SplitMode mode;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "random_fraction") {
        mode.kind = SplitModeKind::random_fraction;
        mode.train_frac = j.value("train_frac", 0.8);
        mode.val_frac = j.value("val_frac", 0.1);
    } else if (kind == "ood_by_dataset") {
        mode.kind = SplitModeKind::ood_by_dataset;
        mode.test_datasets = j.at("test_datasets").get<std::vector<std::string>>();
        mode.ood_train_frac = j.value("ood_train_frac", 0.9);
        mode.ood_val_frac = j.value("ood_val_frac", 0.1);
    } else {
        throw std::invalid_argument("split mode: unknown kind '" + kind + "'");
    }
    mode.llm_train_frac = j.value("llm_train_frac", 0.8);
    mode.llm_val_frac = j.value("llm_val_frac", 0.1);
    return mode;
}

nlohmann::json SplitPlan::to_json() const {
    nlohmann::json j;
    j["train_instances"] = train_instances;
    j["val_instances"] = val_instances;
    j["test_instances"] = test_instances;
    j["train_llms"] = train_llms;
    j["val_llms"] = val_llms;
    j["test_llms"] = test_llms;
    j["seed"] = seed;
    j["mode"] = mode;
    return j;
}

SplitPlan SplitPlan::from_json(const nlohmann::json& j) {
    SplitPlan plan;
    plan.train_instances = j.at("train_instances").get<std::vector<InstanceId>>();
    plan.val_instances = j.at("val_instances").get<std::vector<InstanceId>>();
    plan.test_instances = j.at("test_instances").get<std::vector<InstanceId>>();
    plan.train_llms = j.at("train_llms").get<std::vector<LlmId>>();
    plan.val_llms = j.at("val_llms").get<std::vector<LlmId>>();
    plan.test_llms = j.at("test_llms").get<std::vector<LlmId>>();
    plan.seed = j.at("seed").get<std::uint64_t>();
    plan.mode = j.value("mode", nlohmann::json::object());
    return plan;
}

namespace {

void check_unique(const std::vector<std::string>& ids, const char* what) {
    std::set<std::string> seen;
    for (const auto& id : ids) {
        if (id.empty()) throw std::invalid_argument(std::string("make_split: empty ") + what);
        if (!seen.insert(id).second)
            throw std::invalid_argument(std::string("make_split: duplicate ") + what + " '" + id +
                                        "'");
    }
}

// Shuffle then cut: train and val take the floors, test the remainder.
void cut_three(std::vector<std::string> ids, double train_frac, double val_frac, Rng& rng,
               std::vector<std::string>& train, std::vector<std::string>& val,
               std::vector<std::string>& test, const char* what) {
    rng.shuffle(ids);
    const std::size_t n = ids.size();
    const std::size_t n_train = static_cast<std::size_t>(std::floor(train_frac * static_cast<double>(n)));
    const std::size_t n_val = static_cast<std::size_t>(std::floor(val_frac * static_cast<double>(n)));
    if (n_train == 0 || n_val == 0 || n_train + n_val >= n)
        throw std::invalid_argument(std::string("make_split: empty ") + what +
                                    " split for these fractions");
    train.assign(ids.begin(), ids.begin() + n_train);
    val.assign(ids.begin() + n_train, ids.begin() + n_train + n_val);
    test.assign(ids.begin() + n_train + n_val, ids.end());
}

// LLM collections are small (tens), so val and test are guaranteed at
// least one member each before the floors apply.
void cut_llms(std::vector<std::string> ids, double train_frac, double val_frac, Rng& rng,
              std::vector<std::string>& train, std::vector<std::string>& val,
              std::vector<std::string>& test) {
    rng.shuffle(ids);
    const std::size_t n = ids.size();
    const std::size_t n_val = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(val_frac * static_cast<double>(n))));
    const std::size_t n_test = std::max<std::size_t>(
        1, static_cast<std::size_t>(
               std::floor((1.0 - train_frac - val_frac) * static_cast<double>(n))));
    if (n_val + n_test >= n)
        throw std::invalid_argument("make_split: not enough llms for three non-empty splits");
    const std::size_t n_train = n - n_val - n_test;
    train.assign(ids.begin(), ids.begin() + n_train);
    val.assign(ids.begin() + n_train, ids.begin() + n_train + n_val);
    test.assign(ids.begin() + n_train + n_val, ids.end());
}

void cut_two(std::vector<std::string> ids, double train_frac, Rng& rng,
             std::vector<std::string>& train, std::vector<std::string>& val) {
    rng.shuffle(ids);
    const std::size_t n = ids.size();
    const std::size_t n_train = static_cast<std::size_t>(std::floor(train_frac * static_cast<double>(n)));
    if (n_train == 0 || n_train >= n)
        throw std::invalid_argument("make_split: empty train or val split in ood mode");
    train.assign(ids.begin(), ids.begin() + n_train);
    val.assign(ids.begin() + n_train, ids.end());
}

}  // namespace

SplitPlan make_split(const std::vector<InstanceId>& instance_ids,
                     const std::vector<std::string>& dataset_labels,
                     const std::vector<LlmId>& llm_ids, const SplitMode& mode,
                     std::uint64_t seed) {
    if (instance_ids.size() != dataset_labels.size())
        throw std::invalid_argument("make_split: labels do not match instances");
    check_unique(instance_ids, "instance id");
    check_unique(llm_ids, "llm id");

    SplitPlan plan;
    plan.seed = seed;
    plan.mode = split_mode_to_json(mode);

    Rng inst_rng(derive_seed(seed, 1));
    Rng llm_rng(derive_seed(seed, 2));

    if (mode.kind == SplitModeKind::random_fraction) {
        if (!(mode.train_frac > 0.0 && mode.val_frac > 0.0 &&
              mode.train_frac + mode.val_frac < 1.0))
            throw std::invalid_argument(
                "make_split: fractions must be in (0,1) with train+val < 1");
        cut_three(instance_ids, mode.train_frac, mode.val_frac, inst_rng, plan.train_instances,
                  plan.val_instances, plan.test_instances, "instance");
    } else {
        if (mode.test_datasets.empty())
            throw std::invalid_argument("make_split: ood mode needs test datasets");
        std::set<std::string> known(dataset_labels.begin(), dataset_labels.end());
        std::set<std::string> test_set(mode.test_datasets.begin(), mode.test_datasets.end());
        for (const auto& name : test_set)
            if (!known.count(name))
                throw std::invalid_argument("make_split: unknown dataset '" + name + "'");
        if (test_set.size() >= known.size())
            throw std::invalid_argument(
                "make_split: test datasets must be a proper subset of all datasets");
        std::vector<InstanceId> rest;
        for (std::size_t i = 0; i < instance_ids.size(); ++i) {
            if (test_set.count(dataset_labels[i]))
                plan.test_instances.push_back(instance_ids[i]);
            else
                rest.push_back(instance_ids[i]);
        }
        if (plan.test_instances.empty())
            throw std::invalid_argument("make_split: no instances in the test datasets");
        cut_two(std::move(rest), mode.ood_train_frac / (mode.ood_train_frac + mode.ood_val_frac),
                inst_rng, plan.train_instances, plan.val_instances);
    }

    cut_llms(llm_ids, mode.llm_train_frac, mode.llm_val_frac, llm_rng, plan.train_llms,
             plan.val_llms, plan.test_llms);
    return plan;
}

nlohmann::json ReferenceSet::to_json(std::size_t n_ref, std::uint64_t seed) const {
    nlohmann::json j;
    j["selector"] = selector_name;
    j["n_ref"] = n_ref;
    j["instance_ids"] = instance_ids;
    j["seed"] = seed;
    j["selector_config_digest"] = selector_config_digest;
    return j;
}

std::pair<SuccessMatrix, FeatureStore> align(const SuccessMatrix& matrix,
                                             const FeatureStore& store) {
    if (store.size() > 0 && store.dim() == 0)
        throw std::invalid_argument("align: dimension-zero feature store");
    std::vector<InstanceId> missing;
    for (const auto& id : matrix.instance_ids())
        if (!store.has(id)) missing.push_back(id);
    if (!missing.empty()) {
        std::string msg = "align: feature store is missing instance ids:";
        for (const auto& id : missing) msg += " '" + id + "'";
        throw std::invalid_argument(msg);
    }
    std::vector<InstanceId> ordered = matrix.instance_ids();
    std::sort(ordered.begin(), ordered.end());
    return {matrix.submatrix(matrix.llm_ids(), ordered), store.subset(ordered)};
}

}  // namespace refpred
