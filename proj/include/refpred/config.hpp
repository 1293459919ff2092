#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "refpred/core.hpp"
#include "refpred/harness.hpp"

namespace refpred {

// Schema violation with the JSON-pointer path of the offending field.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string pointer, const std::string& message)
        : std::runtime_error(pointer + ": " + message), pointer_(std::move(pointer)) {}
    const std::string& pointer() const { return pointer_; }

private:
    std::string pointer_;
};

struct RunConfig {
    // inputs
    std::string success_csv;
    std::string embeddings_jsonl;
    std::string prompts_jsonl;   // used when feature_kind = one_gram
    std::string split_file;      // optional precomputed split plan
    std::string feature_kind = "embeddings";  // or "one_gram"
    std::size_t truncate_dim = 0;             // 0 keeps the full width
    std::size_t vocab_cap = 5000;

    std::optional<SplitMode> split_mode;
    std::uint64_t seed = 0;
    int jobs = 0;

    std::vector<std::string> selectors = {"random"};
    std::vector<std::string> feature_modes = {"embeddings"};
    std::vector<ClassifierSpec> classifiers;  // empty = default grid
    std::size_t n_ref = 100;
    std::size_t irt_k = 10;
    std::vector<std::size_t> sweep_n_ref_list;

    SyntheticConfig synthetic;
    bool has_synthetic = false;

    nlohmann::json raw;  // canonical source for the digest

    std::string digest() const;
    RunOptions to_run_options() const;
};

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

}  // namespace refpred
