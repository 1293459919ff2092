#include "refpred/config.hpp"

#include <fstream>
#include <sstream>

#include "refpred/rng.hpp"

namespace refpred {

namespace {

template <typename T>
T require(const nlohmann::json& j, const std::string& pointer) {
    const nlohmann::json::json_pointer p(pointer);
    if (!j.contains(p)) throw ConfigError(pointer, "required field is missing");
    try {
        return j.at(p).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(pointer, e.what());
    }
}

template <typename T>
T optional_of(const nlohmann::json& j, const std::string& pointer, T fallback) {
    const nlohmann::json::json_pointer p(pointer);
    if (!j.contains(p)) return fallback;
    try {
        return j.at(p).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(pointer, e.what());
    }
}

}  // namespace

RunConfig parse_run_config(const nlohmann::json& j) {
    RunConfig cfg;
    cfg.raw = j;

    if (j.contains("inputs")) {
        cfg.success_csv = optional_of<std::string>(j, "/inputs/success_csv", "");
        cfg.embeddings_jsonl = optional_of<std::string>(j, "/inputs/embeddings_jsonl", "");
        cfg.prompts_jsonl = optional_of<std::string>(j, "/inputs/prompts_jsonl", "");
        cfg.split_file = optional_of<std::string>(j, "/inputs/split", "");
    }
    cfg.feature_kind = optional_of<std::string>(j, "/feature_kind", "embeddings");
    if (cfg.feature_kind != "embeddings" && cfg.feature_kind != "one_gram")
        throw ConfigError("/feature_kind", "must be 'embeddings' or 'one_gram'");
    cfg.truncate_dim = optional_of<std::size_t>(j, "/truncate_dim", 0);
    cfg.vocab_cap = optional_of<std::size_t>(j, "/vocab_cap", 5000);
    cfg.seed = optional_of<std::uint64_t>(j, "/seed", 0);
    cfg.jobs = optional_of<int>(j, "/jobs", 0);
    cfg.n_ref = optional_of<std::size_t>(j, "/n_ref", 100);
    if (cfg.n_ref == 0) throw ConfigError("/n_ref", "must be positive");
    cfg.irt_k = optional_of<std::size_t>(j, "/irt_k", 10);

    if (j.contains("split")) {
        try {
            cfg.split_mode = split_mode_from_json(j.at("split"));
        } catch (const std::exception& e) {
            throw ConfigError("/split", e.what());
        }
    }

    cfg.selectors = optional_of<std::vector<std::string>>(j, "/selectors", {"random"});
    if (cfg.selectors.empty()) throw ConfigError("/selectors", "must name at least one selector");
    for (std::size_t i = 0; i < cfg.selectors.size(); ++i) {
        try {
            SelectorSpec::parse(cfg.selectors[i], 1, 0);
        } catch (const std::exception& e) {
            throw ConfigError("/selectors/" + std::to_string(i), e.what());
        }
    }

    cfg.feature_modes =
        optional_of<std::vector<std::string>>(j, "/feature_modes", {"embeddings"});
    if (cfg.feature_modes.empty())
        throw ConfigError("/feature_modes", "must name at least one feature mode");
    for (std::size_t i = 0; i < cfg.feature_modes.size(); ++i) {
        try {
            feature_variant_from_name(cfg.feature_modes[i]);
        } catch (const std::exception& e) {
            throw ConfigError("/feature_modes/" + std::to_string(i), e.what());
        }
    }

    if (j.contains("classifiers")) {
        const auto& arr = j.at("classifiers");
        if (!arr.is_array() || arr.empty())
            throw ConfigError("/classifiers", "must be a non-empty array");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            try {
                cfg.classifiers.push_back(ClassifierSpec::from_json(arr[i]));
            } catch (const std::exception& e) {
                throw ConfigError("/classifiers/" + std::to_string(i), e.what());
            }
        }
    }

    cfg.sweep_n_ref_list =
        optional_of<std::vector<std::size_t>>(j, "/sweep_n_ref", std::vector<std::size_t>{});

    if (j.contains("synthetic")) {
        cfg.has_synthetic = true;
        cfg.synthetic.train_llms = optional_of<std::size_t>(j, "/synthetic/train_llms", 20);
        cfg.synthetic.val_llms = optional_of<std::size_t>(j, "/synthetic/val_llms", 4);
        cfg.synthetic.test_llms = optional_of<std::size_t>(j, "/synthetic/test_llms", 4);
        cfg.synthetic.train_instances =
            optional_of<std::size_t>(j, "/synthetic/train_instances", 2000);
        cfg.synthetic.val_instances =
            optional_of<std::size_t>(j, "/synthetic/val_instances", 400);
        cfg.synthetic.test_instances =
            optional_of<std::size_t>(j, "/synthetic/test_instances", 400);
        cfg.synthetic.k = optional_of<std::size_t>(j, "/synthetic/k", 5);
        cfg.synthetic.noise = optional_of<double>(j, "/synthetic/noise", 0.1);
        cfg.synthetic.latent_scale = optional_of<double>(j, "/synthetic/latent_scale", 1.0);
        cfg.synthetic.seed = optional_of<std::uint64_t>(j, "/synthetic/seed", cfg.seed);
        for (const char* field : {"train_llms", "val_llms", "test_llms", "train_instances",
                                  "val_instances", "test_instances", "k"}) {
            const std::string pointer = std::string("/synthetic/") + field;
            if (optional_of<long long>(cfg.raw, pointer, 1) <= 0)
                throw ConfigError(pointer, "must be positive");
        }
    }
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("config '" + path + "': " + e.what());
    }
    return parse_run_config(j);
}

std::string RunConfig::digest() const {
    std::ostringstream os;
    os << std::hex << fnv64(raw.dump());
    return os.str();
}

RunOptions RunConfig::to_run_options() const {
    RunOptions opt;
    opt.selector_names = selectors;
    opt.variants.clear();
    for (const std::string& name : feature_modes)
        opt.variants.push_back(feature_variant_from_name(name));
    opt.classifier_grid = classifiers;
    opt.n_ref = n_ref;
    opt.seed = seed;
    opt.irt_k = irt_k;
    opt.config_digest = digest();
    return opt;
}

}  // namespace refpred
