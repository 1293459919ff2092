#pragma once

#include <string>
#include <vector>

#include "refpred/core.hpp"

namespace refpred {

// CSV with header `llm_id,<instance_id>,...` and strictly binary body cells.
SuccessMatrix load_success_csv(const std::string& path);
void save_success_csv(const SuccessMatrix& matrix, const std::string& path);

// One JSON object per line: {"instance_id", "embedding", "dataset", "prompt"?}.
// Rejects non-finite values and dimension drift, reporting the line number.
FeatureStore load_embeddings_jsonl(const std::string& path);
void save_embeddings_jsonl(const FeatureStore& store, const std::string& path);

// Keeps the first k coordinates of every vector.
FeatureStore truncate_embeddings(const FeatureStore& store, std::size_t k);

struct PromptRecord {
    InstanceId instance_id;
    std::string dataset;
    std::string text;
};

std::vector<PromptRecord> load_prompts_jsonl(const std::string& path);

// Lowercased whitespace-split tokens with leading/trailing punctuation
// stripped; exposed for tests.
std::vector<std::string> tokenize(const std::string& text);

// Word-frequency features: the vocabulary comes from the training prompts
// only (capped to the vocab_cap most frequent tokens), and each prompt's
// token count is normalized by that token's total count over the training
// corpus. Out-of-vocabulary tokens are ignored.
FeatureStore one_gram_features(const std::vector<PromptRecord>& train_prompts,
                               const std::vector<PromptRecord>& all_prompts,
                               std::size_t vocab_cap = 5000);

// Convenience client for a generic embedding service: POSTs
// {"texts": [...]} and expects {"embeddings": [[...]]}. Not used by any
// pipeline path unless explicitly configured.
Matrix fetch_embeddings(const std::string& host, int port, const std::string& endpoint,
                        const std::vector<std::string>& texts, int timeout_seconds = 30);

}  // namespace refpred
