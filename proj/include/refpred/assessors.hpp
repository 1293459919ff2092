#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "refpred/classifiers.hpp"
#include "refpred/core.hpp"
#include "refpred/matrix.hpp"

namespace refpred {

enum class FeatureVariant { embeddings, similarity, similarity_with_interaction };

std::string feature_variant_name(FeatureVariant v);
FeatureVariant feature_variant_from_name(const std::string& name);

// Per-column zero-mean/unit-variance transform fitted on train rows only.
// Constant columns keep a unit scale.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> stdev;

    static Standardizer fit(const Matrix& rows);
    Matrix apply(const Matrix& rows) const;
    std::vector<double> apply_one(const std::vector<double>& row) const;

    nlohmann::json to_json() const;
    static Standardizer from_json(const nlohmann::json& j);
};

// Feature vector for one (LLM, instance) pair.
//   embeddings:                  [f_p | g]            (d + n_ref)
//   similarity:                  [sims | g]           (2 n_ref)
//   similarity_with_interaction: [sims | g | sims*g]  (3 n_ref)
// where sims_r = cosine(f_p, ref_embeddings row r). For the similarity
// variants f_p must be the raw embedding; for the embeddings variant the
// caller passes f_p already standardized.
std::vector<double> build_pair_features(FeatureVariant variant,
                                        const std::vector<std::uint8_t>& g_m,
                                        const std::vector<double>& f_p,
                                        const Matrix* ref_embeddings);

std::size_t pair_feature_width(FeatureVariant variant, std::size_t d, std::size_t n_ref);

// Pooled (LLM, instance) design matrix: row j*N + i is the pair feature of
// LLM j and instance i. g_rows is n_llms x n_ref, f_std the standardized
// instance block, sims the instance-by-reference cosine matrix (may be
// empty for the embeddings variant).
Matrix assemble_pair_matrix(FeatureVariant variant, const Matrix& g_rows, const Matrix& f_std,
                            const Matrix& sims);

struct GenericAssessor {
    TrainedClassifier classifier;
    FeatureVariant variant = FeatureVariant::embeddings;
    ReferenceSet reference;
    Standardizer standardizer;   // of the intrinsic features, train statistics
    Matrix ref_embeddings;       // raw embeddings of the reference instances
    bool fallback_warning = false;

    nlohmann::json to_json() const;
    static GenericAssessor from_json(const nlohmann::json& j);
};

// Fits the pooled classifier over every (train LLM, train instance) pair.
// g(m_j) is read from the train matrix columns restricted to the reference
// set. A single-class pool degrades to the constant-prior fallback.
GenericAssessor train_generic_assessor(const SuccessMatrix& train_matrix,
                                       const FeatureStore& train_store,
                                       const ReferenceSet& reference, FeatureVariant variant,
                                       const ClassifierSpec& clf,
                                       const Standardizer& standardizer);

// Success probability for a new LLM described only by its reference results.
double predict_new_llm(const GenericAssessor& assessor, const std::vector<std::uint8_t>& g_new,
                       const std::vector<double>& f_new_raw);

// Batch predictions of one LLM over a store of instances.
std::vector<double> predict_llm_on_store(const GenericAssessor& assessor,
                                         const std::vector<std::uint8_t>& g_new,
                                         const FeatureStore& store);

struct SpecificAssessorResult {
    TrainedClassifier model;
    ClassifierSpec chosen;
    double val_auc = 0.0;
    bool val_auc_defined = false;
    bool fallback_warning = false;
};

// One LLM's assessor: every grid member is trained on the train rows and
// the one with the highest validation AUC wins (first on ties).
SpecificAssessorResult train_specific_assessor(const Matrix& X_train,
                                               const std::vector<std::uint8_t>& y_train,
                                               const Matrix& X_val,
                                               const std::vector<std::uint8_t>& y_val,
                                               const std::vector<ClassifierSpec>& grid);

// Pooled-labels baseline: one classifier on (f(p_i), z_ji) over all train
// LLMs, intrinsic features only.
TrainedClassifier train_all_train_baseline(const ClassifierSpec& spec,
                                           const SuccessMatrix& train_matrix,
                                           const Matrix& f_std);

// Reference-only baseline fit: intrinsic features of the reference
// instances against one LLM's reference results.
TrainedClassifier train_reference_only(const ClassifierSpec& spec, const Matrix& ref_features_std,
                                       const std::vector<std::uint8_t>& y_ref);

}  // namespace refpred
