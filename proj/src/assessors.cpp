#include "refpred/assessors.hpp"

#include <cmath>
#include <stdexcept>

#include "refpred/kernels.hpp"
#include "refpred/numerics.hpp"
#include "refpred/parallel.hpp"

namespace refpred {

std::string feature_variant_name(FeatureVariant v) {
    switch (v) {
        case FeatureVariant::embeddings: return "embeddings";
        case FeatureVariant::similarity: return "similarity";
        case FeatureVariant::similarity_with_interaction: return "similarity_with_interaction";
    }
    return "unknown";
}

FeatureVariant feature_variant_from_name(const std::string& name) {
    if (name == "embeddings") return FeatureVariant::embeddings;
    if (name == "similarity") return FeatureVariant::similarity;
    if (name == "similarity_with_interaction") return FeatureVariant::similarity_with_interaction;
    throw std::invalid_argument("unknown feature variant '" + name + "'");
}

Standardizer Standardizer::fit(const Matrix& rows) {
    const std::size_t n = rows.rows(), d = rows.cols();
    if (n == 0) throw std::invalid_argument("Standardizer: empty input");
    Standardizer s;
    s.mean.assign(d, 0.0);
    s.stdev.assign(d, 1.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) s.mean[j] += rows(i, j);
    for (std::size_t j = 0; j < d; ++j) s.mean[j] /= static_cast<double>(n);
    std::vector<double> ss(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double c = rows(i, j) - s.mean[j];
            ss[j] += c * c;
        }
    for (std::size_t j = 0; j < d; ++j) {
        const double var = ss[j] / static_cast<double>(n);
        s.stdev[j] = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    return s;
}

Matrix Standardizer::apply(const Matrix& rows) const {
    if (rows.cols() != mean.size()) throw std::invalid_argument("Standardizer: width mismatch");
    Matrix out(rows.rows(), rows.cols());
    parallel_for(rows.rows(), [&](std::size_t i) {
        for (std::size_t j = 0; j < rows.cols(); ++j)
            out(i, j) = (rows(i, j) - mean[j]) / stdev[j];
    });
    return out;
}

std::vector<double> Standardizer::apply_one(const std::vector<double>& row) const {
    if (row.size() != mean.size()) throw std::invalid_argument("Standardizer: width mismatch");
    std::vector<double> out(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) out[j] = (row[j] - mean[j]) / stdev[j];
    return out;
}

nlohmann::json Standardizer::to_json() const {
    nlohmann::json j;
    j["mean"] = mean;
    j["stdev"] = stdev;
    return j;
}

Standardizer Standardizer::from_json(const nlohmann::json& j) {
    Standardizer s;
    s.mean = j.at("mean").get<std::vector<double>>();
    s.stdev = j.at("stdev").get<std::vector<double>>();
    return s;
}

std::size_t pair_feature_width(FeatureVariant variant, std::size_t d, std::size_t n_ref) {
    switch (variant) {
        case FeatureVariant::embeddings: return d + n_ref;
        case FeatureVariant::similarity: return 2 * n_ref;
        case FeatureVariant::similarity_with_interaction: return 3 * n_ref;
    }
    return 0;
}

std::vector<double> build_pair_features(FeatureVariant variant,
                                        const std::vector<std::uint8_t>& g_m,
                                        const std::vector<double>& f_p,
                                        const Matrix* ref_embeddings) {
    const std::size_t n_ref = g_m.size();
    if (variant == FeatureVariant::embeddings) {
        std::vector<double> out;
        out.reserve(f_p.size() + n_ref);
        out.insert(out.end(), f_p.begin(), f_p.end());
        for (std::uint8_t v : g_m) out.push_back(static_cast<double>(v));
        return out;
    }
    if (!ref_embeddings || ref_embeddings->rows() != n_ref)
        throw std::invalid_argument(
            "build_pair_features: similarity variants need one reference embedding per g entry");
    std::vector<double> sims(n_ref);
    for (std::size_t r = 0; r < n_ref; ++r) {
        std::vector<double> ref_row(ref_embeddings->row_ptr(r),
                                    ref_embeddings->row_ptr(r) + ref_embeddings->cols());
        sims[r] = cosine_similarity(f_p, ref_row);
    }
    std::vector<double> out;
    out.reserve(variant == FeatureVariant::similarity ? 2 * n_ref : 3 * n_ref);
    out.insert(out.end(), sims.begin(), sims.end());
    for (std::uint8_t v : g_m) out.push_back(static_cast<double>(v));
    if (variant == FeatureVariant::similarity_with_interaction)
        for (std::size_t r = 0; r < n_ref; ++r)
            out.push_back(sims[r] * static_cast<double>(g_m[r]));
    return out;
}

Matrix assemble_pair_matrix(FeatureVariant variant, const Matrix& g_rows, const Matrix& f_std,
                            const Matrix& sims) {
    const std::size_t n_llms = g_rows.rows(), n_ref = g_rows.cols();
    const std::size_t N = variant == FeatureVariant::embeddings ? f_std.rows() : sims.rows();
    const std::size_t d = variant == FeatureVariant::embeddings ? f_std.cols() : 0;
    const std::size_t width = pair_feature_width(variant, d, n_ref);
    Matrix out(n_llms * N, width);
    parallel_for(n_llms * N, [&](std::size_t row) {
        const std::size_t j = row / N, i = row % N;
        double* dst = out.row_ptr(row);
        std::size_t c = 0;
        if (variant == FeatureVariant::embeddings) {
            const double* f = f_std.row_ptr(i);
            for (std::size_t t = 0; t < d; ++t) dst[c++] = f[t];
        } else {
            const double* s = sims.row_ptr(i);
            for (std::size_t t = 0; t < n_ref; ++t) dst[c++] = s[t];
        }
        const double* g = g_rows.row_ptr(j);
        for (std::size_t t = 0; t < n_ref; ++t) dst[c++] = g[t];
        if (variant == FeatureVariant::similarity_with_interaction) {
            const double* s = sims.row_ptr(i);
            for (std::size_t t = 0; t < n_ref; ++t) dst[c++] = s[t] * g[t];
        }
    });
    return out;
}

namespace {

bool single_class(const std::vector<std::uint8_t>& y) {
    bool any0 = false, any1 = false;
    for (std::uint8_t v : y) (v ? any1 : any0) = true;
    return !(any0 && any1);
}

double prior_of(const std::vector<std::uint8_t>& y) {
    double s = 0.0;
    for (std::uint8_t v : y) s += v;
    return y.empty() ? 0.5 : s / static_cast<double>(y.size());
}

Matrix g_rows_for(const SuccessMatrix& matrix, const std::vector<LlmId>& llms,
                  const ReferenceSet& reference) {
    Matrix g(llms.size(), reference.instance_ids.size());
    for (std::size_t j = 0; j < llms.size(); ++j) {
        const std::vector<std::uint8_t> row = matrix.row_for(llms[j], reference.instance_ids);
        for (std::size_t r = 0; r < row.size(); ++r) g(j, r) = static_cast<double>(row[r]);
    }
    return g;
}

}  // namespace

GenericAssessor train_generic_assessor(const SuccessMatrix& train_matrix,
                                       const FeatureStore& train_store,
                                       const ReferenceSet& reference, FeatureVariant variant,
                                       const ClassifierSpec& clf,
                                       const Standardizer& standardizer) {
    for (const auto& id : reference.instance_ids)
        if (!train_matrix.has_instance(id))
            throw std::invalid_argument("train_generic_assessor: reference id '" + id +
                                        "' is not a train instance");

    GenericAssessor assessor;
    assessor.variant = variant;
    assessor.reference = reference;
    assessor.standardizer = standardizer;
    assessor.ref_embeddings = train_store.subset(reference.instance_ids).vectors();

    const Matrix g_rows = g_rows_for(train_matrix, train_matrix.llm_ids(), reference);
    Matrix f_std, sims;
    if (variant == FeatureVariant::embeddings)
        f_std = standardizer.apply(train_store.vectors());
    else
        sims = kernels::cosine_matrix(train_store.vectors(), assessor.ref_embeddings);
    const Matrix X = assemble_pair_matrix(variant, g_rows, f_std, sims);

    const std::size_t N = train_store.size();
    std::vector<std::uint8_t> y(train_matrix.n_llms() * N);
    for (std::size_t j = 0; j < train_matrix.n_llms(); ++j)
        for (std::size_t i = 0; i < N; ++i) y[j * N + i] = train_matrix.at(j, i);

    if (single_class(y)) {
        assessor.classifier = make_constant_classifier(prior_of(y), X.cols());
        assessor.fallback_warning = true;
        return assessor;
    }
    assessor.classifier = train_classifier(clf, X, y);
    return assessor;
}

std::vector<double> predict_llm_on_store(const GenericAssessor& assessor,
                                         const std::vector<std::uint8_t>& g_new,
                                         const FeatureStore& store) {
    if (g_new.size() != assessor.reference.instance_ids.size())
        throw std::invalid_argument("predict: g vector length " + std::to_string(g_new.size()) +
                                    " does not match n_ref " +
                                    std::to_string(assessor.reference.instance_ids.size()));
    Matrix g(1, g_new.size());
    for (std::size_t r = 0; r < g_new.size(); ++r) g(0, r) = static_cast<double>(g_new[r]);
    Matrix f_std, sims;
    if (assessor.variant == FeatureVariant::embeddings)
        f_std = assessor.standardizer.apply(store.vectors());
    else
        sims = kernels::cosine_matrix(store.vectors(), assessor.ref_embeddings);
    const Matrix X = assemble_pair_matrix(assessor.variant, g, f_std, sims);
    return predict(assessor.classifier, X);
}

double predict_new_llm(const GenericAssessor& assessor, const std::vector<std::uint8_t>& g_new,
                       const std::vector<double>& f_new_raw) {
    if (g_new.size() != assessor.reference.instance_ids.size())
        throw std::invalid_argument("predict_new_llm: g vector length " +
                                    std::to_string(g_new.size()) + " does not match n_ref " +
                                    std::to_string(assessor.reference.instance_ids.size()));
    std::vector<double> features;
    if (assessor.variant == FeatureVariant::embeddings) {
        features = build_pair_features(assessor.variant, g_new,
                                       assessor.standardizer.apply_one(f_new_raw), nullptr);
    } else {
        features =
            build_pair_features(assessor.variant, g_new, f_new_raw, &assessor.ref_embeddings);
    }
    return predict_one(assessor.classifier, features);
}

SpecificAssessorResult train_specific_assessor(const Matrix& X_train,
                                               const std::vector<std::uint8_t>& y_train,
                                               const Matrix& X_val,
                                               const std::vector<std::uint8_t>& y_val,
                                               const std::vector<ClassifierSpec>& grid) {
    if (grid.empty()) throw std::invalid_argument("train_specific_assessor: empty grid");
    SpecificAssessorResult result;
    if (single_class(y_train)) {
        result.model = make_constant_classifier(prior_of(y_train), X_train.cols());
        result.fallback_warning = true;
        result.chosen = ClassifierSpec{};
        result.chosen.family = ClassifierFamily::constant;
        return result;
    }
    bool have_best = false;
    for (const ClassifierSpec& spec : grid) {
        TrainedClassifier model = train_classifier(spec, X_train, y_train);
        double val_auc = 0.0;
        bool defined = false;
        if (!single_class(y_val)) {
            val_auc = auc(predict(model, X_val), y_val);
            defined = true;
        }
        const bool better = !have_best || (defined && !result.val_auc_defined) ||
                            (defined && result.val_auc_defined && val_auc > result.val_auc);
        if (better) {
            result.model = std::move(model);
            result.chosen = spec;
            result.val_auc = val_auc;
            result.val_auc_defined = defined;
            have_best = true;
        }
    }
    return result;
}

nlohmann::json GenericAssessor::to_json() const {
    nlohmann::json j;
    j["classifier"] = classifier.to_json();
    j["feature_mode"] = feature_variant_name(variant);
    j["reference"] = reference.to_json(reference.instance_ids.size(), 0);
    j["standardization"] = standardizer.to_json();
    nlohmann::json embs = nlohmann::json::array();
    for (std::size_t r = 0; r < ref_embeddings.rows(); ++r)
        embs.push_back(std::vector<double>(ref_embeddings.row_ptr(r),
                                           ref_embeddings.row_ptr(r) + ref_embeddings.cols()));
    j["reference_embeddings"] = std::move(embs);
    j["fallback_warning"] = fallback_warning;
    return j;
}

GenericAssessor GenericAssessor::from_json(const nlohmann::json& j) {
    GenericAssessor a;
    a.classifier = TrainedClassifier::from_json(j.at("classifier"));
    a.variant = feature_variant_from_name(j.at("feature_mode").get<std::string>());
    a.reference.instance_ids =
        j.at("reference").at("instance_ids").get<std::vector<InstanceId>>();
    a.reference.selector_name = j.at("reference").at("selector").get<std::string>();
    a.standardizer = Standardizer::from_json(j.at("standardization"));
    std::vector<std::vector<double>> rows;
    for (const auto& row : j.at("reference_embeddings"))
        rows.push_back(row.get<std::vector<double>>());
    a.ref_embeddings = Matrix::from_rows(rows);
    a.fallback_warning = j.value("fallback_warning", false);
    return a;
}

TrainedClassifier train_all_train_baseline(const ClassifierSpec& spec,
                                           const SuccessMatrix& train_matrix,
                                           const Matrix& f_std) {
    const std::size_t N = train_matrix.n_instances(), n = train_matrix.n_llms();
    if (f_std.rows() != N)
        throw std::invalid_argument("train_all_train_baseline: feature rows must match instances");
    Matrix X(n * N, f_std.cols());
    std::vector<std::uint8_t> y(n * N);
    parallel_for(n * N, [&](std::size_t row) {
        const std::size_t j = row / N, i = row % N;
        const double* src = f_std.row_ptr(i);
        double* dst = X.row_ptr(row);
        for (std::size_t t = 0; t < f_std.cols(); ++t) dst[t] = src[t];
        y[row] = train_matrix.at(j, i);
    });
    if (single_class(y)) return make_constant_classifier(prior_of(y), X.cols());
    return train_classifier(spec, X, y);
}

TrainedClassifier train_reference_only(const ClassifierSpec& spec, const Matrix& ref_features_std,
                                       const std::vector<std::uint8_t>& y_ref) {
    if (ref_features_std.rows() != y_ref.size())
        throw std::invalid_argument("train_reference_only: rows do not match labels");
    if (single_class(y_ref))
        return make_constant_classifier(prior_of(y_ref), ref_features_std.cols());
    return train_classifier(spec, ref_features_std, y_ref);
}

}  // namespace refpred
