#include <doctest.h>

#include <cmath>

#include "refpred/assessors.hpp"
#include "refpred/kernels.hpp"
#include "refpred/numerics.hpp"
#include "refpred/rng.hpp"

using namespace refpred;

namespace {

FeatureStore store_from(const std::vector<InstanceId>& ids, const Matrix& rows) {
    return FeatureStore(ids, rows, std::vector<std::string>(ids.size(), "d"));
}

}  // namespace

TEST_CASE("pair features unroll exactly as documented") {
    const std::vector<std::uint8_t> g{1, 0};
    // Reference embeddings chosen so the cosines are 0.5 and -0.2.
    const std::vector<double> f{1.0, 0.0};
    Matrix refs(2, 2);
    // cos(f, r0) = 0.5 -> r0 at 60 degrees from f.
    refs(0, 0) = 0.5;
    refs(0, 1) = std::sqrt(3.0) / 2.0;
    // cos(f, r1) = -0.2.
    refs(1, 0) = -0.2;
    refs(1, 1) = std::sqrt(1.0 - 0.04);

    const std::vector<double> out =
        build_pair_features(FeatureVariant::similarity_with_interaction, g, f, &refs);
    REQUIRE(out.size() == 6);
    CHECK(out[0] == doctest::Approx(0.5));
    CHECK(out[1] == doctest::Approx(-0.2));
    CHECK(out[2] == 1.0);
    CHECK(out[3] == 0.0);
    CHECK(out[4] == doctest::Approx(0.5));
    CHECK(out[5] == doctest::Approx(0.0));

    // g of zeros blanks the interaction block.
    const std::vector<double> zero =
        build_pair_features(FeatureVariant::similarity_with_interaction, {0, 0}, f, &refs);
    CHECK(zero[4] == 0.0);
    CHECK(zero[5] == 0.0);
}

TEST_CASE("pair feature widths follow the mode formulas") {
    Rng rng(1);
    std::vector<double> f(1024);
    for (double& v : f) v = rng.normal();
    std::vector<std::uint8_t> g(100, 1);
    CHECK(build_pair_features(FeatureVariant::embeddings, g, f, nullptr).size() == 1124);
    Matrix refs(100, 1024);
    for (double& v : refs.storage()) v = rng.normal();
    CHECK(build_pair_features(FeatureVariant::similarity, g, f, &refs).size() == 200);
    CHECK(build_pair_features(FeatureVariant::similarity_with_interaction, g, f, &refs).size() ==
          300);
    CHECK(pair_feature_width(FeatureVariant::embeddings, 1024, 100) == 1124);
    // Mismatched reference count is an error.
    Matrix short_refs(99, 1024);
    for (double& v : short_refs.storage()) v = rng.normal();
    CHECK_THROWS_AS(build_pair_features(FeatureVariant::similarity, g, f, &short_refs),
                    std::invalid_argument);
}

TEST_CASE("standardizer uses train statistics and unit scale for constants") {
    Matrix rows = Matrix::from_rows({{1.0, 5.0}, {3.0, 5.0}});
    const Standardizer s = Standardizer::fit(rows);
    CHECK(s.mean[0] == doctest::Approx(2.0));
    CHECK(s.stdev[1] == 1.0);  // constant column
    const Matrix std_rows = s.apply(rows);
    CHECK(std_rows(0, 0) == doctest::Approx(-1.0));
    CHECK(std_rows(1, 0) == doctest::Approx(1.0));
    CHECK(std_rows(0, 1) == 0.0);
    const Standardizer back = Standardizer::from_json(s.to_json());
    CHECK(back.mean == s.mean);
    CHECK(back.stdev == s.stdev);
}

namespace {

struct TinyWorld {
    SuccessMatrix train_matrix;
    FeatureStore train_store;
    ReferenceSet ref;
    Standardizer standardizer;

    TinyWorld(std::size_t n_llms, std::size_t N, std::uint64_t seed, std::size_t n_ref = 4) {
        Rng rng(seed);
        std::vector<LlmId> llms;
        for (std::size_t j = 0; j < n_llms; ++j) llms.push_back("m" + std::to_string(j));
        std::vector<InstanceId> ids;
        for (std::size_t i = 0; i < N; ++i) ids.push_back("i" + std::to_string(i));
        Matrix feats(N, 3);
        for (double& v : feats.storage()) v = rng.normal();
        std::vector<std::uint8_t> z(n_llms * N);
        for (std::size_t j = 0; j < n_llms; ++j)
            for (std::size_t i = 0; i < N; ++i)
                z[j * N + i] = rng.bernoulli(kernels::sigmoid(feats(i, 0))) ? 1 : 0;
        bool any0 = false, any1 = false;
        for (auto v : z) (v ? any1 : any0) = true;
        if (!any0) z[0] = 0;
        if (!any1) z[1] = 1;
        train_matrix = SuccessMatrix(llms, ids, std::move(z));
        train_store = store_from(ids, feats);
        for (std::size_t r = 0; r < n_ref; ++r) ref.instance_ids.push_back(ids[r]);
        ref.selector_name = "fixed";
        standardizer = Standardizer::fit(train_store.vectors());
    }
};

}  // namespace

TEST_CASE("a one-LLM generic pool is the specific pool plus a constant g block") {
    const TinyWorld w(1, 12, 42);
    const Matrix g_rows = [&] {
        Matrix g(1, w.ref.instance_ids.size());
        const auto row = w.train_matrix.row_for("m0", w.ref.instance_ids);
        for (std::size_t r = 0; r < row.size(); ++r) g(0, r) = row[r];
        return g;
    }();
    const Matrix f_std = w.standardizer.apply(w.train_store.vectors());
    const Matrix pool = assemble_pair_matrix(FeatureVariant::embeddings, g_rows, f_std, {});
    REQUIRE(pool.rows() == 12);
    REQUIRE(pool.cols() == f_std.cols() + w.ref.instance_ids.size());
    for (std::size_t i = 0; i < pool.rows(); ++i) {
        for (std::size_t j = 0; j < f_std.cols(); ++j) CHECK(pool(i, j) == f_std(i, j));
        for (std::size_t r = 0; r < w.ref.instance_ids.size(); ++r)
            CHECK(pool(i, f_std.cols() + r) == g_rows(0, r));
    }
}

TEST_CASE("generic assessor predictions depend only on (g, f)") {
    const TinyWorld w(4, 30, 7);
    ClassifierSpec spec;
    spec.family = ClassifierFamily::logreg_l2;
    spec.lambda = 1e-2;
    const GenericAssessor assessor =
        train_generic_assessor(w.train_matrix, w.train_store, w.ref,
                               FeatureVariant::embeddings, spec, w.standardizer);

    const std::vector<std::uint8_t> g{1, 0, 1, 0};
    const std::vector<double> f{0.3, -0.2, 1.1};
    const double p1 = predict_new_llm(assessor, g, f);
    const double p2 = predict_new_llm(assessor, g, f);
    CHECK(p1 == p2);
    CHECK(p1 > 0.0);
    CHECK(p1 < 1.0);
    CHECK_THROWS_AS(predict_new_llm(assessor, {1, 0}, f), std::invalid_argument);

    // Two LLMs with identical g receive identical predictions everywhere.
    const std::vector<double> batch1 = predict_llm_on_store(assessor, g, w.train_store);
    const std::vector<double> batch2 = predict_llm_on_store(assessor, g, w.train_store);
    CHECK(batch1 == batch2);

    // The embeddings variant never reads the reference embeddings.
    GenericAssessor tampered = assessor;
    for (double& v : tampered.ref_embeddings.storage()) v += 100.0;
    CHECK(predict_new_llm(tampered, g, f) == p1);
}

TEST_CASE("specific assessor selects on validation AUC") {
    Rng rng(3);
    const std::size_t m = 120, d = 2;
    Matrix X_train(m, d), X_val(60, d);
    for (double& v : X_train.storage()) v = rng.normal();
    for (double& v : X_val.storage()) v = rng.normal();
    std::vector<std::uint8_t> y_train(m), y_val(60);
    for (std::size_t i = 0; i < m; ++i) y_train[i] = X_train(i, 0) > 0 ? 1 : 0;
    for (std::size_t i = 0; i < 60; ++i) y_val[i] = X_val(i, 0) > 0 ? 1 : 0;

    std::vector<ClassifierSpec> grid(2);
    grid[0].family = ClassifierFamily::logreg_l2;
    grid[0].lambda = 1e-3;
    grid[1].family = ClassifierFamily::gbdt;
    grid[1].rounds = 30;
    grid[1].max_depth = 2;

    const SpecificAssessorResult res =
        train_specific_assessor(X_train, y_train, X_val, y_val, grid);
    CHECK(res.val_auc_defined);
    CHECK(res.val_auc >= 0.99);

    // A grid of one returns that classifier.
    const SpecificAssessorResult single =
        train_specific_assessor(X_train, y_train, X_val, y_val, {grid[1]});
    CHECK(single.chosen.family == ClassifierFamily::gbdt);

    // Single-class labels fall back to the constant prior with a warning.
    const SpecificAssessorResult fallback = train_specific_assessor(
        X_train, std::vector<std::uint8_t>(m, 1), X_val, y_val, grid);
    CHECK(fallback.fallback_warning);
    CHECK(fallback.model.family == ClassifierFamily::constant);
}

TEST_CASE("coin-flip labels keep validation AUC near one half") {
    for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
        Rng rng(seed * 1000 + 11);
        const std::size_t m = 300, v = 200, d = 4;
        Matrix X_train(m, d), X_val(v, d);
        for (double& x : X_train.storage()) x = rng.normal();
        for (double& x : X_val.storage()) x = rng.normal();
        std::vector<std::uint8_t> y_train(m), y_val(v);
        for (auto& y : y_train) y = rng.bernoulli(0.5) ? 1 : 0;
        for (auto& y : y_val) y = rng.bernoulli(0.5) ? 1 : 0;
        ClassifierSpec spec;
        spec.family = ClassifierFamily::logreg_l2;
        spec.lambda = 1e-2;
        const SpecificAssessorResult res =
            train_specific_assessor(X_train, y_train, X_val, y_val, {spec, spec});
        CHECK(res.val_auc >= 0.35);
        CHECK(res.val_auc <= 0.65);
    }
}

TEST_CASE("identical train LLMs make the pooled baseline equal a specific fit") {
    Rng rng(9);
    const std::size_t N = 60;
    std::vector<InstanceId> ids;
    for (std::size_t i = 0; i < N; ++i) ids.push_back("i" + std::to_string(i));
    Matrix feats(N, 3);
    for (double& v : feats.storage()) v = rng.normal();
    std::vector<std::uint8_t> row(N);
    for (std::size_t i = 0; i < N; ++i) row[i] = feats(i, 0) > 0.2 ? 1 : 0;

    // Three LLMs with byte-identical success patterns.
    std::vector<std::uint8_t> z;
    for (int j = 0; j < 3; ++j) z.insert(z.end(), row.begin(), row.end());
    const SuccessMatrix matrix({"m0", "m1", "m2"}, ids, std::move(z));
    const FeatureStore store = store_from(ids, feats);
    const Standardizer st = Standardizer::fit(store.vectors());
    const Matrix f_std = st.apply(store.vectors());

    ClassifierSpec spec;
    spec.family = ClassifierFamily::logreg_l2;
    spec.lambda = 1e-2;
    const TrainedClassifier pooled = train_all_train_baseline(spec, matrix, f_std);
    const TrainedClassifier specific = train_classifier(spec, f_std, row);
    REQUIRE(pooled.weights.size() == specific.weights.size());
    for (std::size_t j = 0; j < pooled.weights.size(); ++j)
        CHECK(pooled.weights[j] == doctest::Approx(specific.weights[j]).epsilon(1e-6));
    CHECK(pooled.bias == doctest::Approx(specific.bias).epsilon(1e-6));
}

TEST_CASE("reference-only with the full train set reduces to a specific fit") {
    const TinyWorld w(2, 20, 31, 20);  // reference set = every train instance
    const Matrix f_std = w.standardizer.apply(w.train_store.vectors());
    const std::vector<std::uint8_t> y = w.train_matrix.row_for("m0", w.ref.instance_ids);
    ClassifierSpec spec;
    spec.family = ClassifierFamily::logreg_l2;
    spec.lambda = 1e-2;
    const TrainedClassifier ref_only = train_reference_only(spec, f_std, y);
    const TrainedClassifier specific = train_classifier(spec, f_std, y);
    CHECK(ref_only.weights == specific.weights);
    CHECK(ref_only.bias == specific.bias);
}

TEST_CASE("generic assessor bundle survives a json round trip") {
    const TinyWorld w(3, 25, 77);
    ClassifierSpec spec;
    spec.family = ClassifierFamily::gbdt;
    spec.rounds = 15;
    spec.max_depth = 2;
    const GenericAssessor assessor =
        train_generic_assessor(w.train_matrix, w.train_store, w.ref,
                               FeatureVariant::similarity_with_interaction, spec, w.standardizer);
    const GenericAssessor back = GenericAssessor::from_json(assessor.to_json());
    const std::vector<std::uint8_t> g{0, 1, 1, 0};
    const std::vector<double> batch_a = predict_llm_on_store(assessor, g, w.train_store);
    const std::vector<double> batch_b = predict_llm_on_store(back, g, w.train_store);
    CHECK(batch_a == batch_b);
    CHECK(back.reference.instance_ids == assessor.reference.instance_ids);
}
