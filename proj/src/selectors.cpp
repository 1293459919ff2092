#include "refpred/selectors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "refpred/numerics.hpp"
#include "refpred/rng.hpp"

namespace refpred {

std::string feature_source_name(FeatureSource s) {
    switch (s) {
        case FeatureSource::intrinsic_features: return "intrinsic_features";
        case FeatureSource::success_columns: return "success_columns";
        case FeatureSource::irt_demands: return "irt_demands";
    }
    return "unknown";
}

FeatureSource feature_source_from_name(const std::string& name) {
    if (name == "intrinsic_features") return FeatureSource::intrinsic_features;
    if (name == "success_columns") return FeatureSource::success_columns;
    if (name == "irt_demands") return FeatureSource::irt_demands;
    throw std::invalid_argument("unknown feature source '" + name + "'");
}

std::string selector_method_name(SelectorMethod m) {
    switch (m) {
        case SelectorMethod::clustering: return "clustering";
        case SelectorMethod::factor_analysis: return "factor_analysis";
        case SelectorMethod::random: return "random";
        case SelectorMethod::random_best_of_20: return "random_best_of_20";
    }
    return "unknown";
}

std::string SelectorSpec::name() const {
    if (method == SelectorMethod::random || method == SelectorMethod::random_best_of_20)
        return selector_method_name(method);
    return selector_method_name(method) + ":" + feature_source_name(feature_source);
}

SelectorSpec SelectorSpec::parse(const std::string& name, std::size_t n_ref,
                                 std::uint64_t seed) {
    SelectorSpec spec;
    spec.n_ref = n_ref;
    spec.seed = seed;
    const std::size_t colon = name.find(':');
    const std::string method = name.substr(0, colon);
    if (method == "random") {
        spec.method = SelectorMethod::random;
    } else if (method == "random_best_of_20") {
        spec.method = SelectorMethod::random_best_of_20;
    } else if (method == "clustering" || method == "factor_analysis") {
        spec.method = method == "clustering" ? SelectorMethod::clustering
                                             : SelectorMethod::factor_analysis;
        if (colon == std::string::npos)
            throw std::invalid_argument("selector '" + name +
                                        "' needs a feature source, e.g. '" + method +
                                        ":intrinsic_features'");
        spec.feature_source = feature_source_from_name(name.substr(colon + 1));
    } else {
        throw std::invalid_argument("unknown selector '" + name + "'");
    }
    return spec;
}

namespace {

std::string digest_of(const SelectorSpec& spec) {
    std::ostringstream os;
    os << spec.name() << "|n_ref=" << spec.n_ref << "|seed=" << spec.seed;
    const std::string s = os.str();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::ostringstream hex;
    hex << std::hex << h;
    return hex.str();
}

void check_n_ref(std::size_t n_ref, std::size_t n_train) {
    if (n_ref == 0) throw std::invalid_argument("selector: n_ref must be positive");
    if (n_ref > n_train)
        throw std::invalid_argument("selector: n_ref " + std::to_string(n_ref) +
                                    " exceeds train size " + std::to_string(n_train));
}

}  // namespace

Matrix build_feature_matrix(FeatureSource source, const SuccessMatrix& train_matrix,
                            const FeatureStore& train_store, const IrtModel* irt) {
    const std::size_t N = train_matrix.n_instances();
    switch (source) {
        case FeatureSource::intrinsic_features: {
            if (train_store.size() != N)
                throw std::invalid_argument(
                    "build_feature_matrix: store does not cover the train instances");
            Matrix X(train_store.dim(), N);
            for (std::size_t i = 0; i < N; ++i) {
                const std::size_t r = train_store.row_of(train_matrix.instance_ids()[i]);
                for (std::size_t f = 0; f < train_store.dim(); ++f)
                    X(f, i) = train_store.vectors()(r, f);
            }
            return X;
        }
        case FeatureSource::success_columns: {
            Matrix X(train_matrix.n_llms(), N);
            for (std::size_t j = 0; j < train_matrix.n_llms(); ++j)
                for (std::size_t i = 0; i < N; ++i)
                    X(j, i) = static_cast<double>(train_matrix.at(j, i));
            return X;
        }
        case FeatureSource::irt_demands: {
            if (!irt)
                throw std::invalid_argument(
                    "build_feature_matrix: irt_demands needs a fitted IRT model");
            const FeatureStore demands = item_demands(*irt);
            Matrix X(irt->k, N);
            for (std::size_t i = 0; i < N; ++i) {
                const std::size_t r = demands.row_of(train_matrix.instance_ids()[i]);
                for (std::size_t f = 0; f < irt->k; ++f) X(f, i) = demands.vectors()(r, f);
            }
            return X;
        }
    }
    throw std::invalid_argument("build_feature_matrix: unknown source");
}

ReferenceSet select_by_clustering(const Matrix& X, const std::vector<InstanceId>& ids,
                                  std::size_t n_ref, std::uint64_t seed) {
    if (X.cols() != ids.size())
        throw std::invalid_argument("select_by_clustering: column/id mismatch");
    check_n_ref(n_ref, ids.size());
    const Matrix points = X.transposed();  // instances as rows
    KmeansResult km = kmeans(points, n_ref, seed);
    if (!km.empty_clusters.empty()) km = kmeans(points, n_ref, derive_seed(seed, 0xC1));
    if (!km.empty_clusters.empty())
        throw std::runtime_error("select_by_clustering: empty cluster after re-seeding");

    ReferenceSet ref;
    ref.selector_name = "clustering";
    for (std::size_t c = 0; c < n_ref; ++c) ref.instance_ids.push_back(ids[km.medoid_indices[c]]);
    return ref;
}

std::vector<std::size_t> allocate_factor_counts(std::size_t n_ref, std::size_t l) {
    if (l == 0) throw std::invalid_argument("allocate_factor_counts: l must be positive");
    std::vector<std::size_t> counts(l, n_ref / l);
    for (std::size_t k = 0; k < n_ref % l; ++k) counts[k] += 1;
    return counts;
}

ReferenceSet select_by_factor_analysis(const Matrix& X, const std::vector<InstanceId>& ids,
                                       std::size_t n_ref) {
    if (X.cols() != ids.size())
        throw std::invalid_argument("select_by_factor_analysis: column/id mismatch");
    const std::size_t N = ids.size();
    check_n_ref(n_ref, N);

    std::size_t l = kaiser_factor_count(X);
    const std::size_t l_max = std::min(X.rows(), N) - 1;
    if (l > l_max) l = std::max<std::size_t>(1, l_max);

    const FactorModel fa = factor_analysis(X, l);
    Matrix scores = fa.factors;  // l x N
    if (l >= 2) {
        const VarimaxResult vr = varimax(fa.loadings);
        // Scores follow the rotation: H' = R^T H.
        scores = matmul(vr.rotation.transposed(), fa.factors);
    }

    const std::vector<std::size_t> counts = allocate_factor_counts(n_ref, l);
    std::vector<bool> taken(N, false);
    ReferenceSet ref;
    ref.selector_name = "factor_analysis";
    for (std::size_t k = 0; k < l; ++k) {
        if (counts[k] == 0) continue;
        std::vector<std::size_t> order(N);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const double va = std::fabs(scores(k, a)), vb = std::fabs(scores(k, b));
            if (va != vb) return va > vb;
            return a < b;
        });
        std::size_t picked = 0;
        for (std::size_t i : order) {
            if (taken[i]) continue;  // already selected by an earlier factor
            taken[i] = true;
            ref.instance_ids.push_back(ids[i]);
            if (++picked == counts[k]) break;
        }
        if (picked < counts[k])
            throw std::runtime_error("select_by_factor_analysis: ran out of candidates");
    }
    return ref;
}

ReferenceSet select_random(const std::vector<InstanceId>& train_ids, std::size_t n_ref,
                           std::uint64_t seed) {
    check_n_ref(n_ref, train_ids.size());
    std::vector<InstanceId> pool = train_ids;
    Rng rng(seed);
    rng.shuffle(pool);
    ReferenceSet ref;
    ref.selector_name = "random";
    ref.instance_ids.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_ref));
    return ref;
}

ReferenceSet select_random_best_of_20(
    const std::vector<InstanceId>& train_ids, std::size_t n_ref, std::uint64_t seed,
    const std::function<double(const ReferenceSet&)>& evaluate) {
    if (!evaluate)
        throw std::invalid_argument("select_random_best_of_20: evaluation callback required");
    check_n_ref(n_ref, train_ids.size());
    constexpr std::size_t kDraws = 20;
    std::vector<ReferenceSet> draws;
    draws.reserve(kDraws);
    for (std::size_t t = 0; t < kDraws; ++t)
        draws.push_back(select_random(train_ids, n_ref, derive_seed(seed, t)));

    double best_score = -std::numeric_limits<double>::infinity();
    std::size_t best_idx = 0;
    for (std::size_t t = 0; t < kDraws; ++t) {
        double score;
        try {
            score = evaluate(draws[t]);
        } catch (const std::exception& e) {
            throw std::runtime_error("select_random_best_of_20: candidate " + std::to_string(t) +
                                     ": " + e.what());
        }
        if (score > best_score) {
            best_score = score;
            best_idx = t;
        }
    }
    ReferenceSet ref = draws[best_idx];
    ref.selector_name = "random_best_of_20";
    return ref;
}

ReferenceSet run_selector(const SelectorSpec& spec, const SelectorInputs& inputs) {
    if (!inputs.train_matrix) throw std::invalid_argument("run_selector: train matrix required");
    const std::vector<InstanceId>& train_ids = inputs.train_matrix->instance_ids();
    ReferenceSet ref;
    switch (spec.method) {
        case SelectorMethod::random:
            ref = select_random(train_ids, spec.n_ref, spec.seed);
            break;
        case SelectorMethod::random_best_of_20:
            ref = select_random_best_of_20(train_ids, spec.n_ref, spec.seed, inputs.evaluate);
            break;
        case SelectorMethod::clustering:
        case SelectorMethod::factor_analysis: {
            if (!inputs.train_store)
                throw std::invalid_argument("run_selector: train store required");
            const Matrix X = build_feature_matrix(spec.feature_source, *inputs.train_matrix,
                                                  *inputs.train_store, inputs.irt);
            ref = spec.method == SelectorMethod::clustering
                      ? select_by_clustering(X, train_ids, spec.n_ref, spec.seed)
                      : select_by_factor_analysis(X, train_ids, spec.n_ref);
            break;
        }
    }
    ref.selector_name = spec.name();
    ref.selector_config_digest = digest_of(spec);
    return ref;
}

}  // namespace refpred
