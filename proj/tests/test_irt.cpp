#include <doctest.h>

#include <cmath>

#include "refpred/irt.hpp"
#include "refpred/kernels.hpp"
#include "refpred/rng.hpp"

using namespace refpred;

namespace {

SuccessMatrix random_matrix(std::size_t n, std::size_t N, std::uint64_t seed, double p = 0.5) {
    Rng rng(seed);
    std::vector<LlmId> llms;
    for (std::size_t j = 0; j < n; ++j) llms.push_back("m" + std::to_string(j));
    std::vector<InstanceId> insts;
    for (std::size_t i = 0; i < N; ++i) insts.push_back("i" + std::to_string(i));
    std::vector<std::uint8_t> z(n * N);
    for (auto& v : z) v = rng.bernoulli(p) ? 1 : 0;
    bool any0 = false, any1 = false;
    for (auto v : z) (v ? any1 : any0) = true;
    if (!any0) z[0] = 0;
    if (!any1) z[1] = 1;
    return SuccessMatrix(llms, insts, std::move(z));
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0, va = 0, vb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        cov += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    return cov / std::sqrt(va * vb);
}

}  // namespace

TEST_CASE("irt analytic gradient matches central finite differences") {
    Rng rng(31);
    const std::size_t n = 5, N = 8, k = 2;
    Matrix caps(n, k), dems(N, k);
    for (double& v : caps.storage()) v = rng.normal();
    for (double& v : dems.storage()) v = rng.normal();
    std::vector<double> inter(N);
    for (double& v : inter) v = rng.normal();
    std::vector<std::uint8_t> z(n * N);
    for (auto& v : z) v = rng.bernoulli(0.5) ? 1 : 0;
    const double l2 = 1e-2, h = 1e-5;

    const kernels::IrtGrad g = kernels::irt_loglik_grad(z, n, N, caps, dems, inter, l2);

    const auto ll_at = [&](const Matrix& c, const Matrix& d, const std::vector<double>& b) {
        return kernels::irt_penalized_ll(z, n, N, c, d, b, l2);
    };
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t t = 0; t < k; ++t) {
            Matrix up = caps, dn = caps;
            up(j, t) += h;
            dn(j, t) -= h;
            const double fd = (ll_at(up, dems, inter) - ll_at(dn, dems, inter)) / (2 * h);
            CHECK(std::fabs(g.grad_capabilities(j, t) - fd) /
                      std::max(1.0, std::fabs(fd)) < 1e-4);
        }
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t t = 0; t < k; ++t) {
            Matrix up = dems, dn = dems;
            up(i, t) += h;
            dn(i, t) -= h;
            const double fd = (ll_at(caps, up, inter) - ll_at(caps, dn, inter)) / (2 * h);
            CHECK(std::fabs(g.grad_demands(i, t) - fd) / std::max(1.0, std::fabs(fd)) < 1e-4);
        }
    for (std::size_t i = 0; i < N; ++i) {
        std::vector<double> up = inter, dn = inter;
        up[i] += h;
        dn[i] -= h;
        const double fd = (ll_at(caps, dems, up) - ll_at(caps, dems, dn)) / (2 * h);
        CHECK(std::fabs(g.grad_intercepts[i] - fd) / std::max(1.0, std::fabs(fd)) < 1e-4);
    }
}

TEST_CASE("likelihood is invariant under latent orthogonal rotations") {
    Rng rng(37);
    const std::size_t n = 6, N = 10, k = 3;
    Matrix caps(n, k), dems(N, k);
    for (double& v : caps.storage()) v = rng.normal();
    for (double& v : dems.storage()) v = rng.normal();
    std::vector<double> inter(N);
    for (double& v : inter) v = rng.normal();
    std::vector<std::uint8_t> z(n * N);
    for (auto& v : z) v = rng.bernoulli(0.5) ? 1 : 0;

    // Random orthogonal Q from Gram-Schmidt on a normal matrix.
    Matrix Q(k, k);
    for (double& v : Q.storage()) v = rng.normal();
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t o = 0; o < c; ++o) {
            double dot = 0;
            for (std::size_t r = 0; r < k; ++r) dot += Q(r, c) * Q(r, o);
            for (std::size_t r = 0; r < k; ++r) Q(r, c) -= dot * Q(r, o);
        }
        double norm = 0;
        for (std::size_t r = 0; r < k; ++r) norm += Q(r, c) * Q(r, c);
        norm = std::sqrt(norm);
        for (std::size_t r = 0; r < k; ++r) Q(r, c) /= norm;
    }

    const double base = kernels::irt_penalized_ll(z, n, N, caps, dems, inter, 1e-2);
    const double rotated =
        kernels::irt_penalized_ll(z, n, N, matmul(caps, Q), matmul(dems, Q), inter, 1e-2);
    CHECK(std::fabs(base - rotated) < 1e-10 * std::fabs(base));
}

TEST_CASE("fit_irt rejects degenerate matrices") {
    const SuccessMatrix ones({"m1", "m2"}, {"a", "b"}, {1, 1, 1, 1});
    CHECK_THROWS_AS(fit_irt(ones, 2), std::invalid_argument);
}

TEST_CASE("fit_irt trace never decreases and probabilities stay in (0,1)") {
    const SuccessMatrix m = random_matrix(8, 30, 13);
    const IrtModel model = fit_irt(m, 2, 1e-2, 60, 1e-7, 5);
    for (std::size_t i = 1; i < model.log_likelihood_trace.size(); ++i)
        CHECK(model.log_likelihood_trace[i] >= model.log_likelihood_trace[i - 1]);
    for (std::size_t j = 0; j < m.n_llms(); ++j)
        for (std::size_t i = 0; i < m.n_instances(); ++i) {
            double logit = model.intercepts[i];
            for (std::size_t t = 0; t < model.k; ++t)
                logit += model.capabilities(j, t) * model.demands(i, t);
            const double p = kernels::sigmoid(logit);
            CHECK(p > 0.0);
            CHECK(p < 1.0);
        }
}

TEST_CASE("fit_irt is deterministic for a fixed seed") {
    const SuccessMatrix m = random_matrix(6, 20, 21);
    const IrtModel a = fit_irt(m, 2, 1e-2, 40, 1e-6, 11);
    const IrtModel b = fit_irt(m, 2, 1e-2, 40, 1e-6, 11);
    CHECK(a.capabilities == b.capabilities);
    CHECK(a.demands == b.demands);
    CHECK(a.intercepts == b.intercepts);
}

TEST_CASE("item_demands carries ids and width k") {
    const SuccessMatrix m = random_matrix(5, 12, 33);
    const IrtModel model = fit_irt(m, 4, 1e-2, 30, 1e-6, 2);
    const FeatureStore demands = item_demands(model);
    CHECK(demands.dim() == 4);
    CHECK(demands.instance_ids() == m.instance_ids());
    const FeatureStore again = item_demands(fit_irt(m, 4, 1e-2, 30, 1e-6, 2));
    CHECK(again.vectors() == demands.vectors());
}

TEST_CASE("one-factor recovery on a small synthetic matrix") {
    Rng rng(99);
    const std::size_t n = 20, N = 300;
    std::vector<double> theta(n), b(N), a(N);
    for (double& v : theta) v = rng.normal();
    for (double& v : a) v = rng.normal();
    for (double& v : b) v = rng.normal();
    std::vector<LlmId> llms;
    for (std::size_t j = 0; j < n; ++j) llms.push_back("m" + std::to_string(j));
    std::vector<InstanceId> insts;
    for (std::size_t i = 0; i < N; ++i) insts.push_back("i" + std::to_string(i));
    std::vector<std::uint8_t> z(n * N);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < N; ++i)
            z[j * N + i] = rng.bernoulli(kernels::sigmoid(theta[j] * a[i] + b[i])) ? 1 : 0;
    const IrtModel model = fit_irt(SuccessMatrix(llms, insts, std::move(z)), 1, 1e-2, 300, 1e-6, 7);

    std::vector<double> fitted(n);
    for (std::size_t j = 0; j < n; ++j) fitted[j] = model.capabilities(j, 0);
    CHECK(std::fabs(pearson(fitted, theta)) >= 0.6);
}

TEST_CASE("irt model serializes to json and back") {
    const SuccessMatrix m = random_matrix(4, 9, 41);
    const IrtModel model = fit_irt(m, 2, 1e-2, 20, 1e-6, 3);
    const IrtModel back = IrtModel::from_json(model.to_json());
    CHECK(back.capabilities == model.capabilities);
    CHECK(back.demands == model.demands);
    CHECK(back.intercepts == model.intercepts);
    CHECK(back.k == model.k);
    CHECK(back.instance_ids == model.instance_ids);
}
