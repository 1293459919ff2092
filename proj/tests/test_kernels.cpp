#include <doctest.h>

#include <cmath>

#include "refpred/kernels.hpp"
#include "refpred/parallel.hpp"
#include "refpred/rng.hpp"

using namespace refpred;

namespace {

struct Fixture {
    Matrix X;
    std::vector<std::uint8_t> y;
    std::vector<double> w;

    explicit Fixture(std::uint64_t seed, std::size_t m = 777, std::size_t d = 23) {
        Rng rng(seed);
        X = Matrix(m, d);
        for (double& v : X.storage()) v = rng.normal();
        y.resize(m);
        for (auto& v : y) v = rng.bernoulli(0.5) ? 1 : 0;
        w.resize(d);
        for (double& v : w) v = 0.1 * rng.normal();
    }
};

}  // namespace

TEST_CASE("parallel logreg gradient matches the serial reference") {
    const Fixture f(1);
    const auto serial = kernels::logreg_data_grad_serial(f.X, f.y, f.w, 0.3);
    const auto parallel = kernels::logreg_data_grad(f.X, f.y, f.w, 0.3);
    CHECK(parallel.mean_loss == doctest::Approx(serial.mean_loss).epsilon(1e-12));
    CHECK(parallel.grad_b == doctest::Approx(serial.grad_b).epsilon(1e-12));
    for (std::size_t j = 0; j < f.w.size(); ++j)
        CHECK(parallel.grad_w[j] == doctest::Approx(serial.grad_w[j]).epsilon(1e-12));
}

TEST_CASE("blocked reductions do not depend on the thread budget") {
    const Fixture f(2);
    const int hw = max_threads();
    set_max_threads(1);
    const auto one = kernels::logreg_data_grad(f.X, f.y, f.w, -0.2);
    set_max_threads(2);
    const auto two = kernels::logreg_data_grad(f.X, f.y, f.w, -0.2);
    set_max_threads(hw);
    // Identical bits, not just close: the block decomposition is fixed.
    CHECK(one.mean_loss == two.mean_loss);
    CHECK(one.grad_b == two.grad_b);
    CHECK(one.grad_w == two.grad_w);
}

TEST_CASE("kmeans assignment parallel/serial agree exactly") {
    Rng rng(3);
    Matrix points(321, 7), centroids(9, 7);
    for (double& v : points.storage()) v = rng.normal();
    for (double& v : centroids.storage()) v = rng.normal();
    std::vector<int> a1, a2;
    std::vector<double> d1, d2;
    kernels::kmeans_assign_serial(points, centroids, a1, d1);
    kernels::kmeans_assign(points, centroids, a2, d2);
    CHECK(a1 == a2);
    CHECK(d1 == d2);
}

TEST_CASE("cosine matrix parallel/serial agree exactly") {
    Rng rng(4);
    Matrix rows(101, 13), refs(17, 13);
    for (double& v : rows.storage()) v = rng.normal();
    for (double& v : refs.storage()) v = rng.normal();
    const Matrix a = kernels::cosine_matrix_serial(rows, refs);
    const Matrix b = kernels::cosine_matrix(rows, refs);
    CHECK(a == b);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t r = 0; r < a.cols(); ++r) {
            CHECK(a(i, r) <= 1.0 + 1e-12);
            CHECK(a(i, r) >= -1.0 - 1e-12);
        }
}

TEST_CASE("cosine matrix rejects zero rows") {
    Matrix rows(2, 3, 0.0);
    rows(0, 0) = 1.0;  // row 1 stays zero
    Matrix refs(1, 3, 0.0);
    refs(0, 1) = 1.0;
    CHECK_THROWS_AS(kernels::cosine_matrix(rows, refs), std::invalid_argument);
    CHECK_THROWS_AS(kernels::cosine_matrix_serial(rows, refs), std::invalid_argument);
}

TEST_CASE("irt gradient parallel/serial agree") {
    Rng rng(5);
    const std::size_t n = 12, N = 31, k = 3;
    Matrix caps(n, k), dems(N, k);
    for (double& v : caps.storage()) v = rng.normal();
    for (double& v : dems.storage()) v = rng.normal();
    std::vector<double> inter(N);
    for (double& v : inter) v = rng.normal();
    std::vector<std::uint8_t> z(n * N);
    for (auto& v : z) v = rng.bernoulli(0.5) ? 1 : 0;

    const auto serial = kernels::irt_loglik_grad_serial(z, n, N, caps, dems, inter, 1e-2);
    const auto parallel = kernels::irt_loglik_grad(z, n, N, caps, dems, inter, 1e-2);
    CHECK(parallel.penalized_ll == doctest::Approx(serial.penalized_ll).epsilon(1e-12));
    // Row-owned outputs are bit-identical; only the scalar is a reduction.
    CHECK(parallel.grad_capabilities == serial.grad_capabilities);
    CHECK(parallel.grad_demands == serial.grad_demands);
    CHECK(parallel.grad_intercepts == serial.grad_intercepts);
}

TEST_CASE("blocked_sum equals a serial sum") {
    Rng rng(6);
    std::vector<double> v(100000);
    for (double& x : v) x = rng.normal();
    double serial = 0.0;
    for (std::size_t b = 0; b < v.size(); b += kReduceBlock) {
        double s = 0.0;
        for (std::size_t i = b; i < std::min(v.size(), b + kReduceBlock); ++i) s += v[i];
        serial += s;
    }
    CHECK(blocked_sum(v.size(), [&](std::size_t i) { return v[i]; }) == serial);
}
