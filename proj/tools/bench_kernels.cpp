// Times the serial reference kernels against the OpenMP versions and the
// two trainers at 1 vs all threads. Sizes mirror a full-scale generic
// assessor fit.

#include <chrono>
#include <cstdio>
#include <vector>

#include "refpred/classifiers.hpp"
#include "refpred/kernels.hpp"
#include "refpred/matrix.hpp"
#include "refpred/parallel.hpp"
#include "refpred/rng.hpp"

using namespace refpred;

namespace {

double seconds_of(const std::function<void()>& fn, int reps) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count() / reps;
}

void report(const char* name, double serial_s, double parallel_s) {
    std::printf("%-28s serial %8.4f s   parallel %8.4f s   speedup %.2fx\n", name, serial_s,
                parallel_s, serial_s / parallel_s);
}

}  // namespace

int main() {
    Rng rng(42);
    const std::size_t M = 40000, d = 300;
    Matrix X(M, d);
    for (double& v : X.storage()) v = rng.normal();
    std::vector<std::uint8_t> y(M);
    for (auto& v : y) v = rng.bernoulli(0.5) ? 1 : 0;
    std::vector<double> w(d);
    for (double& v : w) v = 0.01 * rng.normal();

    std::printf("threads available: %d\n", max_threads());

    {
        kernels::LogregGrad g;
        const double ts = seconds_of([&] { g = kernels::logreg_data_grad_serial(X, y, w, 0.1); }, 3);
        const double tp = seconds_of([&] { g = kernels::logreg_data_grad(X, y, w, 0.1); }, 3);
        report("logreg gradient 40000x300", ts, tp);
    }

    {
        Matrix centroids(100, d);
        for (double& v : centroids.storage()) v = rng.normal();
        std::vector<int> assign;
        std::vector<double> dist2;
        const double ts =
            seconds_of([&] { kernels::kmeans_assign_serial(X, centroids, assign, dist2); }, 3);
        const double tp =
            seconds_of([&] { kernels::kmeans_assign(X, centroids, assign, dist2); }, 3);
        report("kmeans assign 40000x300 k=100", ts, tp);
    }

    {
        Matrix rows(4000, 128), refs(100, 128);
        for (double& v : rows.storage()) v = rng.normal();
        for (double& v : refs.storage()) v = rng.normal();
        Matrix sims;
        const double ts = seconds_of([&] { sims = kernels::cosine_matrix_serial(rows, refs); }, 3);
        const double tp = seconds_of([&] { sims = kernels::cosine_matrix(rows, refs); }, 3);
        report("cosine matrix 4000x128 r=100", ts, tp);
    }

    {
        const std::size_t n = 30, N = 500, k = 10;
        Matrix caps(n, k), dems(N, k);
        for (double& v : caps.storage()) v = rng.normal();
        for (double& v : dems.storage()) v = rng.normal();
        std::vector<double> inter(N);
        for (double& v : inter) v = rng.normal();
        std::vector<std::uint8_t> z(n * N);
        for (auto& v : z) v = rng.bernoulli(0.5) ? 1 : 0;
        kernels::IrtGrad g;
        const double ts = seconds_of(
            [&] { g = kernels::irt_loglik_grad_serial(z, n, N, caps, dems, inter, 1e-2); }, 10);
        const double tp = seconds_of(
            [&] { g = kernels::irt_loglik_grad(z, n, N, caps, dems, inter, 1e-2); }, 10);
        report("irt gradient 30x500 k=10", ts, tp);
    }

    {
        Matrix Xs(8000, 60);
        for (double& v : Xs.storage()) v = rng.normal();
        std::vector<std::uint8_t> ys(8000);
        for (std::size_t i = 0; i < ys.size(); ++i)
            ys[i] = (Xs(i, 0) + 0.5 * Xs(i, 1) + 0.2 * rng.normal()) > 0 ? 1 : 0;
        const int hw = max_threads();
        set_max_threads(1);
        const double ts = seconds_of([&] { train_gbdt(Xs, ys, 50, 0.1, 3); }, 1);
        set_max_threads(hw);
        const double tp = seconds_of([&] { train_gbdt(Xs, ys, 50, 0.1, 3); }, 1);
        report("gbdt 8000x60 r=50 d=3", ts, tp);

        set_max_threads(1);
        const double ls = seconds_of(
            [&] { train_logreg(Xs, ys, ClassifierFamily::logreg_l2, 1e-3, 200); }, 1);
        set_max_threads(hw);
        const double lp = seconds_of(
            [&] { train_logreg(Xs, ys, ClassifierFamily::logreg_l2, 1e-3, 200); }, 1);
        report("logreg fit 8000x60 200 it", ls, lp);
    }

    return 0;
}
