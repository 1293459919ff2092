#include "refpred/kernels.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "refpred/parallel.hpp"

namespace refpred::kernels {

LogregGrad logreg_data_grad_serial(const Matrix& X, const std::vector<std::uint8_t>& y,
                                   const std::vector<double>& w, double b) {
    const std::size_t m = X.rows(), d = X.cols();
    if (y.size() != m || w.size() != d)
        throw std::invalid_argument("logreg_data_grad: shape mismatch");
    LogregGrad out;
    out.grad_w.assign(d, 0.0);
    double loss = 0.0, gb = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = X.row_ptr(i);
        double z = b;
        for (std::size_t j = 0; j < d; ++j) z += row[j] * w[j];
        const double yi = static_cast<double>(y[i]);
        loss += log1p_exp(z) - yi * z;
        const double r = sigmoid(z) - yi;
        gb += r;
        for (std::size_t j = 0; j < d; ++j) out.grad_w[j] += r * row[j];
    }
    const double inv_m = m > 0 ? 1.0 / static_cast<double>(m) : 0.0;
    out.mean_loss = loss * inv_m;
    out.grad_b = gb * inv_m;
    for (std::size_t j = 0; j < d; ++j) out.grad_w[j] *= inv_m;
    return out;
}

LogregGrad logreg_data_grad(const Matrix& X, const std::vector<std::uint8_t>& y,
                            const std::vector<double>& w, double b) {
    const std::size_t m = X.rows(), d = X.cols();
    if (y.size() != m || w.size() != d)
        throw std::invalid_argument("logreg_data_grad: shape mismatch");
    LogregGrad out;
    out.grad_w.assign(d, 0.0);
    // acc layout: [grad_w..., grad_b, loss]
    std::vector<double> acc(d + 2, 0.0);
    blocked_accumulate(
        m, d + 2,
        [&](std::size_t i, double* a) {
            const double* row = X.row_ptr(i);
            double z = b;
            for (std::size_t j = 0; j < d; ++j) z += row[j] * w[j];
            const double yi = static_cast<double>(y[i]);
            const double r = sigmoid(z) - yi;
            for (std::size_t j = 0; j < d; ++j) a[j] += r * row[j];
            a[d] += r;
            a[d + 1] += log1p_exp(z) - yi * z;
        },
        acc.data());
    const double inv_m = m > 0 ? 1.0 / static_cast<double>(m) : 0.0;
    for (std::size_t j = 0; j < d; ++j) out.grad_w[j] = acc[j] * inv_m;
    out.grad_b = acc[d] * inv_m;
    out.mean_loss = acc[d + 1] * inv_m;
    return out;
}

double logreg_data_loss(const Matrix& X, const std::vector<std::uint8_t>& y,
                        const std::vector<double>& w, double b) {
    const std::size_t m = X.rows(), d = X.cols();
    if (y.size() != m || w.size() != d)
        throw std::invalid_argument("logreg_data_loss: shape mismatch");
    const double total = blocked_sum(m, [&](std::size_t i) {
        const double* row = X.row_ptr(i);
        double z = b;
        for (std::size_t j = 0; j < d; ++j) z += row[j] * w[j];
        return log1p_exp(z) - static_cast<double>(y[i]) * z;
    });
    return m > 0 ? total / static_cast<double>(m) : 0.0;
}

std::vector<double> logreg_margins(const Matrix& X, const std::vector<double>& w, double b) {
    if (w.size() != X.cols()) throw std::invalid_argument("logreg_margins: shape mismatch");
    std::vector<double> z(X.rows());
    parallel_for(X.rows(), [&](std::size_t i) {
        const double* row = X.row_ptr(i);
        double s = b;
        for (std::size_t j = 0; j < X.cols(); ++j) s += row[j] * w[j];
        z[i] = s;
    });
    return z;
}

namespace {

inline void assign_one(const Matrix& points, const Matrix& centroids, std::size_t i,
                       std::vector<int>& assignment, std::vector<double>& dist2) {
    const double* p = points.row_ptr(i);
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.rows(); ++c) {
        const double* q = centroids.row_ptr(c);
        double d = 0.0;
        for (std::size_t j = 0; j < points.cols(); ++j) {
            const double diff = p[j] - q[j];
            d += diff * diff;
        }
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(c);
        }
    }
    assignment[i] = best;
    dist2[i] = best_d;
}

}  // namespace

void kmeans_assign_serial(const Matrix& points, const Matrix& centroids,
                          std::vector<int>& assignment, std::vector<double>& dist2) {
    if (points.cols() != centroids.cols())
        throw std::invalid_argument("kmeans_assign: dimension mismatch");
    assignment.assign(points.rows(), 0);
    dist2.assign(points.rows(), 0.0);
    for (std::size_t i = 0; i < points.rows(); ++i) assign_one(points, centroids, i, assignment, dist2);
}

void kmeans_assign(const Matrix& points, const Matrix& centroids,
                   std::vector<int>& assignment, std::vector<double>& dist2) {
    if (points.cols() != centroids.cols())
        throw std::invalid_argument("kmeans_assign: dimension mismatch");
    assignment.assign(points.rows(), 0);
    dist2.assign(points.rows(), 0.0);
    parallel_for(points.rows(),
                 [&](std::size_t i) { assign_one(points, centroids, i, assignment, dist2); });
}

namespace {

struct IrtShapes {
    std::size_t n, N, k;
};

IrtShapes check_irt_shapes(const std::vector<std::uint8_t>& z, std::size_t n_llms,
                           std::size_t n_items, const Matrix& capabilities,
                           const Matrix& demands, const std::vector<double>& intercepts) {
    if (z.size() != n_llms * n_items || capabilities.rows() != n_llms ||
        demands.rows() != n_items || capabilities.cols() != demands.cols() ||
        intercepts.size() != n_items)
        throw std::invalid_argument("irt_loglik_grad: shape mismatch");
    return {n_llms, n_items, capabilities.cols()};
}

inline double irt_cell_ll(const std::vector<std::uint8_t>& z, std::size_t N,
                          const Matrix& capabilities, const Matrix& demands,
                          const std::vector<double>& intercepts, std::size_t j,
                          std::size_t i) {
    const double* th = capabilities.row_ptr(j);
    const double* a = demands.row_ptr(i);
    double logit = intercepts[i];
    for (std::size_t t = 0; t < capabilities.cols(); ++t) logit += th[t] * a[t];
    const double yi = static_cast<double>(z[j * N + i]);
    return yi * logit - log1p_exp(logit);
}

double penalty_term(const Matrix& capabilities, const Matrix& demands, double l2) {
    double sq = 0.0;
    for (double v : capabilities.storage()) sq += v * v;
    for (double v : demands.storage()) sq += v * v;
    return 0.5 * l2 * sq;
}

}  // namespace

double irt_penalized_ll(const std::vector<std::uint8_t>& z, std::size_t n_llms,
                        std::size_t n_items, const Matrix& capabilities,
                        const Matrix& demands, const std::vector<double>& intercepts,
                        double l2) {
    const IrtShapes s = check_irt_shapes(z, n_llms, n_items, capabilities, demands, intercepts);
    const double ll = blocked_sum(s.n * s.N, [&](std::size_t cell) {
        return irt_cell_ll(z, s.N, capabilities, demands, intercepts, cell / s.N, cell % s.N);
    });
    return ll - penalty_term(capabilities, demands, l2);
}

IrtGrad irt_loglik_grad_serial(const std::vector<std::uint8_t>& z, std::size_t n_llms,
                               std::size_t n_items, const Matrix& capabilities,
                               const Matrix& demands, const std::vector<double>& intercepts,
                               double l2) {
    const IrtShapes s = check_irt_shapes(z, n_llms, n_items, capabilities, demands, intercepts);
    IrtGrad out;
    out.grad_capabilities = Matrix(s.n, s.k, 0.0);
    out.grad_demands = Matrix(s.N, s.k, 0.0);
    out.grad_intercepts.assign(s.N, 0.0);

    double ll = 0.0;
    for (std::size_t j = 0; j < s.n; ++j) {
        const double* th = capabilities.row_ptr(j);
        for (std::size_t i = 0; i < s.N; ++i) {
            const double* a = demands.row_ptr(i);
            double logit = intercepts[i];
            for (std::size_t t = 0; t < s.k; ++t) logit += th[t] * a[t];
            const double yi = static_cast<double>(z[j * s.N + i]);
            ll += yi * logit - log1p_exp(logit);
            const double r = yi - sigmoid(logit);
            for (std::size_t t = 0; t < s.k; ++t) {
                out.grad_capabilities(j, t) += r * a[t];
                out.grad_demands(i, t) += r * th[t];
            }
            out.grad_intercepts[i] += r;
        }
    }
    for (std::size_t j = 0; j < s.n; ++j)
        for (std::size_t t = 0; t < s.k; ++t)
            out.grad_capabilities(j, t) -= l2 * capabilities(j, t);
    for (std::size_t i = 0; i < s.N; ++i)
        for (std::size_t t = 0; t < s.k; ++t) out.grad_demands(i, t) -= l2 * demands(i, t);
    out.penalized_ll = ll - penalty_term(capabilities, demands, l2);
    return out;
}

IrtGrad irt_loglik_grad(const std::vector<std::uint8_t>& z, std::size_t n_llms,
                        std::size_t n_items, const Matrix& capabilities,
                        const Matrix& demands, const std::vector<double>& intercepts,
                        double l2) {
    const IrtShapes s = check_irt_shapes(z, n_llms, n_items, capabilities, demands, intercepts);
    IrtGrad out;
    out.grad_capabilities = Matrix(s.n, s.k, 0.0);
    out.grad_demands = Matrix(s.N, s.k, 0.0);
    out.grad_intercepts.assign(s.N, 0.0);

    // Capability gradients: each LLM row is summed over items by one index.
    parallel_for(s.n, [&](std::size_t j) {
        const double* th = capabilities.row_ptr(j);
        double* gth = out.grad_capabilities.row_ptr(j);
        for (std::size_t i = 0; i < s.N; ++i) {
            const double* a = demands.row_ptr(i);
            double logit = intercepts[i];
            for (std::size_t t = 0; t < s.k; ++t) logit += th[t] * a[t];
            const double r = static_cast<double>(z[j * s.N + i]) - sigmoid(logit);
            for (std::size_t t = 0; t < s.k; ++t) gth[t] += r * a[t];
        }
        for (std::size_t t = 0; t < s.k; ++t) gth[t] -= l2 * th[t];
    });

    // Demand and intercept gradients: each item column owned by one index.
    parallel_for(s.N, [&](std::size_t i) {
        const double* a = demands.row_ptr(i);
        double* ga = out.grad_demands.row_ptr(i);
        double gb = 0.0;
        for (std::size_t j = 0; j < s.n; ++j) {
            const double* th = capabilities.row_ptr(j);
            double logit = intercepts[i];
            for (std::size_t t = 0; t < s.k; ++t) logit += th[t] * a[t];
            const double r = static_cast<double>(z[j * s.N + i]) - sigmoid(logit);
            for (std::size_t t = 0; t < s.k; ++t) ga[t] += r * th[t];
            gb += r;
        }
        for (std::size_t t = 0; t < s.k; ++t) ga[t] -= l2 * a[t];
        out.grad_intercepts[i] = gb;
    });

    out.penalized_ll =
        irt_penalized_ll(z, n_llms, n_items, capabilities, demands, intercepts, l2);
    return out;
}

namespace {

inline void cosine_row(const Matrix& rows, const Matrix& refs,
                       const std::vector<double>& ref_norms, std::size_t i, Matrix& sims) {
    const double* u = rows.row_ptr(i);
    double nu = 0.0;
    for (std::size_t j = 0; j < rows.cols(); ++j) nu += u[j] * u[j];
    nu = std::sqrt(nu);
    if (nu == 0.0) throw std::invalid_argument("cosine_matrix: zero vector");
    for (std::size_t r = 0; r < refs.rows(); ++r) {
        const double* v = refs.row_ptr(r);
        double dot = 0.0;
        for (std::size_t j = 0; j < rows.cols(); ++j) dot += u[j] * v[j];
        sims(i, r) = dot / (nu * ref_norms[r]);
    }
}

std::vector<double> ref_norms_of(const Matrix& refs) {
    std::vector<double> norms(refs.rows());
    for (std::size_t r = 0; r < refs.rows(); ++r) {
        const double* v = refs.row_ptr(r);
        double s = 0.0;
        for (std::size_t j = 0; j < refs.cols(); ++j) s += v[j] * v[j];
        norms[r] = std::sqrt(s);
        if (norms[r] == 0.0) throw std::invalid_argument("cosine_matrix: zero reference vector");
    }
    return norms;
}

}  // namespace

Matrix cosine_matrix_serial(const Matrix& rows, const Matrix& refs) {
    if (rows.cols() != refs.cols())
        throw std::invalid_argument("cosine_matrix: dimension mismatch");
    const std::vector<double> norms = ref_norms_of(refs);
    Matrix sims(rows.rows(), refs.rows());
    for (std::size_t i = 0; i < rows.rows(); ++i) cosine_row(rows, refs, norms, i, sims);
    return sims;
}

Matrix cosine_matrix(const Matrix& rows, const Matrix& refs) {
    if (rows.cols() != refs.cols())
        throw std::invalid_argument("cosine_matrix: dimension mismatch");
    const std::vector<double> norms = ref_norms_of(refs);
    Matrix sims(rows.rows(), refs.rows());
    std::exception_ptr err;
    parallel_for(rows.rows(), [&](std::size_t i) {
        try {
            cosine_row(rows, refs, norms, i, sims);
        } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
            if (!err) err = std::current_exception();
        }
    });
    if (err) std::rethrow_exception(err);
    return sims;
}

}  // namespace refpred::kernels
