#pragma once

#include <cstdint>
#include <vector>

#include "refpred/matrix.hpp"

namespace refpred::kernels {

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// log(1 + e^x) without overflow.
inline double log1p_exp(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

struct LogregGrad {
    double mean_loss = 0.0;          // mean logistic loss, no penalty
    std::vector<double> grad_w;      // d(mean loss)/dw
    double grad_b = 0.0;
};

// Mean logistic loss of sigma(X w + b) against y, plus its gradient.
// The OpenMP version uses fixed-block reductions, so its result does not
// depend on the thread count.
LogregGrad logreg_data_grad(const Matrix& X, const std::vector<std::uint8_t>& y,
                            const std::vector<double>& w, double b);
LogregGrad logreg_data_grad_serial(const Matrix& X, const std::vector<std::uint8_t>& y,
                                   const std::vector<double>& w, double b);

double logreg_data_loss(const Matrix& X, const std::vector<std::uint8_t>& y,
                        const std::vector<double>& w, double b);

// Margins X w + b, one per row.
std::vector<double> logreg_margins(const Matrix& X, const std::vector<double>& w, double b);

// Nearest-centroid assignment with squared Euclidean distance.
// Ties break to the lowest centroid index. Outputs are per-point, so the
// parallel and serial versions are bit-identical.
void kmeans_assign(const Matrix& points, const Matrix& centroids,
                   std::vector<int>& assignment, std::vector<double>& dist2);
void kmeans_assign_serial(const Matrix& points, const Matrix& centroids,
                          std::vector<int>& assignment, std::vector<double>& dist2);

struct IrtGrad {
    double penalized_ll = 0.0;
    Matrix grad_capabilities;        // n x k
    Matrix grad_demands;             // N x k
    std::vector<double> grad_intercepts;
};

// Penalized Bernoulli log-likelihood of z ~ sigma(theta a^T + b) and its
// gradients. The l2 penalty applies to capabilities and demands only.
// Per-row/per-column gradients are owned by single indices, so parallel and
// serial agree bit-for-bit except the scalar likelihood (blocked reduction).
IrtGrad irt_loglik_grad(const std::vector<std::uint8_t>& z, std::size_t n_llms,
                        std::size_t n_items, const Matrix& capabilities,
                        const Matrix& demands, const std::vector<double>& intercepts,
                        double l2);
IrtGrad irt_loglik_grad_serial(const std::vector<std::uint8_t>& z, std::size_t n_llms,
                               std::size_t n_items, const Matrix& capabilities,
                               const Matrix& demands, const std::vector<double>& intercepts,
                               double l2);

double irt_penalized_ll(const std::vector<std::uint8_t>& z, std::size_t n_llms,
                        std::size_t n_items, const Matrix& capabilities,
                        const Matrix& demands, const std::vector<double>& intercepts,
                        double l2);

// sims(i, r) = cosine(rows.row(i), refs.row(r)). Throws on zero rows.
Matrix cosine_matrix(const Matrix& rows, const Matrix& refs);
Matrix cosine_matrix_serial(const Matrix& rows, const Matrix& refs);

}  // namespace refpred::kernels
