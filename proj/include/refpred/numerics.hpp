#pragma once

#include <cstdint>
#include <vector>

#include "refpred/matrix.hpp"

namespace refpred {

struct KmeansResult {
    std::vector<int> assignments;            // one entry per point
    Matrix centroids;                        // k x d
    std::vector<std::size_t> medoid_indices; // per cluster, row index closest to centroid
    std::vector<double> sse_trace;           // total within-cluster SSE per Lloyd iteration
    std::vector<std::size_t> empty_clusters; // clusters that ended with no members
};

// Lloyd's algorithm with k-means++ seeding. Points are rows of X.
// Deterministic for a fixed seed; all ties break to the lowest index.
KmeansResult kmeans(const Matrix& X, std::size_t k, std::uint64_t seed,
                    std::size_t max_iter = 300, double tol = 1e-6);

struct SymEig {
    std::vector<double> values;  // ascending
    Matrix vectors;              // column j is the eigenvector of values[j]
};

// Symmetric eigendecomposition via Householder tridiagonalization followed
// by implicit-shift QL. A must be symmetric; only the lower triangle is read.
SymEig sym_eig(const Matrix& A);

// Number of eigenvalues of the sample correlation matrix of the rows of X
// (features x samples) strictly above 1, floored at 1. Zero-variance rows
// are dropped; throws if every row is constant.
std::size_t kaiser_factor_count(const Matrix& X);

struct FactorModel {
    Matrix loadings;                        // d x l
    Matrix factors;                         // l x N, posterior-mean scores
    std::vector<double> noise_variances;    // length d, strictly positive
    std::vector<double> log_likelihood_trace;  // average per-sample, per EM iteration
    bool converged = false;
};

// Maximum-likelihood factor analysis with diagonal noise, fit by EM on the
// row-standardized input (features x samples). Stops when the average
// log-likelihood improves by less than tol.
FactorModel factor_analysis(const Matrix& X, std::size_t l, std::size_t max_iter = 1000,
                            double tol = 1e-4);

struct VarimaxResult {
    Matrix rotated;                  // W R
    Matrix rotation;                 // orthogonal R
    std::vector<double> criterion_trace;  // per sweep
};

// Sum over factors of the variance of squared loadings.
double varimax_criterion(const Matrix& W);

// Orthogonal varimax rotation via cyclic pairwise planar rotations, each of
// which maximizes the criterion exactly in its plane. l = 1 is the identity.
VarimaxResult varimax(const Matrix& W, std::size_t max_iter = 100, double tol = 1e-6);

double cosine_similarity(const std::vector<double>& u, const std::vector<double>& v);

// Mann-Whitney AUC with mid-ranks for ties. Throws if labels are single-class.
double auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels);

}  // namespace refpred
