#include "refpred/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "refpred/kernels.hpp"
#include "refpred/parallel.hpp"
#include "refpred/rng.hpp"

namespace refpred {

namespace {

double sq_dist(const double* a, const double* b, std::size_t d) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        const double diff = a[j] - b[j];
        s += diff * diff;
    }
    return s;
}

}  // namespace

KmeansResult kmeans(const Matrix& X, std::size_t k, std::uint64_t seed, std::size_t max_iter,
                    double tol) {
    const std::size_t n = X.rows(), d = X.cols();
    if (n == 0) throw std::invalid_argument("kmeans: empty input");
    if (k < 1 || k > n) throw std::invalid_argument("kmeans: k out of range");
    if (!X.all_finite()) throw std::invalid_argument("kmeans: non-finite input");

    Rng rng(seed);
    Matrix centroids(k, d);
    std::vector<bool> chosen(n, false);

    // k-means++ seeding. When all residual distances are zero (duplicate
    // points), fall back to a uniform draw over unchosen rows.
    std::size_t first = static_cast<std::size_t>(rng.below(n));
    for (std::size_t j = 0; j < d; ++j) centroids(0, j) = X(first, j);
    chosen[first] = true;
    std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d2 = sq_dist(X.row_ptr(i), centroids.row_ptr(c - 1), d);
            if (d2 < min_d2[i]) min_d2[i] = d2;
            total += min_d2[i];
        }
        std::size_t pick = n;
        if (total > 0.0) {
            const double target = rng.uniform01() * total;
            double cum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                cum += min_d2[i];
                if (cum >= target) {
                    pick = i;
                    break;
                }
            }
            if (pick == n) pick = n - 1;
        } else {
            std::vector<std::size_t> unchosen;
            for (std::size_t i = 0; i < n; ++i)
                if (!chosen[i]) unchosen.push_back(i);
            pick = unchosen.empty() ? static_cast<std::size_t>(rng.below(n))
                                    : unchosen[rng.below(unchosen.size())];
        }
        for (std::size_t j = 0; j < d; ++j) centroids(c, j) = X(pick, j);
        chosen[pick] = true;
    }

    KmeansResult res;
    res.assignments.assign(n, 0);
    std::vector<double> dist2(n, 0.0);
    double prev_sse = std::numeric_limits<double>::infinity();
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        kernels::kmeans_assign(X, centroids, res.assignments, dist2);
        double sse = 0.0;
        for (double v : dist2) sse += v;
        res.sse_trace.push_back(sse);

        // Mean update.
        Matrix sums(k, d, 0.0);
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = static_cast<std::size_t>(res.assignments[i]);
            counts[c]++;
            const double* p = X.row_ptr(i);
            double* s = sums.row_ptr(c);
            for (std::size_t j = 0; j < d; ++j) s[j] += p[j];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            for (std::size_t j = 0; j < d; ++j)
                centroids(c, j) = sums(c, j) / static_cast<double>(counts[c]);
        }

        // An empty cluster relocates to the point currently worst served.
        // With fewer distinct points than clusters every candidate sits at
        // distance zero and the cluster stays empty for the caller to see.
        bool relocated = false;
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] != 0) continue;
            std::size_t donor = n;
            double worst = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (dist2[i] > worst) {
                    worst = dist2[i];
                    donor = i;
                }
            }
            if (donor == n) continue;
            for (std::size_t j = 0; j < d; ++j) centroids(c, j) = X(donor, j);
            dist2[donor] = 0.0;
            relocated = true;
        }

        if (!relocated && prev_sse - sse < tol) break;
        prev_sse = sse;
    }

    kernels::kmeans_assign(X, centroids, res.assignments, dist2);
    res.centroids = centroids;

    std::vector<std::size_t> counts(k, 0);
    for (int a : res.assignments) counts[static_cast<std::size_t>(a)]++;
    res.medoid_indices.assign(k, n);
    std::vector<double> best(k, std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = static_cast<std::size_t>(res.assignments[i]);
        const double d2 = sq_dist(X.row_ptr(i), centroids.row_ptr(c), d);
        if (d2 < best[c]) {
            best[c] = d2;
            res.medoid_indices[c] = i;
        }
    }
    for (std::size_t c = 0; c < k; ++c)
        if (counts[c] == 0) res.empty_clusters.push_back(c);
    return res;
}

// Householder reduction to tridiagonal form followed by implicit-shift QL
// iteration, the classic tred2/tql2 pair.
SymEig sym_eig(const Matrix& A) {
    const std::size_t n = A.rows();
    if (n == 0 || A.cols() != n) throw std::invalid_argument("sym_eig: square matrix required");
    Matrix V = A;
    std::vector<double> d(n, 0.0), e(n, 0.0);

    for (std::size_t i = n - 1; i > 0; --i) {
        std::size_t l = i - 1;
        double h = 0.0, scale = 0.0;
        if (l > 0) {
            for (std::size_t k = 0; k <= l; ++k) scale += std::fabs(V(i, k));
            if (scale == 0.0) {
                e[i] = V(i, l);
            } else {
                for (std::size_t k = 0; k <= l; ++k) {
                    V(i, k) /= scale;
                    h += V(i, k) * V(i, k);
                }
                double f = V(i, l);
                double g = f >= 0.0 ? -std::sqrt(h) : std::sqrt(h);
                e[i] = scale * g;
                h -= f * g;
                V(i, l) = f - g;
                f = 0.0;
                for (std::size_t j = 0; j <= l; ++j) {
                    V(j, i) = V(i, j) / h;
                    g = 0.0;
                    for (std::size_t k = 0; k <= j; ++k) g += V(j, k) * V(i, k);
                    for (std::size_t k = j + 1; k <= l; ++k) g += V(k, j) * V(i, k);
                    e[j] = g / h;
                    f += e[j] * V(i, j);
                }
                const double hh = f / (h + h);
                for (std::size_t j = 0; j <= l; ++j) {
                    f = V(i, j);
                    e[j] = g = e[j] - hh * f;
                    for (std::size_t k = 0; k <= j; ++k)
                        V(j, k) -= f * e[k] + g * V(i, k);
                }
            }
        } else {
            e[i] = V(i, l);
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (d[i] != 0.0) {
            for (std::size_t j = 0; j < i; ++j) {
                double g = 0.0;
                for (std::size_t k = 0; k < i; ++k) g += V(i, k) * V(k, j);
                for (std::size_t k = 0; k < i; ++k) V(k, j) -= g * V(k, i);
            }
        }
        d[i] = V(i, i);
        V(i, i) = 1.0;
        for (std::size_t j = 0; j < i; ++j) V(j, i) = V(i, j) = 0.0;
    }

    for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
    e[n - 1] = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
        std::size_t iter = 0;
        std::size_t m;
        do {
            for (m = l; m + 1 < n; ++m) {
                const double dd = std::fabs(d[m]) + std::fabs(d[m + 1]);
                if (std::fabs(e[m]) <= std::numeric_limits<double>::epsilon() * dd) break;
            }
            if (m != l) {
                if (iter++ == 50) throw std::runtime_error("sym_eig: QL failed to converge");
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + (g >= 0.0 ? std::fabs(r) : -std::fabs(r)));
                double s = 1.0, c = 1.0, p = 0.0;
                for (std::size_t i = m; i-- > l;) {
                    double f = s * e[i];
                    const double b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    for (std::size_t k = 0; k < n; ++k) {
                        f = V(k, i + 1);
                        V(k, i + 1) = s * V(k, i) + c * f;
                        V(k, i) = c * V(k, i) - s * f;
                    }
                }
                if (r == 0.0 && m - l > 1) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }

    // Sort ascending, carrying eigenvector columns along.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (d[a] != d[b]) return d[a] < d[b];
        return a < b;
    });
    SymEig out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = d[order[j]];
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = V(i, order[j]);
    }
    return out;
}

namespace {

struct Standardized {
    Matrix rows;                    // standardized, zero-variance rows dropped
    std::vector<std::size_t> kept;  // original row indices
};

// Row-standardize features x samples with the sample (N-1) deviation.
Standardized standardize_rows(const Matrix& X) {
    const std::size_t d = X.rows(), n = X.cols();
    if (n < 2) throw std::invalid_argument("standardize_rows: need at least 2 samples");
    Standardized out;
    std::vector<std::vector<double>> kept_rows;
    for (std::size_t i = 0; i < d; ++i) {
        const double* row = X.row_ptr(i);
        double mean = 0.0;
        for (std::size_t j = 0; j < n; ++j) mean += row[j];
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double c = row[j] - mean;
            ss += c * c;
        }
        if (ss == 0.0) continue;
        const double sd = std::sqrt(ss / static_cast<double>(n - 1));
        std::vector<double> r(n);
        for (std::size_t j = 0; j < n; ++j) r[j] = (row[j] - mean) / sd;
        kept_rows.push_back(std::move(r));
        out.kept.push_back(i);
    }
    if (kept_rows.empty())
        throw std::invalid_argument("standardize_rows: all rows are constant");
    out.rows = Matrix::from_rows(kept_rows);
    return out;
}

// Sample correlation of the rows of X, with the unit diagonal set exactly.
Matrix correlation_of_rows(const Matrix& X) {
    const Standardized st = standardize_rows(X);
    const std::size_t d = st.rows.rows(), n = st.rows.cols();
    Matrix corr(d, d, 0.0);
    const double inv = 1.0 / static_cast<double>(n - 1);
    for (std::size_t a = 0; a < d; ++a) {
        corr(a, a) = 1.0;
        for (std::size_t b = a + 1; b < d; ++b) {
            double s = 0.0;
            const double* ra = st.rows.row_ptr(a);
            const double* rb = st.rows.row_ptr(b);
            for (std::size_t j = 0; j < n; ++j) s += ra[j] * rb[j];
            corr(a, b) = corr(b, a) = s * inv;
        }
    }
    return corr;
}

}  // namespace

std::size_t kaiser_factor_count(const Matrix& X) {
    const Matrix corr = correlation_of_rows(X);
    const SymEig eig = sym_eig(corr);
    std::size_t count = 0;
    for (double v : eig.values)
        if (v > 1.0) ++count;
    return count > 0 ? count : 1;
}

namespace {

// Cholesky factor of an SPD matrix (lower triangular).
Matrix cholesky(const Matrix& A) {
    const std::size_t n = A.rows();
    Matrix L(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = A(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
            if (i == j) {
                if (s <= 0.0) throw std::runtime_error("cholesky: matrix not positive definite");
                L(i, i) = std::sqrt(s);
            } else {
                L(i, j) = s / L(j, j);
            }
        }
    }
    return L;
}

Matrix spd_inverse(const Matrix& A, double* logdet = nullptr) {
    const std::size_t n = A.rows();
    const Matrix L = cholesky(A);
    if (logdet) {
        double ld = 0.0;
        for (std::size_t i = 0; i < n; ++i) ld += std::log(L(i, i));
        *logdet = 2.0 * ld;
    }
    // Solve A X = I column by column.
    Matrix inv(n, n, 0.0);
    std::vector<double> y(n);
    for (std::size_t col = 0; col < n; ++col) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = (i == col) ? 1.0 : 0.0;
            for (std::size_t k = 0; k < i; ++k) s -= L(i, k) * y[k];
            y[i] = s / L(i, i);
        }
        for (std::size_t i = n; i-- > 0;) {
            double s = y[i];
            for (std::size_t k = i + 1; k < n; ++k) s -= L(k, i) * inv(k, col);
            inv(i, col) = s / L(i, i);
        }
    }
    return inv;
}

constexpr double kNoiseFloor = 1e-10;

}  // namespace

FactorModel factor_analysis(const Matrix& X, std::size_t l, std::size_t max_iter, double tol) {
    const std::size_t n = X.cols();
    if (n < 2) throw std::invalid_argument("factor_analysis: need at least 2 samples");
    const Standardized st = standardize_rows(X);
    const std::size_t d = st.rows.rows();
    if (l < 1 || l >= std::min(d, n))
        throw std::invalid_argument("factor_analysis: l out of range (need 1 <= l < min(d, N))");

    // Sample covariance of the standardized rows (MLE scaling).
    Matrix S(d, d, 0.0);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = a; b < d; ++b) {
            double s = 0.0;
            const double* ra = st.rows.row_ptr(a);
            const double* rb = st.rows.row_ptr(b);
            for (std::size_t j = 0; j < n; ++j) s += ra[j] * rb[j];
            S(a, b) = S(b, a) = s * inv_n;
        }
    }

    // Deterministic PCA init.
    const SymEig eig = sym_eig(S);
    Matrix W(d, l, 0.0);
    for (std::size_t f = 0; f < l; ++f) {
        const std::size_t col = d - 1 - f;  // largest eigenvalues first
        const double lam = std::max(eig.values[col], kNoiseFloor);
        for (std::size_t i = 0; i < d; ++i) W(i, f) = eig.vectors(i, col) * std::sqrt(lam);
    }
    std::vector<double> psi(d);
    for (std::size_t i = 0; i < d; ++i) {
        double wsq = 0.0;
        for (std::size_t f = 0; f < l; ++f) wsq += W(i, f) * W(i, f);
        psi[i] = std::max(S(i, i) - wsq, kNoiseFloor);
    }

    FactorModel model;
    const double half_d_log2pi = 0.5 * static_cast<double>(d) * std::log(2.0 * 3.14159265358979323846);
    Matrix beta;  // l x d posterior projection
    double prev_ll = -std::numeric_limits<double>::infinity();

    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        // E-step quantities via the Woodbury identity; everything is l x l
        // or l x d, so the cost per iteration stays O(d^2 l).
        Matrix wt_psi(l, d);  // W^T Psi^-1
        for (std::size_t f = 0; f < l; ++f)
            for (std::size_t i = 0; i < d; ++i) wt_psi(f, i) = W(i, f) / psi[i];
        Matrix M(l, l, 0.0);  // I + W^T Psi^-1 W
        for (std::size_t a = 0; a < l; ++a) {
            for (std::size_t b = a; b < l; ++b) {
                double s = 0.0;
                for (std::size_t i = 0; i < d; ++i) s += wt_psi(a, i) * W(i, b);
                M(a, b) = M(b, a) = s + (a == b ? 1.0 : 0.0);
            }
        }
        double logdet_M = 0.0;
        const Matrix G = spd_inverse(M, &logdet_M);
        beta = matmul(G, wt_psi);             // l x d
        const Matrix beta_S = matmul(beta, S);  // l x d

        // Average log-likelihood of the current (W, Psi).
        double logdet_C = logdet_M;
        for (std::size_t i = 0; i < d; ++i) logdet_C += std::log(psi[i]);
        double tr = 0.0;
        for (std::size_t i = 0; i < d; ++i) tr += S(i, i) / psi[i];
        for (std::size_t f = 0; f < l; ++f)
            for (std::size_t i = 0; i < d; ++i) tr -= beta_S(f, i) * wt_psi(f, i);
        const double avg_ll = -(half_d_log2pi + 0.5 * logdet_C + 0.5 * tr);
        model.log_likelihood_trace.push_back(avg_ll);
        if (avg_ll - prev_ll < tol && iter > 0) {
            model.converged = true;
            break;
        }
        prev_ll = avg_ll;

        // M-step.
        Matrix Ezz = G;  // G + beta S beta^T
        for (std::size_t a = 0; a < l; ++a)
            for (std::size_t b = 0; b < l; ++b) {
                double s = 0.0;
                for (std::size_t i = 0; i < d; ++i) s += beta_S(a, i) * beta(b, i);
                Ezz(a, b) += s;
            }
        const Matrix Ezz_inv = spd_inverse(Ezz);
        Matrix W_new(d, l, 0.0);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t f = 0; f < l; ++f) {
                double s = 0.0;
                for (std::size_t g = 0; g < l; ++g) s += beta_S(g, i) * Ezz_inv(g, f);
                W_new(i, f) = s;
            }
        for (std::size_t i = 0; i < d; ++i) {
            double wy = 0.0;
            for (std::size_t f = 0; f < l; ++f) wy += W_new(i, f) * beta_S(f, i);
            psi[i] = std::max(S(i, i) - wy, kNoiseFloor);
        }
        W = std::move(W_new);
    }

    model.loadings = Matrix(X.rows(), l, 0.0);
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t f = 0; f < l; ++f) model.loadings(st.kept[r], f) = W(r, f);
    model.factors = matmul(beta, st.rows);  // l x N posterior means
    model.noise_variances.assign(X.rows(), 1.0);
    for (std::size_t r = 0; r < d; ++r) model.noise_variances[st.kept[r]] = psi[r];
    return model;
}

double varimax_criterion(const Matrix& W) {
    const std::size_t d = W.rows(), l = W.cols();
    double crit = 0.0;
    for (std::size_t f = 0; f < l; ++f) {
        double s2 = 0.0, s4 = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            const double q = W(i, f) * W(i, f);
            s2 += q;
            s4 += q * q;
        }
        const double inv_d = 1.0 / static_cast<double>(d);
        crit += s4 * inv_d - (s2 * inv_d) * (s2 * inv_d);
    }
    return crit;
}

VarimaxResult varimax(const Matrix& W, std::size_t max_iter, double tol) {
    if (!W.all_finite()) throw std::invalid_argument("varimax: non-finite loadings");
    const std::size_t d = W.rows(), l = W.cols();
    VarimaxResult out;
    out.rotated = W;
    out.rotation = Matrix(l, l, 0.0);
    for (std::size_t f = 0; f < l; ++f) out.rotation(f, f) = 1.0;
    out.criterion_trace.push_back(varimax_criterion(W));
    if (l < 2) return out;

    Matrix& A = out.rotated;
    for (std::size_t sweep = 0; sweep < max_iter; ++sweep) {
        // One sweep of pairwise planar rotations; each angle maximizes the
        // criterion restricted to its factor pair (Kaiser's closed form).
        for (std::size_t p = 0; p < l; ++p) {
            for (std::size_t q = p + 1; q < l; ++q) {
                double su = 0.0, sv = 0.0, suv = 0.0, su2v2 = 0.0;
                for (std::size_t i = 0; i < d; ++i) {
                    const double x = A(i, p), y = A(i, q);
                    const double u = x * x - y * y;
                    const double v = 2.0 * x * y;
                    su += u;
                    sv += v;
                    suv += u * v;
                    su2v2 += u * u - v * v;
                }
                const double dn = static_cast<double>(d);
                const double num = 2.0 * (suv - su * sv / dn);
                const double den = su2v2 - (su * su - sv * sv) / dn;
                if (num == 0.0 && den == 0.0) continue;
                const double phi = 0.25 * std::atan2(num, den);
                const double c = std::cos(phi), s = std::sin(phi);
                if (std::fabs(s) < 1e-15) continue;
                for (std::size_t i = 0; i < d; ++i) {
                    const double x = A(i, p), y = A(i, q);
                    A(i, p) = c * x + s * y;
                    A(i, q) = -s * x + c * y;
                }
                for (std::size_t i = 0; i < l; ++i) {
                    const double x = out.rotation(i, p), y = out.rotation(i, q);
                    out.rotation(i, p) = c * x + s * y;
                    out.rotation(i, q) = -s * x + c * y;
                }
            }
        }
        const double crit = varimax_criterion(A);
        out.criterion_trace.push_back(crit);
        if (crit - out.criterion_trace[out.criterion_trace.size() - 2] < tol) break;
    }
    return out;
}

double cosine_similarity(const std::vector<double>& u, const std::vector<double>& v) {
    if (u.size() != v.size()) throw std::invalid_argument("cosine_similarity: dimension mismatch");
    if (u.empty()) throw std::invalid_argument("cosine_similarity: empty vectors");
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0) throw std::invalid_argument("cosine_similarity: zero vector");
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

double auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
    if (scores.size() != labels.size()) throw std::invalid_argument("auc: size mismatch");
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (std::uint8_t v : labels) n_pos += v != 0 ? 1 : 0;
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw std::invalid_argument("auc: undefined for single-class labels");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] < scores[b];
    });

    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        // Ranks i+1 .. j share the mid-rank.
        const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t t = i; t < j; ++t)
            if (labels[order[t]] != 0) rank_sum_pos += mid_rank;
        i = j;
    }
    const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

}  // namespace refpred
