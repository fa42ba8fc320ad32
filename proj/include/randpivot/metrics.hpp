#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "linalg.hpp"
#include "matrix.hpp"

namespace randpivot {

/// Sum of squared off-diagonal entries: the squared Frobenius distance to the
/// nearest diagonal matrix.
inline double off_frobenius(const SymmetricMatrix& b) {
    double s = 0.0;
    for (std::size_t j = 0; j < b.order(); ++j)
        for (std::size_t i = 0; i < j; ++i) s += b(i, j) * b(i, j);
    return 2.0 * s;
}

/// Potential of the iteration: tr(B_hat^{-1}) - n, where B_hat is the
/// diagonal-normalized matrix. Computed for the positive definite case via a
/// Cholesky factor (tr(B_hat^{-1}) = ||L^{-1}||_F^2); invertible indefinite
/// inputs fall back to an LU route, but only the SPD case carries the
/// nonnegativity guarantee.
inline double gamma(const SymmetricMatrix& b) {
    const SymmetricMatrix bhat = diagonal_normalize(b);
    const std::size_t n = b.order();
    try {
        const Matrix linv = lower_triangular_inverse(cholesky_lower(bhat));
        double s = 0.0;
        for (std::size_t c = 0; c < n; ++c)
            for (std::size_t r = c; r < n; ++r) s += linv(r, c) * linv(r, c);
        return s - static_cast<double>(n);
    } catch (const std::domain_error&) {
        // Not positive definite; tr(B_hat^{-1}) through LU solves.
        LuFactors f;
        try {
            f = lu_factor(bhat.as_matrix());
        } catch (const std::domain_error&) {
            throw std::domain_error("gamma: normalized matrix is singular");
        }
        double trace = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            Matrix e(n, 1);
            e(i, 0) = 1.0;
            lu_solve_in_place(f, e);
            trace += e(i, 0);
        }
        return trace - static_cast<double>(n);
    }
}

/// Condition number of the diagonal-normalized matrix. Requires SPD input.
inline double kappa_hat(const SymmetricMatrix& b) {
    const EigenDecomposition eig = jacobi_eigensolver(diagonal_normalize(b));
    if (!(eig.values.back() > 0.0))
        throw std::domain_error("kappa_hat: matrix not positive definite");
    return eig.values.front() / eig.values.back();
}

struct PotentialReport {
    double gamma = 0.0;
    double off_hat = 0.0;
    double kappa_hat = 1.0;
    double sigma_min_hat = 1.0;  // smallest singular value of the normalized matrix
    bool spd = true;             // the nonnegativity/bound guarantees apply only when true
};

inline PotentialReport potential_report(const SymmetricMatrix& b) {
    const SymmetricMatrix bhat = diagonal_normalize(b);
    const EigenDecomposition eig = jacobi_eigensolver(bhat);
    PotentialReport rep;
    rep.off_hat = off_frobenius(bhat);
    rep.gamma = gamma(b);
    rep.spd = eig.values.back() > 0.0;
    double min_abs = std::numeric_limits<double>::infinity();
    double max_abs = 0.0;
    for (double v : eig.values) {
        min_abs = std::min(min_abs, std::fabs(v));
        max_abs = std::max(max_abs, std::fabs(v));
    }
    if (min_abs == 0.0) throw std::domain_error("potential_report: normalized matrix is singular");
    rep.sigma_min_hat = min_abs;
    rep.kappa_hat = max_abs / min_abs;
    return rep;
}

namespace detail {
inline double checked_gamma_arg(double g) {
    if (g < 0.0) {
        if (g > -1e-9) return 0.0;  // tolerate tiny negative round-off from gamma()
        throw std::invalid_argument("bound: gamma argument must be nonnegative");
    }
    return g;
}
}  // namespace detail

/// Closed-form ceiling on off(B_hat) given the potential value.
inline double bound_off_from_gamma(double g) {
    g = detail::checked_gamma_arg(g);
    const double s = std::sqrt(1.0 + g / 4.0) + std::sqrt(g / 4.0);
    return g * s * s;
}

/// Closed-form interval for kappa_hat given the potential value.
inline std::pair<double, double> bound_kappa_from_gamma(double g, std::size_t n) {
    g = detail::checked_gamma_arg(g);
    if (n < 1) throw std::invalid_argument("bound_kappa_from_gamma: n must be positive");
    const double lower = 1.0 + g / static_cast<double>(n);
    const double s = 1.0 + std::sqrt(g / 2.0) + g / 2.0;
    return {lower, s * s};
}

/// Closed-form ceiling on max(||B_hat||, ||B_hat^{-1}||) given the potential.
/// (1+g/2)^2 - 1 is expanded to g(1+g/4) to avoid cancellation for small g.
inline double bound_norm_from_gamma(double g) {
    g = detail::checked_gamma_arg(g);
    return 1.0 + g / 2.0 + std::sqrt(g * (1.0 + g / 4.0));
}

/// Column-normalized drift pseudo-metric:
/// max over columns j of || a_j/||a_j|| - a2_j/||a2_j|| ||.
inline double dist_one(const Matrix& a, const Matrix& a2) {
    if (!a.same_shape(a2)) throw std::invalid_argument("dist_one: shape mismatch");
    double worst = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) {
        const double na = a.column_norm(j);
        const double nb = a2.column_norm(j);
        if (na == 0.0 || nb == 0.0)
            throw std::domain_error("dist_one: zero column at index " + std::to_string(j));
        double s = 0.0;
        for (std::size_t i = 0; i < a.rows(); ++i) {
            const double d = a(i, j) / na - a2(i, j) / nb;
            s += d * d;
        }
        worst = std::max(worst, std::sqrt(s));
    }
    return worst;
}

/// Entry-normalized drift pseudo-metric:
/// sup over (i,j) of | b_ij/sqrt(b_ii b_jj) - b2_ij/sqrt(b2_ii b2_jj) |.
inline double dist_two(const SymmetricMatrix& b, const SymmetricMatrix& b2) {
    if (b.order() != b2.order()) throw std::invalid_argument("dist_two: order mismatch");
    const std::size_t n = b.order();
    std::vector<double> sa(n), sb(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(b(i, i) > 0.0) || !(b2(i, i) > 0.0))
            throw std::domain_error("dist_two: nonpositive diagonal entry at index " +
                                    std::to_string(i));
        sa[i] = std::sqrt(b(i, i));
        sb[i] = std::sqrt(b2(i, i));
    }
    double worst = 0.0;
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i <= j; ++i) {
            const double d = b(i, j) / (sa[i] * sa[j]) - b2(i, j) / (sb[i] * sb[j]);
            worst = std::max(worst, std::fabs(d));
        }
    return worst;
}

namespace detail {

// Largest singular value of (I - Q1 Q1^T) Q2: the sine of the largest
// principal angle, computed from the residual so that tiny gaps come out at
// round-off level instead of the sqrt(eps) floor of 1 - sigma_min^2.
inline double projected_residual_sine(const Matrix& q1, const Matrix& q2) {
    const Matrix overlap = multiply(transpose(q1), q2);
    Matrix resid = q2;
    for (std::size_t c = 0; c < q2.cols(); ++c)
        for (std::size_t r = 0; r < q2.rows(); ++r) {
            double acc = 0.0;
            for (std::size_t m = 0; m < q1.cols(); ++m) acc += q1(r, m) * overlap(m, c);
            resid(r, c) -= acc;
        }
    const EigenDecomposition eig = jacobi_eigensolver(gram(resid));
    const double lambda_max = std::min(std::max(eig.values.front(), 0.0), 1.0);
    return std::sqrt(lambda_max);
}

}  // namespace detail

/// Gap metric between the column spaces: the sine of the largest principal
/// angle, computed from orthonormal bases of both spaces. Symmetric, in [0,1].
inline double subspace_distance(const Matrix& a, const Matrix& a2) {
    if (!a.same_shape(a2)) throw std::invalid_argument("subspace_distance: shape mismatch");
    const std::size_t n = a.cols();
    const ThinQr qa = householder_qr(a);
    const ThinQr qb = householder_qr(a2);
    const double tol = static_cast<double>(std::max(a.rows(), n)) *
                       std::numeric_limits<double>::epsilon();
    for (std::size_t i = 0; i < n; ++i) {
        if (std::fabs(qa.r(i, i)) <= tol * a.frobenius_norm() ||
            std::fabs(qb.r(i, i)) <= tol * a2.frobenius_norm())
            throw std::domain_error("subspace_distance: rank-deficient input");
    }
    return std::max(detail::projected_residual_sine(qa.q, qb.q),
                    detail::projected_residual_sine(qb.q, qa.q));
}

}  // namespace randpivot
