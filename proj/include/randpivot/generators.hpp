#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "linalg.hpp"
#include "matrix.hpp"
#include "metrics.hpp"
#include "pivoting.hpp"

namespace randpivot {

/// d x n matrix whose columns are independent uniform points on the unit sphere.
inline Matrix gen_haar_columns(std::size_t d, std::size_t n, RngState& rng) {
    Matrix a(d, n);
    for (std::size_t j = 0; j < n; ++j) {
        double norm = 0.0;
        do {
            norm = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                a(i, j) = rng.next_gaussian();
                norm += a(i, j) * a(i, j);
            }
            norm = std::sqrt(norm);
        } while (norm == 0.0);
        for (std::size_t i = 0; i < d; ++i) a(i, j) /= norm;
    }
    return a;
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the R
/// diagonal signs folded into Q.
inline Matrix gen_haar_orthogonal(std::size_t n, RngState& rng) {
    Matrix g(n, n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) g(i, j) = rng.next_gaussian();
    ThinQr qr = householder_qr(g);
    for (std::size_t j = 0; j < n; ++j)
        if (qr.r(j, j) < 0.0)
            for (std::size_t i = 0; i < n; ++i) qr.q(i, j) = -qr.q(i, j);
    return qr.q;
}

/// Unit-diagonal SPD matrix from a wide Gaussian Gram; cheap bulk generator
/// for property sweeps (moderate, uncontrolled conditioning).
inline SymmetricMatrix gen_random_correlation(std::size_t n, RngState& rng) {
    Matrix g(2 * n, n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < 2 * n; ++i) g(i, j) = rng.next_gaussian();
    return diagonal_normalize(gram(g));
}

/// Unit-diagonal SPD matrix whose normalized condition number is within 10%
/// of the request. Built from a prescribed geometric spectrum in a Haar
/// frame, then diagonal-normalized; the spectrum ratio is retuned until the
/// measured value lands in the window.
inline SymmetricMatrix gen_spd_kappahat(std::size_t n, double kappa, RngState& rng) {
    if (!(kappa >= 1.0)) throw std::invalid_argument("gen_spd_kappahat: kappa must be >= 1");
    if (n < 1) throw std::invalid_argument("gen_spd_kappahat: n must be positive");
    if (kappa == 1.0 || n == 1) return SymmetricMatrix::identity(n);

    // The frame is held fixed while the spectrum ratio is retuned, so the
    // measured value responds monotonically to the correction; a stalled
    // frame (e.g. nearly axis-aligned at small n) is redrawn.
    for (int frame = 0; frame < 16; ++frame) {
        const Matrix q = gen_haar_orthogonal(n, rng);
        double ratio = kappa;
        for (int attempt = 0; attempt < 60; ++attempt) {
            SymmetricMatrix b(n);
            std::vector<double> lambda(n);
            for (std::size_t i = 0; i < n; ++i)
                lambda[i] = std::pow(ratio, -static_cast<double>(i) / static_cast<double>(n - 1));
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t i = 0; i <= j; ++i) {
                    double acc = 0.0;
                    for (std::size_t m = 0; m < n; ++m) acc += q(i, m) * lambda[m] * q(j, m);
                    b.set(i, j, acc);
                }
            const SymmetricMatrix bhat = diagonal_normalize(b);
            const double measured = kappa_hat(bhat);
            if (std::fabs(measured - kappa) <= 0.1 * kappa) return bhat;
            ratio *= kappa / measured;
            if (!(ratio >= 1.0 + 1e-12)) ratio = 1.0 + 0.5 * (kappa - 1.0);
            if (ratio > 1e15) break;
        }
    }
    throw std::runtime_error("gen_spd_kappahat: failed to hit the target window");
}

/// Graded SPD matrix D C D: a correlation factor C with the requested
/// normalized condition number and a geometric diagonal D spanning
/// [1, spread]. Grading leaves kappa_hat unchanged, so the normalized
/// condition number of the result equals that of C.
inline SymmetricMatrix gen_graded(std::size_t n, double spread, double kappa, RngState& rng) {
    if (!(spread >= 1.0)) throw std::invalid_argument("gen_graded: spread must be >= 1");
    const SymmetricMatrix c = gen_spd_kappahat(n, kappa, rng);
    SymmetricMatrix b(n);
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i)
        d[i] = n > 1 ? std::pow(spread, static_cast<double>(i) / static_cast<double>(n - 1)) : 1.0;
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i <= j; ++i) b.set(i, j, d[i] * c(i, j) * d[j]);
    return b;
}

}  // namespace randpivot
