#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "linalg.hpp"
#include "matrix.hpp"

namespace randpivot {

/// Structural constraint imposed on the local transform S, selecting which
/// factorization the accumulated transform realizes.
enum class FactorizationKind {
    unitary,           // eigendecomposition / SVD
    upper_triangular,  // Cholesky / QR
    unit_upper,        // LDL
    lower_triangular,  // QL
    general            // Gram / orthogonalization
};

inline const char* kind_name(FactorizationKind k) {
    switch (k) {
        case FactorizationKind::unitary: return "unitary";
        case FactorizationKind::upper_triangular: return "upper_triangular";
        case FactorizationKind::unit_upper: return "unit_upper";
        case FactorizationKind::lower_triangular: return "lower_triangular";
        case FactorizationKind::general: return "general";
    }
    return "?";
}

/// CLI grammar: "evd"/"svd", "cholesky"/"qr", "ldl", "ql", "orth".
inline FactorizationKind parse_kind(const std::string& s) {
    if (s == "evd" || s == "svd") return FactorizationKind::unitary;
    if (s == "cholesky" || s == "qr") return FactorizationKind::upper_triangular;
    if (s == "ldl") return FactorizationKind::unit_upper;
    if (s == "ql") return FactorizationKind::lower_triangular;
    if (s == "orth") return FactorizationKind::general;
    throw std::invalid_argument("parse_kind: unknown kind '" + s + "'");
}

/// Optional 2x2 update rule used in place of the generic construction.
enum class PairRule { none, gs2, nsvd2, nsvd2x2 };

struct KindSpec {
    FactorizationKind kind = FactorizationKind::unitary;
    PairRule rule = PairRule::none;
};

/// Parses "KIND" or "KIND,rule=RULE" where RULE is gs2|nsvd2|nsvd2x2.
/// gs2 is upper triangular so it pairs with cholesky/qr or orth; the nsvd
/// rules have no triangular structure and pair with orth only.
inline KindSpec parse_kind_spec(const std::string& s) {
    KindSpec spec;
    const std::size_t comma = s.find(',');
    spec.kind = parse_kind(s.substr(0, comma));
    if (comma == std::string::npos) return spec;
    const std::string tail = s.substr(comma + 1);
    if (tail == "rule=gs2")
        spec.rule = PairRule::gs2;
    else if (tail == "rule=nsvd2")
        spec.rule = PairRule::nsvd2;
    else if (tail == "rule=nsvd2x2")
        spec.rule = PairRule::nsvd2x2;
    else
        throw std::invalid_argument("parse_kind_spec: unknown rule override '" + tail + "'");
    const bool ok =
        (spec.rule == PairRule::gs2 && (spec.kind == FactorizationKind::upper_triangular ||
                                        spec.kind == FactorizationKind::general)) ||
        ((spec.rule == PairRule::nsvd2 || spec.rule == PairRule::nsvd2x2) &&
         spec.kind == FactorizationKind::general);
    if (!ok)
        throw std::invalid_argument("parse_kind_spec: rule override incompatible with kind '" +
                                    std::string(kind_name(spec.kind)) + "'");
    return spec;
}

/// A k x k nonsingular transform S making S^T B_JJ S diagonal, together with
/// that diagonal and the structural constraint it satisfies.
struct LocalTransform {
    Matrix s;
    FactorizationKind kind = FactorizationKind::general;
    std::vector<double> diag_out;
};

namespace detail {

inline LocalTransform givens_2x2(const SymmetricMatrix& bjj) {
    const double b00 = bjj(0, 0), b01 = bjj(0, 1), b11 = bjj(1, 1);
    if (!(b00 > 0.0) || !(b11 > 0.0) || !(b00 * b11 - b01 * b01 > 0.0))
        throw std::domain_error("local transform: pivot block not positive definite");
    LocalTransform out{Matrix::identity(2), FactorizationKind::unitary, {b00, b11}};
    if (b01 == 0.0) return out;
    // Smaller-angle root (|angle| <= pi/4). For equal diagonal entries the
    // branch is picked so the larger new entry comes first.
    const double theta = (b11 - b00) / (2.0 * b01);
    double t;
    if (theta == 0.0)
        t = b01 > 0.0 ? -1.0 : 1.0;
    else if (std::fabs(theta) > 1e150)
        t = 1.0 / (2.0 * theta);
    else
        t = (theta > 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(1.0 + theta * theta));
    const double c = 1.0 / std::sqrt(1.0 + t * t);
    const double s = t * c;
    out.s(0, 0) = c;
    out.s(1, 0) = -s;
    out.s(0, 1) = s;
    out.s(1, 1) = c;
    out.diag_out = {b00 - t * b01, b11 + t * b01};
    return out;
}

inline void check_unit_alpha(double alpha) {
    if (!(std::fabs(alpha) < 1.0 - 1e-15))
        throw std::domain_error("pair rule: degenerate column pair (|alpha| too close to 1)");
}

}  // namespace detail

/// Builds S for the given kind from an SPD pivot block.
///   unitary: eigenvector matrix (a plane rotation when k = 2)
///   upper_triangular: inverse of the Cholesky factor, S^T B S = I
///   unit_upper: inverse transpose of the unit LDL factor, S^T B S = D
///   lower_triangular: from the reversed-order Cholesky, S^T B S = I
///   general: the symmetric inverse square root, S^T B S = I
inline LocalTransform make_local_transform(FactorizationKind kind, const SymmetricMatrix& bjj) {
    const std::size_t k = bjj.order();
    switch (kind) {
        case FactorizationKind::unitary: {
            if (k == 2) return detail::givens_2x2(bjj);
            const EigenDecomposition eig = jacobi_eigensolver(bjj);
            if (!(eig.values.back() > 0.0))
                throw std::domain_error("local transform: pivot block not positive definite");
            return {eig.vectors, kind, eig.values};
        }
        case FactorizationKind::upper_triangular: {
            const Matrix r = transpose(cholesky_lower(bjj));
            return {upper_triangular_inverse(r), kind, std::vector<double>(k, 1.0)};
        }
        case FactorizationKind::unit_upper: {
            const LdlFactors f = ldl_factor(bjj);
            // (L^T)^{-1} is unit upper; back substitution keeps the unit
            // diagonal and the structural zeros exact.
            return {upper_triangular_inverse(transpose(f.unit_lower)), kind, f.diag};
        }
        case FactorizationKind::lower_triangular: {
            // Reverse both index orders, factor, and flip back: B = U U^T
            // with U upper triangular, then S = U^{-T} is lower triangular.
            SymmetricMatrix rev(k);
            for (std::size_t j = 0; j < k; ++j)
                for (std::size_t i = 0; i <= j; ++i)
                    rev.set(i, j, bjj(k - 1 - i, k - 1 - j));
            const Matrix lrev = cholesky_lower(rev);
            Matrix u(k, k);
            for (std::size_t j = 0; j < k; ++j)
                for (std::size_t i = j; i < k; ++i) u(k - 1 - i, k - 1 - j) = lrev(i, j);
            return {lower_triangular_inverse(transpose(u)), kind, std::vector<double>(k, 1.0)};
        }
        case FactorizationKind::general: {
            return {spd_inverse_sqrt(bjj), kind, std::vector<double>(k, 1.0)};
        }
    }
    throw std::logic_error("make_local_transform: unreachable");
}

/// Gram-Schmidt pair rule for unit columns with inner product alpha:
/// (a1, a2) -> (a1, (a2 - alpha a1)/sqrt(1 - alpha^2)). Upper triangular.
inline LocalTransform rule_gs2(double alpha) {
    detail::check_unit_alpha(alpha);
    const double w = std::sqrt(1.0 - alpha * alpha);
    Matrix s = Matrix::identity(2);
    s(0, 1) = -alpha / w;
    s(1, 1) = 1.0 / w;
    return {std::move(s), FactorizationKind::upper_triangular, {1.0, 1.0}};
}

/// Normalized-SVD pair rule: (a1, a2) -> ((a1+a2)/sqrt(2+2a), (a1-a2)/sqrt(2-2a)).
inline LocalTransform rule_nsvd2(double alpha) {
    detail::check_unit_alpha(alpha);
    const double wp = std::sqrt(2.0 + 2.0 * alpha);
    const double wm = std::sqrt(2.0 - 2.0 * alpha);
    Matrix s(2, 2);
    s(0, 0) = 1.0 / wp;
    s(1, 0) = 1.0 / wp;
    s(0, 1) = 1.0 / wm;
    s(1, 1) = -1.0 / wm;
    return {std::move(s), FactorizationKind::general, {1.0, 1.0}};
}

/// Symmetric pair rule: the closed form of applying rule_nsvd2 twice in a row.
inline LocalTransform rule_nsvd2_twice(double alpha) {
    detail::check_unit_alpha(alpha);
    const double wp = std::sqrt(2.0 + 2.0 * alpha);
    const double wm = std::sqrt(2.0 - 2.0 * alpha);
    const double p = wm + wp;
    const double q = wm - wp;
    // Both output columns have length sqrt(p^2 + q^2 + 2 p q alpha)
    // = 2 sqrt(2) sqrt(1 - alpha^2).
    const double norm = 2.0 * std::sqrt(2.0) * std::sqrt(1.0 - alpha * alpha);
    Matrix s(2, 2);
    s(0, 0) = p / norm;
    s(1, 0) = q / norm;
    s(0, 1) = q / norm;
    s(1, 1) = p / norm;
    return {std::move(s), FactorizationKind::general, {1.0, 1.0}};
}

/// Residual report used by the test suites: structural deviations of S and
/// the quality of the diagonalization it performs on a given block.
struct LocalDiagnostics {
    double orthogonality_residual = 0.0;  // ||S^T S - I||_F
    double below_diag_max = 0.0;          // max |s_ij|, i > j
    double above_diag_max = 0.0;          // max |s_ij|, i < j
    double unit_diag_deviation = 0.0;     // max |s_ii - 1|
    double off_result = 0.0;              // off(S^T B_JJ S)
    double diag_residual = 0.0;           // max |(S^T B_JJ S)_ii - diag_out_i|
};

inline LocalDiagnostics verify_local(const LocalTransform& t, const SymmetricMatrix& bjj) {
    const std::size_t k = bjj.order();
    if (t.s.rows() != k || t.s.cols() != k)
        throw std::invalid_argument("verify_local: shape mismatch");
    LocalDiagnostics d;
    double orth = 0.0;
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t i = 0; i < k; ++i) {
            double acc = 0.0;
            for (std::size_t m = 0; m < k; ++m) acc += t.s(m, i) * t.s(m, j);
            const double target = i == j ? 1.0 : 0.0;
            orth += (acc - target) * (acc - target);
            if (i > j) d.below_diag_max = std::max(d.below_diag_max, std::fabs(t.s(i, j)));
            if (i < j) d.above_diag_max = std::max(d.above_diag_max, std::fabs(t.s(i, j)));
            if (i == j)
                d.unit_diag_deviation = std::max(d.unit_diag_deviation, std::fabs(t.s(i, i) - 1.0));
        }
    d.orthogonality_residual = std::sqrt(orth);
    const Matrix m = multiply(transpose(t.s), multiply(bjj.as_matrix(), t.s));
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t i = 0; i < k; ++i) {
            if (i != j)
                d.off_result += m(i, j) * m(i, j);
            else if (j < t.diag_out.size())
                d.diag_residual = std::max(d.diag_residual, std::fabs(m(j, j) - t.diag_out[j]));
        }
    return d;
}

}  // namespace randpivot
