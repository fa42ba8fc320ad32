#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "matrix.hpp"

namespace randpivot {

inline Matrix multiply(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw std::invalid_argument("multiply: inner dimensions do not match");
    Matrix out(a.rows(), b.cols());
    for (std::size_t c = 0; c < b.cols(); ++c)
        for (std::size_t m = 0; m < a.cols(); ++m) {
            const double bmc = b(m, c);
            if (bmc == 0.0) continue;
            for (std::size_t r = 0; r < a.rows(); ++r) out(r, c) += a(r, m) * bmc;
        }
    return out;
}

inline Matrix transpose(const Matrix& a) {
    Matrix out(a.cols(), a.rows());
    for (std::size_t c = 0; c < a.cols(); ++c)
        for (std::size_t r = 0; r < a.rows(); ++r) out(c, r) = a(r, c);
    return out;
}

/// A^T A with mirrored writes.
inline SymmetricMatrix gram(const Matrix& a) {
    const std::size_t n = a.cols();
    SymmetricMatrix g(n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i <= j; ++i) {
            double acc = 0.0;
            for (std::size_t r = 0; r < a.rows(); ++r) acc += a(r, i) * a(r, j);
            g.set(i, j, acc);
        }
    return g;
}

/// B = L L^T with L lower triangular, positive diagonal.
/// Throws std::domain_error naming the pivot on breakdown.
inline Matrix cholesky_lower(const SymmetricMatrix& b) {
    const std::size_t n = b.order();
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = b(j, j);
        for (std::size_t m = 0; m < j; ++m) d -= l(j, m) * l(j, m);
        if (!(d > 0.0))
            throw std::domain_error("cholesky: not positive definite at pivot " +
                                    std::to_string(j));
        l(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double acc = b(i, j);
            for (std::size_t m = 0; m < j; ++m) acc -= l(i, m) * l(j, m);
            l(i, j) = acc / l(j, j);
        }
    }
    return l;
}

struct LdlFactors {
    Matrix unit_lower;
    std::vector<double> diag;
};

/// B = L D L^T with L unit lower triangular, no pivoting. Requires positive D.
inline LdlFactors ldl_factor(const SymmetricMatrix& b) {
    const std::size_t n = b.order();
    LdlFactors f{Matrix(n, n), std::vector<double>(n)};
    for (std::size_t j = 0; j < n; ++j) {
        double d = b(j, j);
        for (std::size_t m = 0; m < j; ++m) d -= f.unit_lower(j, m) * f.unit_lower(j, m) * f.diag[m];
        if (!(d > 0.0))
            throw std::domain_error("ldl: not positive definite at pivot " + std::to_string(j));
        f.diag[j] = d;
        f.unit_lower(j, j) = 1.0;
        for (std::size_t i = j + 1; i < n; ++i) {
            double acc = b(i, j);
            for (std::size_t m = 0; m < j; ++m)
                acc -= f.unit_lower(i, m) * f.unit_lower(j, m) * f.diag[m];
            f.unit_lower(i, j) = acc / d;
        }
    }
    return f;
}

inline bool is_upper_triangular(const Matrix& s) {
    for (std::size_t c = 0; c < s.cols(); ++c)
        for (std::size_t r = c + 1; r < s.rows(); ++r)
            if (s(r, c) != 0.0) return false;
    return true;
}

inline bool is_lower_triangular(const Matrix& s) {
    for (std::size_t c = 1; c < s.cols(); ++c)
        for (std::size_t r = 0; r < c; ++r)
            if (s(r, c) != 0.0) return false;
    return true;
}

/// Inverse of an upper triangular matrix by back substitution.
/// Structural zeros of the result are exact.
inline Matrix upper_triangular_inverse(const Matrix& u) {
    const std::size_t n = u.rows();
    Matrix x(n, n);
    for (std::size_t c = 0; c < n; ++c) {
        if (u(c, c) == 0.0)
            throw std::domain_error("triangular inverse: zero diagonal at " + std::to_string(c));
        x(c, c) = 1.0 / u(c, c);
        for (std::size_t i = c; i-- > 0;) {
            double acc = 0.0;
            for (std::size_t m = i + 1; m <= c; ++m) acc += u(i, m) * x(m, c);
            x(i, c) = -acc / u(i, i);
        }
    }
    return x;
}

inline Matrix lower_triangular_inverse(const Matrix& l) {
    const std::size_t n = l.rows();
    Matrix x(n, n);
    for (std::size_t c = 0; c < n; ++c) {
        if (l(c, c) == 0.0)
            throw std::domain_error("triangular inverse: zero diagonal at " + std::to_string(c));
        x(c, c) = 1.0 / l(c, c);
        for (std::size_t i = c + 1; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t m = c; m < i; ++m) acc += l(i, m) * x(m, c);
            x(i, c) = -acc / l(i, i);
        }
    }
    return x;
}

struct LuFactors {
    Matrix lu;                      // L below the diagonal (unit), U on and above
    std::vector<std::size_t> perm;  // row permutation from partial pivoting
};

inline LuFactors lu_factor(Matrix s) {
    const std::size_t n = s.rows();
    if (s.cols() != n) throw std::invalid_argument("lu_factor: matrix must be square");
    LuFactors f{Matrix(n, n), std::vector<std::size_t>(n)};
    for (std::size_t i = 0; i < n; ++i) f.perm[i] = i;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::fabs(s(r, c)) > std::fabs(s(p, c))) p = r;
        if (s(p, c) == 0.0)
            throw std::domain_error("lu_factor: singular matrix at column " + std::to_string(c));
        if (p != c) {
            for (std::size_t m = 0; m < n; ++m) std::swap(s(c, m), s(p, m));
            std::swap(f.perm[c], f.perm[p]);
        }
        for (std::size_t r = c + 1; r < n; ++r) {
            s(r, c) /= s(c, c);
            for (std::size_t m = c + 1; m < n; ++m) s(r, m) -= s(r, c) * s(c, m);
        }
    }
    f.lu = std::move(s);
    return f;
}

/// Solves S X = RHS, overwriting RHS with X. RHS has one column per system.
inline void lu_solve_in_place(const LuFactors& f, Matrix& rhs) {
    const std::size_t n = f.lu.rows();
    if (rhs.rows() != n) throw std::invalid_argument("lu_solve: shape mismatch");
    for (std::size_t c = 0; c < rhs.cols(); ++c) {
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = rhs(f.perm[i], c);
        for (std::size_t i = 1; i < n; ++i)
            for (std::size_t m = 0; m < i; ++m) x[i] -= f.lu(i, m) * x[m];
        for (std::size_t i = n; i-- > 0;) {
            for (std::size_t m = i + 1; m < n; ++m) x[i] -= f.lu(i, m) * x[m];
            x[i] /= f.lu(i, i);
        }
        for (std::size_t i = 0; i < n; ++i) rhs(i, c) = x[i];
    }
}

/// Solves S X = RHS in place. Triangular S gets a direct substitution sweep,
/// which keeps structural zeros of X exact; anything else goes through LU
/// with partial pivoting. S is never inverted explicitly.
inline void solve_in_place(const Matrix& s, Matrix& rhs) {
    const std::size_t n = s.rows();
    if (s.cols() != n || rhs.rows() != n)
        throw std::invalid_argument("solve_in_place: shape mismatch");
    if (is_upper_triangular(s)) {
        for (std::size_t c = 0; c < rhs.cols(); ++c)
            for (std::size_t i = n; i-- > 0;) {
                if (s(i, i) == 0.0)
                    throw std::domain_error("solve: singular triangular matrix");
                double acc = rhs(i, c);
                for (std::size_t m = i + 1; m < n; ++m) acc -= s(i, m) * rhs(m, c);
                rhs(i, c) = acc / s(i, i);
            }
    } else if (is_lower_triangular(s)) {
        for (std::size_t c = 0; c < rhs.cols(); ++c)
            for (std::size_t i = 0; i < n; ++i) {
                if (s(i, i) == 0.0)
                    throw std::domain_error("solve: singular triangular matrix");
                double acc = rhs(i, c);
                for (std::size_t m = 0; m < i; ++m) acc -= s(i, m) * rhs(m, c);
                rhs(i, c) = acc / s(i, i);
            }
    } else {
        lu_solve_in_place(lu_factor(s), rhs);
    }
}

/// Accumulation step of the iteration engine: rows J of T_acc are mapped
/// through S^{-1}, which preserves A_original = A_current * T_acc exactly in
/// exact arithmetic and keeps triangular structure for sorted J.
inline void accumulate_transform(Matrix& t_acc, const PivotSet& j, const Matrix& s) {
    const std::size_t n = t_acc.rows();
    const std::size_t k = j.size();
    if (t_acc.cols() != n) throw std::invalid_argument("accumulate_transform: T_acc must be square");
    j.validate_for(n);
    if (s.rows() != k || s.cols() != k)
        throw std::invalid_argument("accumulate_transform: transform shape mismatch");
    Matrix rows(k, n);
    for (std::size_t c = 0; c < n; ++c)
        for (std::size_t m = 0; m < k; ++m) rows(m, c) = t_acc(j[m], c);
    solve_in_place(s, rows);
    for (std::size_t c = 0; c < n; ++c)
        for (std::size_t m = 0; m < k; ++m) t_acc(j[m], c) = rows(m, c);
}

struct EigenDecomposition {
    std::vector<double> values;  // descending
    Matrix vectors;              // matching columns, largest-magnitude entry positive
};

/// Dense symmetric eigensolver: cyclic Jacobi sweeps to machine-precision
/// relative off-diagonals. Self-contained reference for the rest of the
/// library (kappa-hat, local diagonalizers, eigenvalue-error studies).
inline EigenDecomposition jacobi_eigensolver(const SymmetricMatrix& b, int max_sweeps = 60) {
    const std::size_t n = b.order();
    Matrix w(n, n);
    for (std::size_t c = 0; c < n; ++c)
        for (std::size_t r = 0; r < n; ++r) w(r, c) = b(r, c);
    Matrix v = Matrix::identity(n);
    const double eps = std::numeric_limits<double>::epsilon();
    const double norm_floor = eps * (w.frobenius_norm() + 1.0);

    int sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double wpq = w(p, q);
                if (wpq == 0.0) continue;
                const double scale = std::sqrt(std::fabs(w(p, p)) * std::fabs(w(q, q)));
                const double thresh = scale > 0.0 ? eps * scale : norm_floor;
                if (std::fabs(wpq) <= thresh) continue;
                rotated = true;
                const double theta = (w(q, q) - w(p, p)) / (2.0 * wpq);
                double t;
                if (std::fabs(theta) > 1e150)
                    t = 1.0 / (2.0 * theta);
                else if (theta == 0.0)
                    t = 1.0;
                else
                    t = (theta > 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(1.0 + theta * theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                const double tau = s / (1.0 + c);
                const double wpp = w(p, p), wqq = w(q, q);
                w(p, p) = wpp - t * wpq;
                w(q, q) = wqq + t * wpq;
                w(p, q) = 0.0;
                w(q, p) = 0.0;
                for (std::size_t r = 0; r < n; ++r) {
                    if (r != p && r != q) {
                        const double wrp = w(r, p), wrq = w(r, q);
                        const double np = wrp - s * (wrq + tau * wrp);
                        const double nq = wrq + s * (wrp - tau * wrq);
                        w(r, p) = np;
                        w(p, r) = np;
                        w(r, q) = nq;
                        w(q, r) = nq;
                    }
                    const double vrp = v(r, p), vrq = v(r, q);
                    v(r, p) = vrp - s * (vrq + tau * vrp);
                    v(r, q) = vrq + s * (vrp - tau * vrq);
                }
            }
        }
        if (!rotated) break;
    }
    if (sweep == max_sweeps)
        throw std::domain_error("jacobi_eigensolver: did not converge");

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t c) { return w(a, a) > w(c, c); });

    EigenDecomposition out{std::vector<double>(n), Matrix(n, n)};
    for (std::size_t c = 0; c < n; ++c) {
        out.values[c] = w(order[c], order[c]);
        std::size_t arg = 0;
        double best = -1.0;
        for (std::size_t r = 0; r < n; ++r)
            if (std::fabs(v(r, order[c])) > best) {
                best = std::fabs(v(r, order[c]));
                arg = r;
            }
        const double flip = v(arg, order[c]) < 0.0 ? -1.0 : 1.0;
        for (std::size_t r = 0; r < n; ++r) out.vectors(r, c) = flip * v(r, order[c]);
    }
    return out;
}

/// B^{-1} through the Cholesky factor; mirrored writes keep the result symmetric.
inline SymmetricMatrix spd_inverse(const SymmetricMatrix& b) {
    const std::size_t n = b.order();
    const Matrix linv = lower_triangular_inverse(cholesky_lower(b));
    SymmetricMatrix out(n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i <= j; ++i) {
            double acc = 0.0;
            for (std::size_t m = j; m < n; ++m) acc += linv(m, i) * linv(m, j);
            out.set(i, j, acc);
        }
    return out;
}

/// Symmetric inverse square root B^{-1/2} of a positive definite matrix.
inline Matrix spd_inverse_sqrt(const SymmetricMatrix& b) {
    const std::size_t n = b.order();
    const EigenDecomposition eig = jacobi_eigensolver(b);
    if (!(eig.values.back() > 0.0))
        throw std::domain_error("spd_inverse_sqrt: matrix not positive definite");
    Matrix out(n, n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i <= j; ++i) {
            double acc = 0.0;
            for (std::size_t m = 0; m < n; ++m)
                acc += eig.vectors(i, m) * eig.vectors(j, m) / std::sqrt(eig.values[m]);
            out(i, j) = acc;
            out(j, i) = acc;
        }
    return out;
}

struct ThinQr {
    Matrix q;  // d x n, orthonormal columns
    Matrix r;  // n x n, upper triangular
};

/// Householder QR, thin form. Requires d >= n.
inline ThinQr householder_qr(const Matrix& a) {
    const std::size_t d = a.rows(), n = a.cols();
    if (d < n) throw std::invalid_argument("householder_qr: requires rows >= cols");
    Matrix work = a;
    std::vector<std::vector<double>> reflectors;
    reflectors.reserve(n);
    for (std::size_t c = 0; c < n; ++c) {
        double norm = 0.0;
        for (std::size_t r = c; r < d; ++r) norm += work(r, c) * work(r, c);
        norm = std::sqrt(norm);
        std::vector<double> u(d - c, 0.0);
        if (norm > 0.0) {
            const double alpha = work(c, c) >= 0.0 ? -norm : norm;
            u[0] = work(c, c) - alpha;
            for (std::size_t r = c + 1; r < d; ++r) u[r - c] = work(r, c);
            double unorm = 0.0;
            for (double x : u) unorm += x * x;
            unorm = std::sqrt(unorm);
            if (unorm > 0.0) {
                for (double& x : u) x /= unorm;
                for (std::size_t j = c; j < n; ++j) {
                    double dot = 0.0;
                    for (std::size_t r = c; r < d; ++r) dot += u[r - c] * work(r, j);
                    for (std::size_t r = c; r < d; ++r) work(r, j) -= 2.0 * dot * u[r - c];
                }
            }
        }
        reflectors.push_back(std::move(u));
    }
    ThinQr out{Matrix(d, n), Matrix(n, n)};
    for (std::size_t c = 0; c < n; ++c)
        for (std::size_t r = 0; r <= c; ++r) out.r(r, c) = work(r, c);
    // Q = H_0 ... H_{n-1} applied to the first n identity columns.
    for (std::size_t c = 0; c < n; ++c) {
        std::vector<double> e(d, 0.0);
        e[c] = 1.0;
        for (std::size_t m = n; m-- > 0;) {
            const auto& u = reflectors[m];
            double dot = 0.0;
            for (std::size_t r = m; r < d; ++r) dot += u[r - m] * e[r];
            for (std::size_t r = m; r < d; ++r) e[r] -= 2.0 * dot * u[r - m];
        }
        for (std::size_t r = 0; r < d; ++r) out.q(r, c) = e[r];
    }
    return out;
}

}  // namespace randpivot
