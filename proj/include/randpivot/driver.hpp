#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "local_transform.hpp"
#include "matrix.hpp"
#include "metrics.hpp"
#include "pivoting.hpp"

namespace randpivot {

struct RunConfig {
    enum class Mode { one_sided, two_sided };

    Mode mode = Mode::two_sided;
    FactorizationKind kind = FactorizationKind::unitary;
    PairRule pair_rule = PairRule::none;
    std::string pivot = "random:k=2";
    double delta = 1e-8;          // target for the normalized off-diagonal RMS
    std::size_t max_iters = 0;    // 0 -> iteration_budget from the input
    std::uint64_t seed = 0;
    std::size_t trace_cadence = 0;  // 0 -> one expected sweep
};

/// Per-iteration observables. The expensive fields are computed only at the
/// trace cadence (plus t = 0 and the final t); `sampled` marks those records.
struct TraceRecord {
    std::size_t iter = 0;
    std::optional<PivotSet> pivot;  // absent on the final/converged record
    bool sampled = false;
    bool skipped = false;  // local factorization breakdown at this pivot
    double gamma = 0.0;
    double off_hat = 0.0;
    double kappa_hat = 0.0;
    double dist2_drift = 0.0;  // max normalized off-diagonal magnitude
    double reconstruction_residual = 0.0;
};

struct RunResult {
    Matrix output;                // Q (one-sided) or D (two-sided)
    Matrix t_acc;                 // A = Q T_acc  /  B = T_acc^T D T_acc
    std::vector<double> d_prime;  // diagonal of D (two-sided only)
    std::size_t iters_used = 0;
    bool converged = false;
    std::vector<TraceRecord> trace;
    double final_off_hat = 0.0;
    double final_gamma = 0.0;
    double final_kappa_hat = 0.0;
    double sup_kappa_hat = 0.0;
    double reconstruction_residual = 0.0;
    double d_prime_residual = 0.0;  // ||B - T_acc^T D' T_acc|| / ||B|| (two-sided)
};

/// Called with the state after t iterations; exactly one of a/b is non-null
/// depending on the mode.
using RunObserver = std::function<void(std::size_t t, const Matrix* a, const SymmetricMatrix* b)>;

/// Default iteration count: ceil( n(n-1)/(k(k-1)) * ln(4 n kappa_hat / delta^2) ).
inline std::size_t iteration_budget(std::size_t n, std::size_t k, double kappa_hat, double delta) {
    if (n < 2 || k < 2 || k > n)
        throw std::invalid_argument("iteration_budget: need n >= k >= 2");
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("iteration_budget: delta must be in (0,1)");
    if (!(kappa_hat >= 1.0))
        throw std::invalid_argument("iteration_budget: kappa_hat must be at least 1");
    const double prefactor = static_cast<double>(n) * static_cast<double>(n - 1) /
                             (static_cast<double>(k) * static_cast<double>(k - 1));
    const double arg = 4.0 * static_cast<double>(n) * kappa_hat / (delta * delta);
    return static_cast<std::size_t>(std::ceil(prefactor * std::log(arg)));
}

/// True when the normalized off-diagonal mass is at or below delta^2, i.e.
/// sqrt(sum_{i != j} b_ij^2 / (b_ii b_jj)) <= delta.
inline bool stopping_check(const SymmetricMatrix& state, double delta) {
    return off_frobenius(diagonal_normalize(state)) <= delta * delta;
}

namespace detail {

inline LocalTransform build_transform(const SymmetricMatrix& bjj, FactorizationKind kind,
                                      PairRule rule) {
    if (rule == PairRule::none) return make_local_transform(kind, bjj);
    if (bjj.order() != 2)
        throw std::invalid_argument("pair rule override requires pivot size 2");
    const double b00 = bjj(0, 0), b11 = bjj(1, 1);
    if (!(b00 > 0.0) || !(b11 > 0.0))
        throw std::domain_error("pair rule: nonpositive column norms in pivot block");
    const double alpha = bjj(0, 1) / std::sqrt(b00 * b11);
    LocalTransform lt = rule == PairRule::gs2      ? rule_gs2(alpha)
                        : rule == PairRule::nsvd2  ? rule_nsvd2(alpha)
                                                   : rule_nsvd2_twice(alpha);
    // Normalize the pivot columns first, then apply the unit-vector rule.
    const double d0 = 1.0 / std::sqrt(b00), d1 = 1.0 / std::sqrt(b11);
    lt.s(0, 0) *= d0;
    lt.s(0, 1) *= d0;
    lt.s(1, 0) *= d1;
    lt.s(1, 1) *= d1;
    return lt;
}

struct RunState {
    std::size_t n = 0;
    std::size_t k = 0;
    std::size_t budget = 0;
    std::size_t cadence = 0;
    PivotRule rule = PivotRule::random_k(2, 0);
};

inline RunState init_run(std::size_t n, double kappa0, const RunConfig& cfg) {
    RunState st;
    st.n = n;
    st.rule = PivotRule::parse(cfg.pivot, cfg.seed);
    st.k = st.rule.pivot_size();
    if (st.k > n) throw std::invalid_argument("run: pivot size exceeds matrix order");
    if (!(cfg.delta > 0.0 && cfg.delta < 1.0))
        throw std::invalid_argument("run: delta must be in (0,1)");
    st.budget = cfg.max_iters ? cfg.max_iters
                              : iteration_budget(n, st.k, std::max(kappa0, 1.0), cfg.delta);
    const double sweep = static_cast<double>(n) * static_cast<double>(n - 1) /
                         (static_cast<double>(st.k) * static_cast<double>(st.k - 1));
    st.cadence = cfg.trace_cadence ? cfg.trace_cadence
                                   : static_cast<std::size_t>(std::ceil(sweep));
    return st;
}

inline double max_normalized_offdiag(const SymmetricMatrix& bhat) {
    double worst = 0.0;
    for (std::size_t j = 0; j < bhat.order(); ++j)
        for (std::size_t i = 0; i < j; ++i) worst = std::max(worst, std::fabs(bhat(i, j)));
    return worst;
}

}  // namespace detail

/// One-sided engine: repeatedly orthogonalizes pivot column groups of A until
/// the Gram matrix of the current columns is close to diagonal. Returns
/// Q = A^(t) and T_acc with A = Q T_acc.
inline RunResult run_one_sided(const Matrix& a, const RunConfig& cfg,
                               const RunObserver& observer = {}) {
    const std::size_t d = a.rows(), n = a.cols();
    if (d < n || n < 2)
        throw std::invalid_argument("run_one_sided: need d >= n >= 2");

    const SymmetricMatrix g0 = gram(a);
    try {
        cholesky_lower(g0);
    } catch (const std::domain_error& e) {
        throw std::domain_error(std::string("run_one_sided: input does not have full column rank (") +
                                e.what() + ")");
    }
    // The budget formula needs kappa_hat of the input; skip the eigensolve
    // when an explicit iteration cap makes it irrelevant.
    const double kappa0 = cfg.max_iters ? 1.0 : potential_report(g0).kappa_hat;
    detail::RunState st = detail::init_run(n, kappa0, cfg);

    RunResult res;
    res.output = a;
    res.t_acc = Matrix::identity(n);
    const double a0_norm = a.frobenius_norm();
    std::size_t consecutive_skips = 0;
    res.sup_kappa_hat = 0.0;

    for (std::size_t t = 0;; ++t) {
        if (observer) observer(t, &res.output, nullptr);
        const bool budget_hit = t >= st.budget;
        const bool at_cadence = (t % st.cadence == 0) || budget_hit;
        TraceRecord rec;
        rec.iter = t;
        bool converged_now = false;
        if (at_cadence) {
            const SymmetricMatrix g = gram(res.output);
            const SymmetricMatrix ghat = diagonal_normalize(g);
            rec.sampled = true;
            rec.off_hat = off_frobenius(ghat);
            rec.gamma = gamma(g);
            rec.kappa_hat = kappa_hat(g);
            rec.dist2_drift = detail::max_normalized_offdiag(ghat);
            const Matrix recon = multiply(res.output, res.t_acc);
            double err = 0.0;
            for (std::size_t c = 0; c < n; ++c)
                for (std::size_t r = 0; r < d; ++r) {
                    const double dv = recon(r, c) - a(r, c);
                    err += dv * dv;
                }
            rec.reconstruction_residual = std::sqrt(err) / a0_norm;
            res.sup_kappa_hat = std::max(res.sup_kappa_hat, rec.kappa_hat);
            res.final_off_hat = rec.off_hat;
            res.final_gamma = rec.gamma;
            res.final_kappa_hat = rec.kappa_hat;
            res.reconstruction_residual = rec.reconstruction_residual;
            converged_now = rec.off_hat <= cfg.delta * cfg.delta;
        }
        if (converged_now || budget_hit) {
            res.iters_used = t;
            res.converged = converged_now;
            res.trace.push_back(rec);
            break;
        }

        const bool greedy = st.rule.needs_matrix();
        SymmetricMatrix gram_now(1);
        if (greedy) gram_now = gram(res.output);
        const PivotSet pivot = st.rule.next(n, greedy ? &gram_now : nullptr);
        rec.pivot = pivot;

        SymmetricMatrix bjj = gram(extract_columns(res.output, pivot));
        try {
            const LocalTransform lt = detail::build_transform(bjj, cfg.kind, cfg.pair_rule);
            apply_one_sided_update(res.output, pivot, lt.s);
            accumulate_transform(res.t_acc, pivot, lt.s);
            consecutive_skips = 0;
        } catch (const std::domain_error& e) {
            rec.skipped = true;
            if (++consecutive_skips >= n)
                throw std::domain_error("run_one_sided: " + std::to_string(n) +
                                        " consecutive breakdowns, last at pivot " +
                                        pivot.to_string() + ": " + e.what());
        }
        res.trace.push_back(rec);
    }
    return res;
}

/// Two-sided engine: congruence updates of an SPD matrix B until it is close
/// to diagonal in the normalized sense. Returns D = B^(t) and T_acc with
/// B = T_acc^T D T_acc.
inline RunResult run_two_sided(const SymmetricMatrix& b, const RunConfig& cfg,
                               const RunObserver& observer = {}) {
    const std::size_t n = b.order();
    if (n < 2) throw std::invalid_argument("run_two_sided: need n >= 2");
    try {
        cholesky_lower(b);
    } catch (const std::domain_error& e) {
        throw std::domain_error(std::string("run_two_sided: input not positive definite (") +
                                e.what() + ")");
    }
    const double kappa0 = cfg.max_iters ? 1.0 : potential_report(b).kappa_hat;
    detail::RunState st = detail::init_run(n, kappa0, cfg);

    RunResult res;
    SymmetricMatrix work = b;
    res.t_acc = Matrix::identity(n);
    const double b0_norm = b.frobenius_norm();
    std::size_t consecutive_skips = 0;

    for (std::size_t t = 0;; ++t) {
        if (observer) observer(t, nullptr, &work);
        const bool budget_hit = t >= st.budget;
        const bool at_cadence = (t % st.cadence == 0) || budget_hit;
        TraceRecord rec;
        rec.iter = t;
        bool converged_now = false;
        if (at_cadence) {
            const SymmetricMatrix bhat = diagonal_normalize(work);
            rec.sampled = true;
            rec.off_hat = off_frobenius(bhat);
            rec.gamma = gamma(work);
            rec.kappa_hat = kappa_hat(work);
            rec.dist2_drift = detail::max_normalized_offdiag(bhat);
            // residual of B = T_acc^T B^(t) T_acc
            const Matrix recon =
                multiply(transpose(res.t_acc), multiply(work.as_matrix(), res.t_acc));
            double err = 0.0;
            for (std::size_t c = 0; c < n; ++c)
                for (std::size_t r = 0; r < n; ++r) {
                    const double dv = recon(r, c) - b(r, c);
                    err += dv * dv;
                }
            rec.reconstruction_residual = std::sqrt(err) / b0_norm;
            res.sup_kappa_hat = std::max(res.sup_kappa_hat, rec.kappa_hat);
            res.final_off_hat = rec.off_hat;
            res.final_gamma = rec.gamma;
            res.final_kappa_hat = rec.kappa_hat;
            res.reconstruction_residual = rec.reconstruction_residual;
            converged_now = rec.off_hat <= cfg.delta * cfg.delta;
        }
        if (converged_now || budget_hit) {
            res.iters_used = t;
            res.converged = converged_now;
            res.trace.push_back(rec);
            break;
        }

        const PivotSet pivot =
            st.rule.next(n, st.rule.needs_matrix() ? &work : nullptr);
        rec.pivot = pivot;

        const SymmetricMatrix bjj = extract_principal_submatrix(work, pivot);
        try {
            const LocalTransform lt = detail::build_transform(bjj, cfg.kind, cfg.pair_rule);
            apply_two_sided_update(work, pivot, lt.s);
            accumulate_transform(res.t_acc, pivot, lt.s);
            consecutive_skips = 0;
        } catch (const std::domain_error& e) {
            rec.skipped = true;
            if (++consecutive_skips >= n)
                throw std::domain_error("run_two_sided: " + std::to_string(n) +
                                        " consecutive breakdowns, last at pivot " +
                                        pivot.to_string() + ": " + e.what());
        }
        res.trace.push_back(rec);
    }

    res.output = work.as_matrix();
    res.d_prime.resize(n);
    for (std::size_t i = 0; i < n; ++i) res.d_prime[i] = work(i, i);
    {
        // Residual against the diagonal-only factorization B ~ T^T D' T.
        Matrix dt(n, n);
        for (std::size_t c = 0; c < n; ++c)
            for (std::size_t r = 0; r < n; ++r) dt(r, c) = res.d_prime[r] * res.t_acc(r, c);
        const Matrix recon = multiply(transpose(res.t_acc), dt);
        double err = 0.0;
        for (std::size_t c = 0; c < n; ++c)
            for (std::size_t r = 0; r < n; ++r) {
                const double dv = recon(r, c) - b(r, c);
                err += dv * dv;
            }
        res.d_prime_residual = std::sqrt(err) / b0_norm;
    }
    return res;
}

}  // namespace randpivot
